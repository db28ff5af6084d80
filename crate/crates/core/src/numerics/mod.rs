//! Special functions shared by the physics modules.
//!
//! Every truncated infinite sum is returned as a [`SeriesResult`] carrying an
//! analytic bound on the neglected part, so downstream comparisons can be made
//! against certified tolerances instead of guessed ones.

mod lattice_sum;
mod polylog;
mod special;
pub(crate) mod theta;

use serde::{Deserialize, Serialize};

pub use lattice_sum::{lattice_lorentz_sum, lattice_lorentz_sum_direct};
pub use polylog::{bose_partial_sum, bose_tail_sum, polylog};
pub use special::{erf_std, erfc_std, upper_incomplete_gamma};
pub use theta::{theta3, theta3_direct, theta3_dual, theta3_series, THETA_CROSSOVER};

/// A truncated series: `value` is within `tail_bound` of the infinite sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesResult {
    pub value: f64,
    pub tail_bound: f64,
    pub terms_used: u64,
}

impl SeriesResult {
    pub fn new(value: f64, tail_bound: f64, terms_used: u64) -> Self {
        debug_assert!(tail_bound >= 0.0);
        Self {
            value,
            tail_bound,
            terms_used: terms_used.max(1),
        }
    }

    pub fn exact(value: f64) -> Self {
        Self::new(value, 0.0, 1)
    }

    /// Whether `other` is compatible with this result given both error bounds
    /// plus an additional slack.
    pub fn agrees_with(&self, other: &SeriesResult, slack: f64) -> bool {
        (self.value - other.value).abs() <= self.tail_bound + other.tail_bound + slack
    }
}

/// Stopping rule for truncated sums: stop once the tail bound drops below
/// `max(abs, rel * |partial|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-14,
            rel: 1e-12,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    /// A rule that keeps summing until the tail is negligible in double precision.
    pub fn machine() -> Self {
        Self {
            abs: 0.0,
            rel: f64::EPSILON / 4.0,
        }
    }

    #[inline]
    pub fn target(&self, partial: f64) -> f64 {
        self.abs.max(self.rel * partial.abs())
    }

    #[inline]
    pub fn met(&self, bound: f64, partial: f64) -> bool {
        bound <= self.target(partial)
    }
}

/// Neumaier-compensated running sum; long cycle series would otherwise lose
/// digits to accumulated rounding.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}
