//! Jacobi θ₃ on the real line, `θ₃(u, q) = Σ_{n∈ℤ} q^{n²} e^{2inu}`.
//!
//! Two branches:
//! * direct: `1 + 2 Σ_{n≥1} q^{n²} cos(2nu)`, used for `q ≤ e^{-π}`;
//! * dual (Poisson resummed): with `q = e^{-πt}`,
//!   `θ₃(u, q) = t^{-1/2} Σ_{m∈ℤ} exp(-π (m - u/π)² / t)`, used for `q > e^{-π}`.
//!
//! At the crossover both converge at least as fast as powers of `e^{-π}`.

use super::SeriesResult;
use crate::error::{Error, Result};
use std::f64::consts::PI;

/// `e^{-π}`: the direct series is used at or below this nome.
pub const THETA_CROSSOVER: f64 = 0.043_213_918_263_772_25;

fn check_nome(q: f64) -> Result<()> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::domain("theta3", format!("nome q = {q} outside [0, 1)")));
    }
    Ok(())
}

/// θ₃(u, q) with automatic branch selection.
pub fn theta3(u: f64, q: f64) -> Result<f64> {
    theta3_series(u, q).map(|r| r.value)
}

/// θ₃(u, q) together with its truncation bound.
pub fn theta3_series(u: f64, q: f64) -> Result<SeriesResult> {
    check_nome(q)?;
    if q <= THETA_CROSSOVER {
        Ok(direct(u, q))
    } else {
        Ok(dual(u, -q.ln() / PI))
    }
}

/// Direct q-series, regardless of how close `q` is to 1.
pub fn theta3_direct(u: f64, q: f64) -> Result<SeriesResult> {
    check_nome(q)?;
    Ok(direct(u, q))
}

/// Poisson-dual series; requires `0 < q < 1`.
pub fn theta3_dual(u: f64, q: f64) -> Result<SeriesResult> {
    check_nome(q)?;
    if q == 0.0 {
        return Err(Error::domain("theta3_dual", "dual series needs q > 0"));
    }
    Ok(dual(u, -q.ln() / PI))
}

/// θ₃(u, e^{-a}) for `a > 0`, picking the branch from `a` so that nomes
/// close to 1 never lose precision through `e^{-a}`.
pub(crate) fn direct_or_dual(u: f64, a: f64) -> f64 {
    if a >= PI {
        direct(u, (-a).exp()).value
    } else {
        dual(u, a / PI).value
    }
}

pub(crate) fn direct(u: f64, q: f64) -> SeriesResult {
    if q == 0.0 {
        return SeriesResult::exact(1.0);
    }
    let mut sum = 1.0;
    let mut abs_sum = 1.0;
    // q^{n²} updated by the ratio q^{2n+1}.
    let mut power = 1.0;
    let mut ratio = q;
    let (mut c_prev, mut c_cur) = (1.0, (2.0 * u).cos());
    let two_cos = 2.0 * c_cur;
    let mut n: u64 = 0;
    loop {
        n += 1;
        power *= ratio;
        ratio *= q * q;
        let t = 2.0 * power;
        sum += t * c_cur;
        abs_sum += t;
        let next = two_cos * c_cur - c_prev;
        c_prev = c_cur;
        c_cur = next;
        // 2 Σ_{m>n} q^{m²} ≤ 2 q^{(n+1)²} / (1 - q^{2n+3})
        let next_power = power * ratio;
        let bound = 2.0 * next_power / (1.0 - ratio * q * q);
        if bound <= f64::EPSILON * 0.25 * sum.abs() || next_power == 0.0 {
            let rounding = 2.0 * f64::EPSILON * abs_sum;
            return SeriesResult::new(sum, bound + rounding, n + 1);
        }
    }
}

/// Dual series in terms of `t = -ln(q)/π > 0`.
pub(crate) fn dual(u: f64, t: f64) -> SeriesResult {
    // Shift u/π into [-1/2, 1/2]; θ₃ has period π in u.
    let w = {
        let x = u / PI;
        x - x.round()
    };
    let scale = PI / t;
    let mut sum = (-scale * w * w).exp();
    let mut m: u64 = 0;
    loop {
        m += 1;
        let mf = m as f64;
        let left = (-scale * (mf + w) * (mf + w)).exp();
        let right = (-scale * (mf - w) * (mf - w)).exp();
        sum += left + right;
        // Remaining distances are ≥ d = m + 1/2; Gaussian terms at spacing 1
        // are bounded by 2 e^{-s d²} / (1 - e^{-2 s d}).
        let d = mf + 0.5;
        let bound = 2.0 * (-scale * d * d).exp() / (1.0 - (-2.0 * scale * d).exp());
        if bound <= f64::EPSILON * 0.25 * sum || bound == 0.0 {
            let value = sum / t.sqrt();
            let tail = bound / t.sqrt() + 2.0 * f64::EPSILON * value;
            return SeriesResult::new(value, tail, 2 * m + 1);
        }
    }
}
