//! Split evaluation of dual-lattice sums.
//!
//! A sum `Σ_k f(βε_k - βμ) Π_ν cos(k_ν X_ν)` is cut into a finite box of low
//! modes, summed with the exact Bose factor, and the remaining modes, summed
//! through the cycle expansion
//!
//! ```text
//! (1/V) Σ_j w(j) e^{jβμ} R_j,   R_j = Π_ν θ₃(u_ν, q_ν^j) - Π_ν P_ν(j)
//! ```
//!
//! where `P_ν` is the partial θ-sum over `|n_ν| ≤ N_ν`. Every mode outside the
//! box has `βε ≥ gap`, so `R_{j+1}(0) ≤ e^{-gap} R_j(0)` and the j-series has
//! a geometric tail bound with ratio `e^{βμ - gap}`. With an empty box
//! (`low = None`) this is the plain cycle expansion.

use crate::numerics::theta;
use crate::numerics::{CompensatedSum, SeriesResult, Tolerance};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Weight {
    /// `1/(e^x - 1)`; cycle weight 1.
    Density,
    /// `-ln(1 - e^{-x})`; cycle weight 1/j.
    Pressure,
    /// `∂/∂(βμ)` of the density: `e^x/(e^x - 1)²`; cycle weight j.
    Slope,
}

impl Weight {
    #[inline]
    fn cycle(self, j: f64) -> f64 {
        match self {
            Weight::Density => 1.0,
            Weight::Pressure => 1.0 / j,
            Weight::Slope => j,
        }
    }

    #[inline]
    fn bose(self, x: f64) -> f64 {
        match self {
            Weight::Density => 1.0 / x.exp_m1(),
            Weight::Pressure => -(-(-x).exp_m1()).ln(),
            Weight::Slope => 1.0 / (x.exp_m1() * -(-x).exp_m1()),
        }
    }

    /// `Σ_{m≥0} (w(j+m)/w(j)) r^m` bounded from above.
    #[inline]
    fn tail_factor(self, r: f64, j: f64) -> f64 {
        let g = 1.0 / (1.0 - r);
        match self {
            Weight::Density | Weight::Pressure => g,
            Weight::Slope => g + r * g * g / j,
        }
    }
}

/// Dimensionless lattice data: `a_ν = πλ²/L_ν²` and the volume.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Lattice {
    pub stiffness: [f64; 3],
    pub volume: f64,
}

/// The low-mode box `|n_ν| ≤ N_ν` and the smallest energy outside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LowModeBox {
    pub half_widths: [u64; 3],
    pub gap: f64,
}

impl LowModeBox {
    pub fn new(stiffness: [f64; 3], half_widths: [u64; 3]) -> Self {
        let gap = (0..3)
            .map(|i| {
                let n = half_widths[i] as f64 + 1.0;
                stiffness[i] * n * n
            })
            .fold(f64::INFINITY, f64::min);
        Self { half_widths, gap }
    }

    /// Pick the box minimising a rough operation count: the j-series needs
    /// about `40/(gap + |βμ|)` terms, each costing `Σ N_ν` operations, while
    /// the box itself costs `Π (N_ν + 1)` Bose factors.
    pub fn choose(stiffness: [f64; 3], beta_mu: f64) -> Self {
        let m = -beta_mu;
        let mut best = (f64::INFINITY, Self::new(stiffness, [0, 0, 0]));
        for i in 0..=90 {
            let c = 1e-7 * 10f64.powf(i as f64 / 10.0);
            let hw = stiffness.map(|a| (c / a).sqrt().floor().min(1e6) as u64);
            let count: f64 = hw.iter().map(|&n| (n + 1) as f64).product();
            if count > 4e6 {
                continue;
            }
            let cand = Self::new(stiffness, hw);
            let terms = (40.0 / (cand.gap + m)).min(1e9);
            let per_term: f64 = hw.iter().map(|&n| n as f64 + 4.0).sum::<f64>() + 12.0;
            let cost = terms * per_term + 3.0 * count;
            if cost < best.0 {
                best = (cost, cand);
            }
        }
        best.1
    }
}

/// θ₃ on one axis split into the low-box partial sum and the rest.
#[derive(Debug, Clone, Copy)]
struct AxisParts {
    partial: f64,
    rest: f64,
}

impl AxisParts {
    fn full(&self) -> f64 {
        self.partial + self.rest
    }
}

fn axis_parts(a: f64, j: f64, u: f64, half_width: Option<u64>) -> AxisParts {
    let ja = j * a;
    let Some(n_box) = half_width else {
        let full = if ja >= PI {
            theta::direct(u, (-ja).exp()).value
        } else {
            theta::dual(u, ja / PI).value
        };
        return AxisParts { partial: 0.0, rest: full };
    };
    let q = (-ja).exp();
    if ja >= PI {
        // Direct branch: split the q-series at n_box.
        let mut partial = 1.0;
        let mut rest = 0.0;
        let mut power = 1.0;
        let mut ratio = q;
        let c1 = (2.0 * u).cos();
        let (mut c_prev, mut c_cur) = (1.0, c1);
        let mut n: u64 = 0;
        loop {
            n += 1;
            power *= ratio;
            ratio *= q * q;
            let t = 2.0 * power * c_cur;
            if n <= n_box {
                partial += t;
            } else {
                rest += t;
                if power <= f64::EPSILON * 1e-3 * (partial.abs() + rest.abs()) || power == 0.0 {
                    break;
                }
            }
            let next = 2.0 * c1 * c_cur - c_prev;
            c_prev = c_cur;
            c_cur = next;
        }
        AxisParts { partial, rest }
    } else {
        let full = theta::dual(u, ja / PI).value;
        let partial = partial_theta(q, u, n_box);
        AxisParts {
            partial,
            rest: full - partial,
        }
    }
}

/// `1 + 2 Σ_{n=1}^{N} q^{n²} cos(2nu)`.
fn partial_theta(q: f64, u: f64, n_box: u64) -> f64 {
    let mut sum = 1.0;
    let mut power = 1.0;
    let mut ratio = q;
    let c1 = (2.0 * u).cos();
    let (mut c_prev, mut c_cur) = (1.0, c1);
    for _ in 0..n_box {
        power *= ratio;
        ratio *= q * q;
        if power == 0.0 {
            break;
        }
        sum += 2.0 * power * c_cur;
        let next = 2.0 * c1 * c_cur - c_prev;
        c_prev = c_cur;
        c_cur = next;
    }
    sum
}

/// `Π θ - Π P` expanded so every piece carries one `rest` factor.
#[inline]
fn remainder(p: &[AxisParts; 3]) -> f64 {
    p[0].rest * p[1].full() * p[2].full()
        + p[0].partial * p[1].rest * p[2].full()
        + p[0].partial * p[1].partial * p[2].rest
}

/// `R_j` at the given phases and at zero phase (the latter bounds the former).
pub(crate) fn cycle_remainder(
    lat: &Lattice,
    j: u64,
    phases: [f64; 3],
    low: Option<&LowModeBox>,
) -> (f64, f64) {
    let jf = j as f64;
    let hw = |i: usize| low.map(|b| b.half_widths[i]);
    let at_zero = [0, 1, 2].map(|i| axis_parts(lat.stiffness[i], jf, 0.0, hw(i)));
    let r0 = remainder(&at_zero).max(0.0);
    if phases.iter().all(|&u| u == 0.0) {
        return (r0, r0);
    }
    let at_phase = [0, 1, 2].map(|i| {
        if phases[i] == 0.0 {
            at_zero[i]
        } else {
            axis_parts(lat.stiffness[i], jf, phases[i], hw(i))
        }
    });
    (remainder(&at_phase), r0)
}

/// `(1/V) Σ_{j=from}^{to} w(j) e^{jβμ} R_j`, stopping early once the
/// geometric bound on the rest of the (infinite) series meets `tol`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn cycle_sum(
    lat: &Lattice,
    beta_mu: f64,
    phases: [f64; 3],
    weight: Weight,
    low: Option<&LowModeBox>,
    from: u64,
    to: u64,
    tol: Tolerance,
    max_terms: u64,
) -> SeriesResult {
    let from = from.max(1);
    if to < from {
        return SeriesResult::exact(0.0);
    }
    let gap = low.map_or(0.0, |b| b.gap);
    let ratio = (beta_mu - gap).exp();
    let mut sum = CompensatedSum::default();
    let mut abs_sum = 0.0;
    let mut bound;
    let mut j = from;
    let mut terms = 0u64;
    loop {
        let jf = j as f64;
        let (r, r0) = cycle_remainder(lat, j, phases, low);
        let fug = (jf * beta_mu).exp();
        let term = weight.cycle(jf) * fug * r / lat.volume;
        sum.add(term);
        abs_sum += term.abs();
        terms += 1;
        if j == to {
            bound = 0.0;
            break;
        }
        let next = jf + 1.0;
        bound = weight.cycle(next) * fug * beta_mu.exp() * r0 * (-gap).exp() / lat.volume
            * weight.tail_factor(ratio, next);
        if tol.met(bound, sum.value()) || terms >= max_terms {
            break;
        }
        j += 1;
    }
    let rounding = 16.0 * f64::EPSILON * abs_sum;
    SeriesResult::new(sum.value(), bound + rounding, terms)
}

/// Exact sum over the low-mode box: `(1/V) Σ_k Π cos(2 n_ν u_ν) f(x_k)` with
/// `x_k = βε_k - βμ`. With `cycles = Some((a, b))` the Bose factor is replaced
/// by the truncated geometric series `Σ_{j=a}^{b} e^{-j x}` (density weight).
pub(crate) fn low_mode_sum(
    lat: &Lattice,
    beta_mu: f64,
    phases: [f64; 3],
    weight: Weight,
    low: &LowModeBox,
    cycles: Option<(u64, u64)>,
) -> f64 {
    let [n1, n2, n3] = low.half_widths;
    let [a1, a2, a3] = lat.stiffness;
    let factor = |x: f64| -> f64 {
        match cycles {
            None => weight.bose(x),
            Some((from, to)) => geometric_window(x, from, to),
        }
    };
    let phase = |u: f64, n: u64| if u == 0.0 { 1.0 } else { (2.0 * n as f64 * u).cos() };
    let mut total = CompensatedSum::default();
    for i in 0..=n1 {
        let e1 = a1 * (i * i) as f64;
        let w1 = if i == 0 { 1.0 } else { 2.0 } * phase(phases[0], i);
        let mut s2 = 0.0;
        for k in 0..=n2 {
            let e2 = e1 + a2 * (k * k) as f64;
            let w2 = if k == 0 { 1.0 } else { 2.0 } * phase(phases[1], k);
            let mut s3 = 0.0;
            for l in 0..=n3 {
                let e3 = e2 + a3 * (l * l) as f64;
                let w3 = if l == 0 { 1.0 } else { 2.0 } * phase(phases[2], l);
                s3 += w3 * factor(e3 - beta_mu);
            }
            s2 += w2 * s3;
        }
        total.add(w1 * s2);
    }
    total.value() / lat.volume
}

/// `Σ_{j=from}^{to} e^{-j x}` for `x > 0`; `to = u64::MAX` means no upper end.
pub(crate) fn geometric_window(x: f64, from: u64, to: u64) -> f64 {
    let from = from.max(1);
    if to < from {
        return 0.0;
    }
    let head = (-(from as f64) * x).exp();
    let denom = -(-x).exp_m1();
    if to == u64::MAX {
        head / denom
    } else {
        let count = (to - from + 1) as f64;
        head * -(-count * x).exp_m1() / denom
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice(alpha: [f64; 3], v: f64) -> Lattice {
        Lattice {
            stiffness: alpha.map(|a| PI / v.powf(2.0 * a)),
            volume: v,
        }
    }

    #[test]
    fn geometric_window_matches_loop() {
        let x = 0.013;
        let direct: f64 = (7..=900).map(|j| (-(j as f64) * x).exp()).sum();
        assert!((geometric_window(x, 7, 900) / direct - 1.0).abs() < 1e-13);
        let inf: f64 = (1..=20_000).map(|j| (-(j as f64) * x).exp()).sum();
        assert!((geometric_window(x, 1, u64::MAX) / inf - 1.0).abs() < 1e-13);
    }

    #[test]
    fn split_is_independent_of_box() {
        let lat = lattice([0.5, 0.3, 0.2], 2000.0);
        let beta_mu = -0.02;
        let tol = Tolerance::new(0.0, 1e-15);
        let mut values = vec![];
        for hw in [[0, 0, 0], [3, 1, 1], [10, 4, 2], [25, 0, 3]] {
            let b = LowModeBox::new(lat.stiffness, hw);
            for phases in [[0.0; 3], [0.3, 0.0, 1.0]] {
                let low = low_mode_sum(&lat, beta_mu, phases, Weight::Density, &b, None);
                let cyc = cycle_sum(&lat, beta_mu, phases, Weight::Density, Some(&b), 1, u64::MAX, tol, u64::MAX);
                values.push((phases, low + cyc.value));
            }
        }
        let pure = cycle_sum(&lat, beta_mu, [0.0; 3], Weight::Density, None, 1, u64::MAX, tol, u64::MAX);
        for (phases, v) in values {
            if phases[0] == 0.0 {
                assert!((v / pure.value - 1.0).abs() < 1e-12, "{v} vs {}", pure.value);
            }
        }
    }

    #[test]
    fn chosen_box_has_positive_gap() {
        let lat = lattice([0.6, 0.2, 0.2], 1e6);
        let b = LowModeBox::choose(lat.stiffness, -1e-5);
        assert!(b.gap > 0.0);
        assert!(b.half_widths[0] >= b.half_widths[1]);
    }
}
