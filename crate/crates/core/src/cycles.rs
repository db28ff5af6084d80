//! Cycle-length statistics.
//!
//! In the cycle expansion the density splits as `ρ_Λ = Σ_j ρ_{Λ,j}` with
//!
//! ```text
//! ρ_{Λ,j} = (1/V) e^{jβμ} Π_ν θ₃(0, e^{-j πλ²/L_ν²}),
//! ```
//!
//! the density of particles sitting in permutation cycles of length `j`.
//! Each term dominates its bulk value `e^{jβμ}/(λ³ j^{3/2})`; the surplus,
//! called here the excess cycle density, sums to `ρ_Λ - g_{3/2}(e^{βμ})/λ³`
//! and is where the condensate lives.

use crate::box_model::{
    lattice, solve_chemical_potential, split, Anisotropy, BoxGeometry, GasState, ModeIndex,
};
use crate::box_model::mode_energy_beta;
use crate::condensate::{critical_density, implied_series, CondensateConstants, Regime};
use crate::error::{Error, Result};
use crate::numerics::{bose_partial_sum, bose_tail_sum, erf_std, theta, SeriesResult, Tolerance};
use crate::scaling::{fit, run_sweep, sweep, ScalingSeries};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Fit tolerance for cycle-density series, relative to the total density.
const FIT_TOL: f64 = 1e-3;
const WINDOW_TOL: Tolerance = Tolerance {
    abs: 0.0,
    rel: 1e-14,
};
/// Candidate exponents for the cycle hierarchy.
pub const DELTA_GRID: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
/// Largest relative shortfall from ρ0 a capturing scale may show.
pub const CAPTURE_TOL: f64 = 0.05;
/// Half-width, in decades, of the capture window around `V^δ*`.
const CAPTURE_DECADES: i32 = 4;

/// `ρ_{Λ,j}` for one cycle length.
pub fn cycle_density(state: &GasState, geom: &BoxGeometry, j: u64) -> Result<f64> {
    if j < 1 {
        return Err(Error::domain("cycle_density", "cycle length must be at least 1"));
    }
    let jf = j as f64;
    let theta: f64 = geom
        .stiffness(state.lambda())
        .iter()
        .map(|&a| theta::direct_or_dual(0.0, jf * a))
        .product();
    Ok((jf * state.beta_mu()).exp() * theta / geom.volume())
}

/// Contribution of cycles of length `j` to the density of mode `n`:
/// `(1/V) e^{j(βμ - βε)}`. Summed over `j` it gives the mode density.
pub fn mode_cycle_density(state: &GasState, geom: &BoxGeometry, n: ModeIndex, j: u64) -> f64 {
    let x = mode_energy_beta(geom, state.lambda(), n) - state.beta_mu();
    (-(j as f64) * x).exp() / geom.volume()
}

/// `ρ_{Λ,j}` for `j = 1..=J_max` plus the density in longer cycles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSpectrum {
    pub volume: f64,
    pub beta_mu: f64,
    pub densities: Vec<f64>,
    /// Upper bound on `Σ_{j > J_max} ρ_{Λ,j}`.
    pub tail_bound: f64,
}

impl CycleSpectrum {
    pub fn j_max(&self) -> usize {
        self.densities.len()
    }
}

pub fn cycle_spectrum(state: &GasState, geom: &BoxGeometry, j_max: u64) -> Result<CycleSpectrum> {
    if j_max < 1 {
        return Err(Error::domain("cycle_spectrum", "J_max must be at least 1"));
    }
    let densities = (1..=j_max)
        .map(|j| cycle_density(state, geom, j))
        .collect::<Result<Vec<_>>>()?;
    let rest = window_sum(state, geom, j_max + 1, u64::MAX);
    Ok(CycleSpectrum {
        volume: geom.volume(),
        beta_mu: state.beta_mu(),
        densities,
        tail_bound: rest.value + rest.tail_bound,
    })
}

/// `Σ_{j=from}^{to} ρ_{Λ,j}`; `to = u64::MAX` sums to infinity.
///
/// Low modes contribute closed-form geometric sums, the rest the remainder
/// series of the split evaluator, so the cost does not grow with `to`.
pub fn window_sum(state: &GasState, geom: &BoxGeometry, from: u64, to: u64) -> SeriesResult {
    let from = from.max(1);
    if to < from {
        return SeriesResult::exact(0.0);
    }
    let lat = lattice(geom, state.lambda());
    let low = split::LowModeBox::choose(lat.stiffness, state.beta_mu());
    let w = split::Weight::Density;
    let head = split::low_mode_sum(&lat, state.beta_mu(), [0.0; 3], w, &low, Some((from, to)));
    let rest = split::cycle_sum(&lat, state.beta_mu(), [0.0; 3], w, Some(&low), from, to, WINDOW_TOL, u64::MAX);
    let rounding = 4.0 * f64::EPSILON * head.abs();
    SeriesResult::new(head + rest.value, rest.tail_bound + rounding, rest.terms_used)
}

/// `Σ_{j=from}^{to} e^{jβμ}/(λ³ j^{3/2})`: the same window in the bulk.
fn bulk_window_sum(state: &GasState, from: u64, to: u64) -> Result<f64> {
    let l3 = state.lambda().powi(3);
    let a = -state.beta_mu();
    let s = if to == u64::MAX {
        bose_tail_sum(1.5, a, from)?
    } else {
        bose_partial_sum(1.5, a, from, to)?
    };
    Ok(s.value / l3)
}

/// Excess (condensate) cycle density in the window `[from, to]`.
pub fn excess_window_sum(state: &GasState, geom: &BoxGeometry, from: u64, to: u64) -> Result<f64> {
    Ok(window_sum(state, geom, from, to).value - bulk_window_sum(state, from, to)?)
}

/// Cycle lengths `[x·V^δ, y·V^δ]`, rounded outward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleWindow {
    /// Exponent of the scale `λ(V) = V^δ`.
    pub delta: f64,
    pub x: f64,
    pub y: f64,
}

impl CycleWindow {
    pub fn new(delta: f64, x: f64, y: f64) -> Result<Self> {
        if !(x > 0.0 && y > x) || !y.is_finite() || !delta.is_finite() {
            return Err(Error::domain(
                "CycleWindow",
                format!("need 0 < x < y, got x = {x}, y = {y}"),
            ));
        }
        Ok(Self { delta, x, y })
    }

    pub fn scale(&self, v: f64) -> f64 {
        v.powf(self.delta)
    }

    /// Integer bounds `[⌊xλ(V)⌋, ⌈yλ(V)⌉]`, the lower one at least 1.
    /// A window lying entirely below length 1 is empty.
    pub fn bounds(&self, v: f64) -> Result<(u64, u64)> {
        let s = self.scale(v);
        if self.y * s < 1.0 {
            return Err(Error::EmptyWindow {
                volume: v,
                lower: self.x * s,
                upper: self.y * s,
            });
        }
        let hi = (self.y * s).ceil();
        let lo = (self.x * s).floor().max(1.0);
        let to = if hi >= u64::MAX as f64 { u64::MAX } else { hi as u64 };
        Ok((lo as u64, to))
    }
}

fn solve_at(alpha: &Anisotropy, lambda: f64, rho: f64, v: f64) -> Result<(BoxGeometry, GasState)> {
    let geom = BoxGeometry::new(*alpha, v)?;
    let tp = solve_chemical_potential(&geom, lambda, rho)?;
    Ok((geom, tp.state()))
}

/// Density in cycles of length at most `M`, and its `M → ∞` limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortCycleDensity {
    pub m: u64,
    /// `Σ_{j ≤ M} ρ_{Λ,j}` per volume.
    pub truncated: ScalingSeries,
    /// `g_{3/2}(e^{βμ̄})/λ³` per volume; its limit is the short-cycle density.
    pub unbounded: ScalingSeries,
}

pub fn short_cycle_density(
    alpha: &Anisotropy,
    lambda: f64,
    rho: f64,
    volumes: &[f64],
    m: u64,
) -> Result<ShortCycleDensity> {
    if m < 1 {
        return Err(Error::domain("short_cycle_density", "M must be at least 1"));
    }
    let samples = sweep(
        |v| {
            let (geom, state) = solve_at(alpha, lambda, rho, v)?;
            Ok((window_sum(&state, &geom, 1, m).value, bulk_window_sum(&state, 1, u64::MAX)?))
        },
        volumes,
    );
    let (truncated, unbounded) = unzip_samples(volumes, samples)?;
    Ok(ShortCycleDensity {
        m,
        truncated: fit(volumes, &truncated, FIT_TOL * rho)?,
        unbounded: fit(volumes, &unbounded, FIT_TOL * rho)?,
    })
}

fn unzip_samples(volumes: &[f64], samples: Vec<Result<(f64, f64)>>) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut a = Vec::with_capacity(samples.len());
    let mut b = Vec::with_capacity(samples.len());
    for (v, s) in volumes.iter().zip(samples) {
        match s {
            Ok((x, y)) => {
                a.push(x);
                b.push(y);
            }
            Err(e) => {
                return Err(Error::Sweep {
                    volume: *v,
                    source: Box::new(e),
                    partial: volumes.iter().copied().zip(a).collect(),
                })
            }
        }
    }
    Ok((a, b))
}

/// `ρ - g_{3/2}(e^{βμ̄})/λ³` per volume: the density left once every
/// finite cycle length has been accounted for at its bulk value.
pub fn long_cycle_density(alpha: &Anisotropy, lambda: f64, rho: f64, volumes: &[f64]) -> Result<ScalingSeries> {
    run_sweep(
        |v| {
            let (_, state) = solve_at(alpha, lambda, rho, v)?;
            Ok(rho - bulk_window_sum(&state, 1, u64::MAX)?)
        },
        volumes,
        FIT_TOL * rho,
    )
}

/// `Σ_{j ∈ window} ρ_{Λ,j}` per volume.
pub fn windowed_cycle_density(
    alpha: &Anisotropy,
    lambda: f64,
    rho: f64,
    window: CycleWindow,
    volumes: &[f64],
) -> Result<ScalingSeries> {
    run_sweep(
        |v| {
            let (from, to) = window.bounds(v)?;
            let (geom, state) = solve_at(alpha, lambda, rho, v)?;
            Ok(window_sum(&state, &geom, from, to).value)
        },
        volumes,
        FIT_TOL * rho,
    )
}

/// Same as [`windowed_cycle_density`] for the excess cycle density.
pub fn windowed_excess_density(
    alpha: &Anisotropy,
    lambda: f64,
    rho: f64,
    window: CycleWindow,
    volumes: &[f64],
) -> Result<ScalingSeries> {
    run_sweep(
        |v| {
            let (from, to) = window.bounds(v)?;
            let (geom, state) = solve_at(alpha, lambda, rho, v)?;
            excess_window_sum(&state, &geom, from, to)
        },
        volumes,
        FIT_TOL * rho,
    )
}

/// Infinite-volume density in cycles of length `[x V^δ, y V^δ]`.
///
/// At the regime's own scale (`δ = 1` for types I and II, `δ = 2(1 - α1)`
/// for type III) the cycles of the condensate fill the window as
///
/// * I:   `ρ0 (e^{-xA} - e^{-yA})`
/// * II:  `Σ_n (e^{-x(B+πλ²n²)} - e^{-y(B+πλ²n²)}) / (B + πλ²n²)`
/// * III: `∫_x^y e^{-Cτ}/(λ√τ) dτ = √(π/C) (erf√(Cy) - erf√(Cx)) / λ`
///
/// and every other positive scale holds nothing.
pub fn window_limit(constants: &CondensateConstants, window: &CycleWindow) -> f64 {
    if (window.delta - constants.delta).abs() > 1e-12 {
        return 0.0;
    }
    let (x, y) = (window.x, window.y);
    let k = constants.constant;
    let l = constants.lambda;
    match constants.regime {
        Regime::TypeI => constants.rho0 * ((-x * k).exp() - (-y * k).exp()),
        Regime::TypeII => {
            let c = PI * l * l;
            let mut sum = 0.0;
            let mut n = 0i64;
            loop {
                let e = k + c * (n * n) as f64;
                let t = ((-x * e).exp() - (-y * e).exp()) / e;
                sum += if n == 0 { t } else { 2.0 * t };
                if (-x * e).exp() / e < 1e-17 * sum {
                    break;
                }
                n += 1;
            }
            sum
        }
        Regime::TypeIII => {
            (PI / k).sqrt() * (erf_std((k * y).sqrt()) - erf_std((k * x).sqrt())) / l
        }
    }
}

/// The scale of the cycles that carry the condensate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum Hierarchy {
    /// Cycle lengths of order V.
    Macroscopic,
    /// Cycle lengths of order `V^δ` with `δ < 1`.
    LongMicroscopic { delta: f64 },
    Inconclusive(String),
}

/// One candidate exponent of the hierarchy scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HierarchyCandidate {
    pub delta: f64,
    /// Extrapolated condensate density carried by cycles of order `V^δ`.
    pub captured: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyReport {
    pub verdict: Hierarchy,
    pub scan: Vec<HierarchyCandidate>,
    /// The candidate that captured ρ0.
    pub delta_star: Option<f64>,
    /// Excess cycle density in `[10^{-4} V^δ*, 10^4 V^δ*]` per volume.
    pub capture: Option<ScalingSeries>,
    pub rho0: f64,
}

/// Find the exponent δ* for which the condensate lives in cycles of length
/// of order `V^δ*`.
///
/// The condensed particles of mode `k` sit in cycles whose lengths are
/// geometrically distributed with mean `1/β(ε_k - μ̄)`, so cycles of order
/// `V^δ` hold the condensate density implied by `K_V = -βμ̄_V·V^δ`. Each
/// candidate δ (`{0.1, …, 1}` and `2(1 - α1)`) is scored by the extrapolated
/// value of that density; the candidate that captures ρ0 within
/// [`CAPTURE_TOL`] wins. Exponents below δ* leave `K_V → 0` and overshoot,
/// those above it undershoot. The verdict then stands only if the excess
/// cycle density in a window of eight decades around `V^δ*` also
/// extrapolates to at least `(1 - tol)·ρ0`.
pub fn hierarchy_detect(alpha: &Anisotropy, lambda: f64, rho: f64, volumes: &[f64]) -> Result<HierarchyReport> {
    let rho0 = rho - critical_density(lambda);
    if rho0 <= 0.0 {
        return Err(Error::domain("hierarchy_detect", format!("ρ - ρ_c = {rho0:e}: no condensate")));
    }
    let regime = Regime::of(alpha);
    let neg_beta_mu = run_sweep(
        |v| Ok(-solve_at(alpha, lambda, rho, v)?.1.beta_mu()),
        volumes,
        f64::INFINITY,
    )?
    .values;
    let mut candidates: Vec<f64> = DELTA_GRID.to_vec();
    let analytic = alpha.delta();
    if analytic < 1.0 && DELTA_GRID.iter().all(|d| (d - analytic).abs() > 1e-12) {
        candidates.push(analytic);
    }
    let mut scan = Vec::with_capacity(candidates.len());
    for delta in candidates {
        let s = implied_series(regime, lambda, &neg_beta_mu, volumes, delta, rho)?;
        scan.push(HierarchyCandidate {
            delta,
            captured: s.extrapolated_limit,
            converged: s.converged,
        });
    }
    let best = scan
        .iter()
        .filter(|c| c.converged && (c.captured / rho0 - 1.0).abs() <= CAPTURE_TOL)
        .min_by(|a, b| (a.captured - rho0).abs().total_cmp(&(b.captured - rho0).abs()));
    let Some(delta_star) = best.map(|c| c.delta) else {
        return Ok(HierarchyReport {
            verdict: Hierarchy::Inconclusive("no candidate exponent captures ρ0".into()),
            scan,
            delta_star: None,
            capture: None,
            rho0,
        });
    };
    let span = 10f64.powi(CAPTURE_DECADES);
    let window = CycleWindow::new(delta_star, 1.0 / span, span)?;
    let capture = windowed_excess_density(alpha, lambda, rho, window, volumes)?;
    let verdict = if !capture.converged {
        Hierarchy::Inconclusive("capture window extrapolation did not converge".into())
    } else if capture.extrapolated_limit < (1.0 - CAPTURE_TOL) * rho0 {
        Hierarchy::Inconclusive(format!(
            "window around V^{delta_star} holds {:.4} < {:.4}",
            capture.extrapolated_limit,
            (1.0 - CAPTURE_TOL) * rho0
        ))
    } else if (delta_star - 1.0).abs() < 1e-12 {
        Hierarchy::Macroscopic
    } else {
        Hierarchy::LongMicroscopic { delta: delta_star }
    };
    Ok(HierarchyReport {
        verdict,
        scan,
        delta_star: Some(delta_star),
        capture: Some(capture),
        rho0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::box_model::{mode_density, total_density, total_density_cycles};
    use crate::condensate::solve_constant;
    use crate::numerics::polylog;

    fn geom(a: [f64; 3], v: f64) -> BoxGeometry {
        BoxGeometry::new(Anisotropy::new(a).unwrap(), v).unwrap()
    }

    #[test]
    fn cycle_terms_sum_to_total() {
        let g = geom([0.5, 0.3, 0.2], 3e3);
        let s = GasState::new(1.0, -0.02).unwrap();
        let direct: f64 = (1..=4000).map(|j| cycle_density(&s, &g, j).unwrap()).sum();
        let tail = window_sum(&s, &g, 4001, u64::MAX);
        let total = total_density_cycles(&s, &g);
        assert!((direct + tail.value - total.value).abs() < 1e-12 * total.value);
    }

    #[test]
    fn spectrum_partitions_density() {
        let g = geom([0.6, 0.2, 0.2], 1e4);
        let s = GasState::new(1.0, -1e-3).unwrap();
        let spec = cycle_spectrum(&s, &g, 500).unwrap();
        let listed: f64 = spec.densities.iter().sum();
        let total = total_density(&s, &g).value;
        assert!(spec.densities.iter().all(|&d| d > 0.0));
        assert!(listed <= total && listed + spec.tail_bound >= total * (1.0 - 1e-13));
        assert!((listed + spec.tail_bound - total).abs() < 1e-12 * total);
    }

    #[test]
    fn rejects_zero_length() {
        let g = geom([0.4, 0.3, 0.3], 1e3);
        let s = GasState::new(1.0, -0.1).unwrap();
        assert!(cycle_density(&s, &g, 0).is_err());
    }

    #[test]
    fn large_box_cycles_reach_bulk() {
        let g = geom([1.0 / 3.0; 3], 1e12);
        let s = GasState::new(1.0, -0.05).unwrap();
        for j in [1u64, 3, 10] {
            let bulk = (j as f64 * -0.05).exp() / (j as f64).powf(1.5);
            assert!((cycle_density(&s, &g, j).unwrap() / bulk - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mode_cycles_resum_to_mode_density() {
        let g = geom([0.5, 0.25, 0.25], 500.0);
        let s = GasState::new(1.0, -0.3).unwrap();
        for n in [ModeIndex::ZERO, ModeIndex::new(1, 0, 0), ModeIndex::new(2, -1, 1)] {
            let mut sum = 0.0;
            for j in (1..=2000).rev() {
                sum += mode_cycle_density(&s, &g, n, j);
            }
            assert!((sum / mode_density(&s, &g, n) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn excess_is_non_negative_and_sums_to_surplus() {
        let g = geom([0.6, 0.2, 0.2], 5e3);
        let s = GasState::new(1.0, -2e-3).unwrap();
        for (a, b) in [(1, 10), (11, 400), (401, 100_000)] {
            assert!(excess_window_sum(&s, &g, a, b).unwrap() >= -1e-15);
        }
        let all = excess_window_sum(&s, &g, 1, u64::MAX).unwrap();
        let surplus = total_density(&s, &g).value - polylog(1.5, (-2e-3f64).exp()).unwrap().value;
        assert!((all - surplus).abs() < 1e-11);
    }

    #[test]
    fn adjacent_windows_add() {
        let g = geom([0.4, 0.3, 0.3], 2e4);
        let s = GasState::new(1.0, -1e-4).unwrap();
        let ab = window_sum(&s, &g, 100, 999).value;
        let bc = window_sum(&s, &g, 1000, 50_000).value;
        let ac = window_sum(&s, &g, 100, 50_000).value;
        assert!((ab + bc - ac).abs() < 1e-13 * ac);
    }

    #[test]
    fn window_bounds_round_outward() {
        let w = CycleWindow::new(1.0, 0.55, 1.25).unwrap();
        assert_eq!(w.bounds(10.0).unwrap(), (5, 13));
        assert!(CycleWindow::new(1.0, 2.0, 1.0).is_err());
        let tiny = CycleWindow::new(-3.0, 0.1, 0.2).unwrap();
        assert!(matches!(tiny.bounds(1e3), Err(Error::EmptyWindow { .. })));
    }

    #[test]
    fn window_limits_exhaust_condensate() {
        for a in [[0.4, 0.3, 0.3], [0.5, 0.25, 0.25], [0.6, 0.2, 0.2]] {
            let k = solve_constant(&Anisotropy::new(a).unwrap(), 1.0, 1.3).unwrap();
            let full = window_limit(&k, &CycleWindow::new(k.delta, 1e-12, 1e6).unwrap());
            assert!((full - 1.3).abs() < 1e-5, "{a:?}: {full}");
            let left = window_limit(&k, &CycleWindow::new(k.delta, 0.1, 0.7).unwrap());
            let right = window_limit(&k, &CycleWindow::new(k.delta, 0.7, 3.0).unwrap());
            let both = window_limit(&k, &CycleWindow::new(k.delta, 0.1, 3.0).unwrap());
            assert!((left + right - both).abs() < 1e-14);
            assert_eq!(window_limit(&k, &CycleWindow::new(1.5, 0.1, 3.0).unwrap()), 0.0);
        }
    }
}
