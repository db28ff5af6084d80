//! Two-point correlations and off-diagonal long-range order.
//!
//! For periodic boxes the one-body correlation between points a distance
//! `X` apart is
//!
//! ```text
//! σ_Λ(X) = Σ_k ρ_Λ(k) cos(k·X)
//!        = (1/V) Σ_j e^{jβμ} Π_ν θ₃(πX_ν/L_ν, e^{-j πλ²/L_ν²}).
//! ```
//!
//! The ±k pairs cancel all imaginary parts, so everything stays real.
//! `σ_Λ(0) = ρ_Λ`; along each axis σ is even, `L_ν`-periodic and
//! non-increasing on the half-period.
//!
//! Off-diagonal long-range order is probed along separation paths
//! `X_ν(V) = x_ν V^{s_ν}`: its limit is ρ0 for type I, the Fourier series
//! `Σ_n cos(2πny)/(πλ²n² + B)` for type II at `X_1 = y·L_1`, and
//! `ρ0 e^{-2y√(πC)/λ}` for type III at `X_1 = y·V^{δ/2}`.

use crate::box_model::{
    lattice, mode_sum, solve_chemical_potential, split, split_sum, Anisotropy, BoxGeometry,
    GasState,
};
use crate::condensate::{
    chemical_potential_scaling, constant_for, critical_density, implied_condensate_density,
    CondensateConstants, Regime,
};
use crate::error::{Error, Result};
use crate::numerics::{SeriesResult, Tolerance};
use crate::scaling::{fit, run_sweep, ScalingSeries};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Fit tolerance for correlation series, relative to the total density.
const FIT_TOL: f64 = 1e-3;
/// Relative slack on the half-period check, for rounding in `V^{α}`.
const HALF_PERIOD_SLACK: f64 = 1e-12;
/// An extrapolated σ below this fraction of ρ0 counts as zero.
pub const ZERO_TOL: f64 = 1e-3;

/// `σ_Λ(X)` through the theta-product form.
///
/// Low modes enter with exact Bose factors and the rest through the cycle
/// expansion, so the cost does not grow as `βμ̄ → 0⁻`.
pub fn correlation_theta(state: &GasState, geom: &BoxGeometry, x: [f64; 3]) -> SeriesResult {
    split_sum(state, geom, phases(geom, x), split::Weight::Density)
}

/// `σ_Λ(X)` as the direct mode sum `Σ_k ρ_Λ(k) cos(k·X)` over an ellipsoid.
/// An independent oracle for [`correlation_theta`].
pub fn correlation_mode_sum(state: &GasState, geom: &BoxGeometry, x: [f64; 3]) -> SeriesResult {
    mode_sum(state, geom, phases(geom, x), Tolerance::new(0.0, 1e-14))
}

/// The plain cycle expansion of `σ_Λ(X)`; slow near condensation.
pub fn correlation_cycles(state: &GasState, geom: &BoxGeometry, x: [f64; 3]) -> SeriesResult {
    let lat = lattice(geom, state.lambda());
    split::cycle_sum(
        &lat,
        state.beta_mu(),
        phases(geom, x),
        split::Weight::Density,
        None,
        1,
        u64::MAX,
        Tolerance::new(0.0, 1e-14),
        50_000_000,
    )
}

/// Theta arguments `u_ν = πX_ν/L_ν`.
fn phases(geom: &BoxGeometry, x: [f64; 3]) -> [f64; 3] {
    let l = geom.side_lengths();
    [0, 1, 2].map(|i| PI * x[i] / l[i])
}

/// `X_ν(V) = x_ν·V^{s_ν}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationPath {
    pub coefficients: [f64; 3],
    pub exponents: [f64; 3],
}

impl SeparationPath {
    pub fn new(coefficients: [f64; 3], exponents: [f64; 3]) -> Result<Self> {
        if coefficients.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(Error::domain(
                "SeparationPath",
                format!("coefficients {coefficients:?} must be finite and non-negative"),
            ));
        }
        if exponents.iter().any(|s| !s.is_finite()) {
            return Err(Error::domain("SeparationPath", format!("exponents {exponents:?} must be finite")));
        }
        Ok(Self {
            coefficients,
            exponents,
        })
    }

    /// `X_axis = x·V^s`, zero on the other axes.
    pub fn along_axis(axis: usize, x: f64, s: f64) -> Result<Self> {
        if axis > 2 {
            return Err(Error::domain("SeparationPath", format!("axis {axis} out of range")));
        }
        let mut c = [0.0; 3];
        let mut e = [0.0; 3];
        c[axis] = x;
        e[axis] = s;
        Self::new(c, e)
    }

    pub fn at(&self, v: f64) -> [f64; 3] {
        [0, 1, 2].map(|i| self.coefficients[i] * v.powf(self.exponents[i]))
    }

    /// Reject the path if `X_ν(V) > L_ν/2` at any of the volumes.
    pub fn validate(&self, alpha: &Anisotropy, volumes: &[f64]) -> Result<()> {
        for &v in volumes {
            let x = self.at(v);
            for (axis, a) in alpha.exponents().iter().enumerate() {
                let half_period = 0.5 * v.powf(*a);
                if x[axis] > half_period * (1.0 + HALF_PERIOD_SLACK) {
                    return Err(Error::PathViolation {
                        volume: v,
                        axis,
                        separation: x[axis],
                        half_period,
                    });
                }
            }
        }
        Ok(())
    }
}

/// `σ_Λ(X)` at one volume for a list of separations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationProfile {
    pub volume: f64,
    pub beta_mu: f64,
    /// `σ_Λ(0) = ρ_Λ`.
    pub density: f64,
    pub separations: Vec<([f64; 3], f64)>,
}

pub fn correlation_profile(state: &GasState, geom: &BoxGeometry, separations: &[[f64; 3]]) -> CorrelationProfile {
    CorrelationProfile {
        volume: geom.volume(),
        beta_mu: state.beta_mu(),
        density: correlation_theta(state, geom, [0.0; 3]).value,
        separations: separations
            .iter()
            .map(|&x| (x, correlation_theta(state, geom, x).value))
            .collect(),
    }
}

/// `σ_Λ(X(V))` at the solved chemical potential, per volume.
pub fn odlro_profile(
    alpha: &Anisotropy,
    lambda: f64,
    rho: f64,
    path: &SeparationPath,
    volumes: &[f64],
) -> Result<ScalingSeries> {
    path.validate(alpha, volumes)?;
    run_sweep(
        |v| {
            let geom = BoxGeometry::new(*alpha, v)?;
            let tp = solve_chemical_potential(&geom, lambda, rho)?;
            Ok(correlation_theta(&tp.state(), &geom, path.at(v)).value)
        },
        volumes,
        FIT_TOL * rho,
    )
}

/// Extrapolated ODLRO along a path, with the raw and transformed fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdlroEstimate {
    /// `σ_Λ(X(V))` per volume, fitted directly.
    pub series: ScalingSeries,
    /// The condensate density implied by each `σ_Λ(X(V))`, fitted; present
    /// when the path runs at the regime's own scale.
    pub implied: Option<ScalingSeries>,
    /// The extrapolated `σ_X`.
    pub limit: f64,
    pub converged: bool,
}

/// Extrapolate `σ_X` along a path.
///
/// On the regime's own scale (`X_1 = y·L_1` for type II, `X_1 = y·V^{δ/2}`
/// for type III, other axes at zero) the finite-volume correlation is close
/// to the limiting profile evaluated at the finite-volume constant
/// `K_V = -βμ̄_V·V^d`, and `K_V` drifts slowly. Each `σ_Λ` is then mapped to
/// the condensate density implied by the `K` that reproduces it, the
/// implied density is extrapolated, and the profile is evaluated at the
/// corresponding constant. Elsewhere the raw fit is used.
pub fn odlro_limit(
    alpha: &Anisotropy,
    lambda: f64,
    rho: f64,
    path: &SeparationPath,
    volumes: &[f64],
) -> Result<OdlroEstimate> {
    let series = odlro_profile(alpha, lambda, rho, path, volumes)?;
    let rho0 = rho - critical_density(lambda);
    let Some(y) = natural_coordinate(alpha, path).filter(|_| rho0 > 0.0) else {
        return Ok(OdlroEstimate {
            limit: series.extrapolated_limit,
            converged: series.converged,
            implied: None,
            series,
        });
    };
    let regime = Regime::of(alpha);
    let delta = match regime {
        Regime::TypeIII => alpha.delta(),
        _ => 1.0,
    };
    let profile_at = |k: f64| -> Result<f64> {
        let c = CondensateConstants {
            regime,
            constant: k,
            delta,
            rho0: implied_condensate_density(regime, lambda, k)?,
            lambda,
        };
        Ok(limiting_profile(&c, y))
    };
    let implied_values = series
        .values
        .iter()
        .map(|&sigma| {
            let k = invert_decreasing(&profile_at, sigma)?;
            implied_condensate_density(regime, lambda, k)
        })
        .collect::<Result<Vec<_>>>()?;
    let implied = fit(volumes, &implied_values, FIT_TOL * rho)?;
    let limit = profile_at(constant_for(regime, lambda, implied.extrapolated_limit)?)?;
    Ok(OdlroEstimate {
        series,
        limit,
        converged: implied.converged,
        implied: Some(implied),
    })
}

/// The scaled separation `y` if the path runs along axis 1 at the scale of
/// the regime's limiting profile.
pub fn natural_coordinate(alpha: &Anisotropy, path: &SeparationPath) -> Option<f64> {
    if path.coefficients[1] != 0.0 || path.coefficients[2] != 0.0 || path.coefficients[0] == 0.0 {
        return None;
    }
    let natural = match Regime::of(alpha) {
        Regime::TypeI => return None,
        Regime::TypeII => alpha.leading(),
        Regime::TypeIII => 0.5 * alpha.delta(),
    };
    ((path.exponents[0] - natural).abs() < 1e-12).then_some(path.coefficients[0])
}

/// Solve `f(K) = target` for a function falling strictly in `K > 0`, by
/// bisection in `ln K`.
fn invert_decreasing(f: &dyn Fn(f64) -> Result<f64>, target: f64) -> Result<f64> {
    if !(target > 0.0) {
        return Err(Error::domain("odlro_limit", format!("σ = {target:e} is not positive")));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while f(lo.exp())? <= target {
        lo -= 4.0;
        if lo < -700.0 {
            return Err(Error::convergence("odlro_limit", "no constant reproduces σ"));
        }
    }
    while f(hi.exp())? > target {
        hi += 4.0;
        if hi > 700.0 {
            return Err(Error::convergence("odlro_limit", "no constant reproduces σ"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid.exp())? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Limit of `σ_Λ` along the regime's own path, as a function of the scaled
/// separation `y`: `X_1 = y·L_1` for types I and II, `X_1 = y·V^{δ/2}` for
/// type III.
pub fn limiting_profile(constants: &CondensateConstants, y: f64) -> f64 {
    let l = constants.lambda;
    match constants.regime {
        Regime::TypeI => constants.rho0,
        Regime::TypeII => {
            // Σ_n cos(2πny)/(n² + c²) = (π/c) cosh(πc(1 - 2y))/sinh(πc), 0 ≤ y ≤ 1.
            let c = (constants.constant / PI).sqrt() / l;
            let y = y.rem_euclid(1.0);
            let ratio = if PI * c > 350.0 {
                (-2.0 * PI * c * y).exp() + (-2.0 * PI * c * (1.0 - y)).exp()
            } else {
                (PI * c * (1.0 - 2.0 * y)).cosh() / (PI * c).sinh()
            };
            ratio / (l * l * c)
        }
        Regime::TypeIII => constants.rho0 * (-2.0 * y.abs() * (PI * constants.constant).sqrt() / l).exp(),
    }
}

/// The type II profile summed term by term for `|n| ≤ n_max`. The omitted
/// terms are bounded by `2/(πλ² n_max)`.
pub fn type_two_profile_series(constants: &CondensateConstants, y: f64, n_max: u64) -> SeriesResult {
    let c = PI * constants.lambda * constants.lambda;
    let b = constants.constant;
    let mut sum = 0.0;
    for n in (1..=n_max).rev() {
        let nf = n as f64;
        sum += 2.0 * (2.0 * PI * nf * y).cos() / (c * nf * nf + b);
    }
    sum += 1.0 / b;
    SeriesResult::new(sum, 2.0 / (c * n_max as f64), n_max + 1)
}

/// Off-diagonal order along one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum AxisCoherence {
    /// σ stays positive out to half the box side.
    Macroscopic,
    /// σ stays positive for `X ~ V^s`, `s ≤ threshold`, and vanishes beyond.
    Microscopic { threshold: f64 },
    Inconclusive(String),
}

/// One probe of the coherence scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceProbe {
    pub exponent: f64,
    pub limit: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisReport {
    pub axis: usize,
    pub verdict: AxisCoherence,
    /// σ along `X_ν = ½V^{s}` at the half period `s = α_ν`.
    pub half_period: CoherenceProbe,
    /// σ along `X_ν = ½V^{s}` on the exponent grid.
    pub probes: Vec<CoherenceProbe>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub rho0: f64,
    /// Exponent of the coherence length `λ/(2√(π·(-βμ̄)))`.
    pub length_exponent: Option<f64>,
    pub axes: Vec<AxisReport>,
}

/// Coarse grid of path exponents, as fractions of `α_ν`.
const COHERENCE_GRID: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// Per-axis ODLRO verdict.
///
/// An axis whose correlation extrapolates to a positive value at half the
/// box side is macroscopic. Otherwise the threshold exponent is fixed by
/// the coherence length `ℓ = λ/(2√(π·(-βμ̄)))`, across which σ drops by a
/// factor e: `ℓ ~ V^{δ/2}`, with δ̂ the exponent at which the scaled
/// chemical potential yields ρ0. The path `X_ν = ½V^{δ̂/2}` must then keep a
/// positive correlation. The scan over `s ∈ {0.1, …, 1}·α_ν ∪ {δ̂/2}` is
/// reported as evidence.
pub fn coherence_length(alpha: &Anisotropy, lambda: f64, rho: f64, volumes: &[f64]) -> Result<CoherenceReport> {
    let rho0 = rho - critical_density(lambda);
    if rho0 <= 0.0 {
        return Err(Error::domain("coherence_length", format!("ρ - ρ_c = {rho0:e}: no condensate")));
    }
    let mu = chemical_potential_scaling(alpha, lambda, rho, volumes)?;
    let length_exponent = mu.exponent.as_ref().map(|e| 0.5 * e.fit_exponent);
    let probe = |axis: usize, s: f64| -> Result<CoherenceProbe> {
        let path = SeparationPath::along_axis(axis, 0.5, s)?;
        let series = odlro_profile(alpha, lambda, rho, &path, volumes)?;
        Ok(CoherenceProbe {
            exponent: s,
            limit: series.extrapolated_limit,
            converged: series.converged,
        })
    };
    let mut axes = Vec::with_capacity(3);
    for (axis, &a) in alpha.exponents().iter().enumerate() {
        let mut exponents: Vec<f64> = COHERENCE_GRID.iter().map(|f| f * a).collect();
        if let Some(s) = length_exponent.filter(|&s| s < a) {
            exponents.push(s);
        }
        let probes = exponents.iter().map(|&s| probe(axis, s)).collect::<Result<Vec<_>>>()?;
        let half_period = probe(axis, a)?;
        let positive = |p: &CoherenceProbe| p.limit > ZERO_TOL * rho0;
        let verdict = if !half_period.converged {
            AxisCoherence::Inconclusive("half-period extrapolation did not converge".into())
        } else if positive(&half_period) {
            AxisCoherence::Macroscopic
        } else {
            match length_exponent {
                None => AxisCoherence::Inconclusive("no coherence-length exponent".into()),
                Some(s) if s >= a => AxisCoherence::Inconclusive(format!(
                    "coherence length grows as V^{s:.3} but σ vanishes at the half period"
                )),
                Some(s) => {
                    let at = probes.iter().find(|p| p.exponent == s).expect("probe at the threshold");
                    if at.converged && positive(at) {
                        AxisCoherence::Microscopic { threshold: s }
                    } else {
                        AxisCoherence::Inconclusive(format!("σ vanishes already at X ~ V^{s:.3}"))
                    }
                }
            }
        };
        axes.push(AxisReport {
            axis,
            verdict,
            half_period,
            probes,
        });
    }
    Ok(CoherenceReport {
        rho0,
        length_exponent,
        axes,
    })
}
