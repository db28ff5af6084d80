use super::density::{density_slope, total_density};
use super::geometry::{BoxGeometry, GasState, ThermoPoint};
use crate::error::{Error, Result};

/// Relative residual demanded of a solved chemical potential.
const RESIDUAL: f64 = 1e-10;
/// Bisection stops once the bracket in `ln(-βμ)` is this narrow.
const BISECTION_WIDTH: f64 = 1e-13;
/// `-βμ` is searched within `[e^{LOG_MIN}, e^{LOG_MAX}]`.
const LOG_MIN: f64 = -690.0;
const LOG_MAX: f64 = 6.6;

/// Solve `ρ_Λ(β, μ̄) = ρ` for `βμ̄ < 0`.
///
/// `ρ_Λ` is strictly increasing in `βμ` and diverges as `βμ → 0⁻` (the zero
/// mode alone gives `1/(V|βμ|)`), so a root always exists. The search runs
/// in `t = ln(-βμ)`: a doubling bracket, bisection, then Newton steps in `βμ`
/// with the analytic slope.
pub fn solve_chemical_potential(geom: &BoxGeometry, lambda: f64, rho: f64) -> Result<ThermoPoint> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::domain("solve_chemical_potential", format!("ρ = {rho} must be positive")));
    }
    GasState::new(lambda, -1.0)?;
    // Excess density as a function of t; decreasing in t.
    let excess = |t: f64| -> f64 {
        let state = GasState::new(lambda, -t.exp()).expect("βμ < 0 by construction");
        total_density(&state, geom).value - rho
    };

    let (mut lo, mut hi) = bracket(&excess, initial_guess(geom, lambda, rho)).ok_or_else(|| {
        Error::convergence(
            "solve_chemical_potential",
            format!("no sign change of ρ_Λ - ρ for -βμ in [e^{LOG_MIN}, e^{LOG_MAX}] (ρ = {rho}, V = {})", geom.volume()),
        )
    })?;
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let (mu_lo, mu_hi) = (-lo.exp(), -hi.exp());
    let mut beta_mu = -(0.5 * (lo + hi)).exp();
    let mut residual = f64::INFINITY;
    for _ in 0..8 {
        let state = GasState::new(lambda, beta_mu).expect("βμ < 0 by construction");
        residual = total_density(&state, geom).value - rho;
        if residual.abs() <= 1e-3 * RESIDUAL * rho {
            break;
        }
        let slope = density_slope(&state, geom).value;
        let next = beta_mu - residual / slope;
        // Stay inside the certified bracket [βμ_hi, βμ_lo].
        if !(next > mu_hi && next < mu_lo) || next == beta_mu {
            break;
        }
        beta_mu = next;
    }
    if !(residual.abs() <= RESIDUAL * rho) {
        return Err(Error::convergence(
            "solve_chemical_potential",
            format!("residual {residual:e} at βμ = {beta_mu:e} exceeds {RESIDUAL:e}·ρ (V = {})", geom.volume()),
        ));
    }
    ThermoPoint::new(lambda, rho, beta_mu, geom.volume())
}

/// Starting value of `t = ln(-βμ)`: below the critical density the bulk
/// fugacity is of order one, above it the zero mode absorbs the excess.
fn initial_guess(geom: &BoxGeometry, lambda: f64, rho: f64) -> f64 {
    let rho_c = crate::condensate::critical_density(lambda);
    if rho > rho_c {
        (1.0 / ((rho - rho_c) * geom.volume())).ln().clamp(LOG_MIN + 1.0, LOG_MAX - 1.0)
    } else {
        0.0
    }
}

/// Find `lo < hi` with `f(lo) > 0 ≥ f(hi)` by steps that double in size.
fn bracket(f: &impl Fn(f64) -> f64, start: f64) -> Option<(f64, f64)> {
    let mut step = 1.0;
    if f(start) > 0.0 {
        let mut lo = start;
        loop {
            let hi = (lo + step).min(LOG_MAX);
            if f(hi) <= 0.0 {
                return Some((lo, hi));
            }
            if hi >= LOG_MAX {
                return None;
            }
            lo = hi;
            step *= 2.0;
        }
    } else {
        let mut hi = start;
        loop {
            let lo = (hi - step).max(LOG_MIN);
            if f(lo) > 0.0 {
                return Some((lo, hi));
            }
            if lo <= LOG_MIN {
                return None;
            }
            hi = lo;
            step *= 2.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::box_model::geometry::Anisotropy;
    use crate::condensate::critical_density;

    fn geom(alpha: [f64; 3], v: f64) -> BoxGeometry {
        BoxGeometry::new(Anisotropy::new(alpha).unwrap(), v).unwrap()
    }

    #[test]
    fn dilute_gas_has_very_negative_mu() {
        let tp = solve_chemical_potential(&geom([0.4, 0.3, 0.3], 100.0), 1.0, 1e-6).unwrap();
        assert!(tp.beta_mu < -10.0);
    }

    #[test]
    fn round_trip_reproduces_density() {
        let g = geom([0.5, 0.25, 0.25], 4e3);
        for &rho in &[0.01, 0.5, 2.0, 2.7, 3.6, 10.0] {
            let tp = solve_chemical_potential(&g, 1.0, rho).unwrap();
            let back = total_density(&tp.state(), &g).value;
            assert!((back / rho - 1.0).abs() <= 1e-10, "ρ = {rho}: {back}");
        }
    }

    #[test]
    fn type_one_zero_mode_takes_the_excess() {
        let rho = critical_density(1.0) + 1.0;
        let v = 1e6;
        let tp = solve_chemical_potential(&geom([0.4, 0.3, 0.3], v), 1.0, rho).unwrap();
        let a = -tp.beta_mu * v;
        assert!((a - 1.0).abs() < 0.05, "-βμV = {a}");
    }

    #[test]
    fn rejects_non_positive_density() {
        let g = geom([0.4, 0.3, 0.3], 100.0);
        assert!(solve_chemical_potential(&g, 1.0, 0.0).is_err());
        assert!(solve_chemical_potential(&g, 1.0, -1.0).is_err());
    }
}
