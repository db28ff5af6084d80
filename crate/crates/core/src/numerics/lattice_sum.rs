use super::{SeriesResult, Tolerance};
use crate::error::{Error, Result};
use std::f64::consts::PI;

/// `Σ_{n∈ℤ} 1/(B + πλ²n²)` in closed form, `√π coth(√(πB)/λ) / (λ√B)`.
pub fn lattice_lorentz_sum(b: f64, lambda: f64) -> Result<f64> {
    check(b, lambda)?;
    let x = (PI * b).sqrt() / lambda;
    Ok(PI.sqrt() / (lambda * b.sqrt() * x.tanh()))
}

/// The same sum truncated at `|n| ≤ n_max`, with the integral tail bound
/// `2 ∫_{n_max}^∞ dn/(B + πλ²n²) ≤ 2/(πλ² n_max)`.
pub fn lattice_lorentz_sum_direct(b: f64, lambda: f64, tol: Tolerance) -> Result<SeriesResult> {
    check(b, lambda)?;
    let c = PI * lambda * lambda;
    let target = tol.target(1.0 / b);
    let n_max = (2.0 / (c * target)).ceil().max(1.0) as u64;
    let mut sum = 0.0;
    for n in (1..=n_max).rev() {
        let nf = n as f64;
        sum += 1.0 / (b + c * nf * nf);
    }
    let value = 1.0 / b + 2.0 * sum;
    let tail = 2.0 / (c * n_max as f64);
    Ok(SeriesResult::new(value, tail + n_max as f64 * f64::EPSILON * value, 2 * n_max + 1))
}

fn check(b: f64, lambda: f64) -> Result<()> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::domain("lattice_lorentz_sum", format!("B = {b} must be positive")));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::domain("lattice_lorentz_sum", format!("λ = {lambda} must be positive")));
    }
    Ok(())
}
