use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Error function, accurate to a few ulp on the whole real line.
pub fn erf_std(x: f64) -> f64 {
    libm::erf(x)
}

/// Complementary error function without the cancellation of `1 - erf(x)`.
pub fn erfc_std(x: f64) -> f64 {
    libm::erfc(x)
}

/// Upper incomplete gamma function `Γ(p, x) = ∫_x^∞ t^{p-1} e^{-t} dt` for
/// real `p` (including negative values) and `x > 0`.
pub fn upper_incomplete_gamma(p: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() || !p.is_finite() {
        return Err(Error::domain(
            "upper_incomplete_gamma",
            format!("need finite p and x > 0, got p = {p}, x = {x}"),
        ));
    }
    if x > 1.0 {
        return Ok(continued_fraction(p, x));
    }
    let rounded = p.round();
    if p <= 0.0 && (p - rounded).abs() < 1e-15 {
        // Non-positive integer order: start from E1 and recur downward,
        // Γ(p, x) = (Γ(p+1, x) - x^p e^{-x}) / p.
        let mut g = exponential_integral_e1(x);
        let mut order = 0.0;
        while order > rounded {
            order -= 1.0;
            g = (g - x.powf(order) * (-x).exp()) / order;
        }
        return Ok(g);
    }
    Ok(libm::tgamma(p) - lower_series(p, x))
}

/// `γ(p, x) = x^p Σ (-x)^n / (n! (p + n))`, valid for non-integer `p ≤ 0` too.
fn lower_series(p: f64, x: f64) -> f64 {
    let mut sum = 0.0;
    let mut factor = 1.0; // (-x)^n / n!
    for n in 0..200 {
        let term = factor / (p + n as f64);
        sum += term;
        if term.abs() <= f64::EPSILON * 0.25 * sum.abs() && n > 2 {
            break;
        }
        factor *= -x / (n as f64 + 1.0);
    }
    x.powf(p) * sum
}

/// Modified Lentz evaluation of the Legendre continued fraction for Γ(p, x).
fn continued_fraction(p: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - p;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - p);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    (-x + p * x.ln()).exp() * h
}

fn exponential_integral_e1(x: f64) -> f64 {
    // x ≤ 1 here: power series.
    let mut sum = 0.0;
    let mut term = 1.0;
    for n in 1..200 {
        term *= -x / n as f64;
        let add = term / n as f64;
        sum += add;
        if add.abs() <= f64::EPSILON * 0.25 * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

#[cfg(test)]
mod tests {
    use super::*;

    // Simpson quadrature on a finite interval, independent of the library path.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn erf_basic_values() {
        assert_eq!(erf_std(0.0), 0.0);
        assert!((erf_std(10.0) - 1.0).abs() <= 1e-14);
        assert!((erf_std(-0.7) + erf_std(0.7)).abs() < 1e-16);
    }

    #[test]
    fn erf_one_matches_quadrature() {
        let q = 2.0 / std::f64::consts::PI.sqrt() * simpson(|t| (-t * t).exp(), 0.0, 1.0, 2000);
        assert!((erf_std(1.0) - q).abs() < 1e-12, "{} vs {}", erf_std(1.0), q);
    }

    #[test]
    fn incomplete_gamma_half_integer_orders() {
        // Γ(1/2, x) = √π erfc(√x) and Γ(-1/2, x) = 2 e^{-x}/√x - 2√π erfc(√x).
        let sp = std::f64::consts::PI.sqrt();
        for &x in &[1e-4, 0.1, 0.5, 0.99, 1.01, 2.0, 7.5, 30.0] {
            let g_half = upper_incomplete_gamma(0.5, x).unwrap();
            let want = sp * erfc_std(x.sqrt());
            assert!((g_half / want - 1.0).abs() < 1e-13, "x={x}: {g_half} vs {want}");
            let g_mhalf = upper_incomplete_gamma(-0.5, x).unwrap();
            let want = 2.0 * (-x).exp() / x.sqrt() - 2.0 * sp * erfc_std(x.sqrt());
            assert!((g_mhalf / want - 1.0).abs() < 1e-11, "x={x}: {g_mhalf} vs {want}");
        }
    }

    #[test]
    fn incomplete_gamma_integer_orders() {
        // Γ(1, x) = e^{-x}; Γ(-1, x) = e^{-x}/x - E1(x).
        for &x in &[0.05, 0.5, 1.0, 3.0] {
            let g1 = upper_incomplete_gamma(1.0, x).unwrap();
            assert!((g1 / (-x).exp() - 1.0).abs() < 1e-13);
            let gm1 = upper_incomplete_gamma(-1.0, x).unwrap();
            // Quadrature of t^{-2} e^{-t} on [x, x + 60].
            let q = simpson(|t| (-t).exp() / (t * t), x, x + 60.0, 200_000);
            assert!((gm1 / q - 1.0).abs() < 1e-9, "x={x}: {gm1} vs {q}");
        }
    }

    #[test]
    fn incomplete_gamma_rejects_bad_input() {
        assert!(upper_incomplete_gamma(0.5, 0.0).is_err());
        assert!(upper_incomplete_gamma(f64::NAN, 1.0).is_err());
    }
}
