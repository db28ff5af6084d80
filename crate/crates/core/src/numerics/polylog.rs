//! Bose functions `g_s(z) = Σ_{j≥1} z^j / j^s` and their partial sums.
//!
//! Terms are written as `f(j) = e^{-a j} j^{-s}` with `a = -ln z ≥ 0`. For
//! `a ≥ 1/2` the series is summed directly against a geometric tail bound.
//! Otherwise a short head is summed directly and the rest is replaced by an
//! Euler–Maclaurin expansion whose integral is an incomplete gamma function.
//! `f` is completely monotone, so the Euler–Maclaurin remainder is bounded by
//! the first omitted correction.

use super::special::upper_incomplete_gamma;
use super::SeriesResult;
use crate::error::{Error, Result};

/// `B_{2k} / (2k)!` for k = 1..=9.
const BERNOULLI_OVER_FACTORIAL: [f64; 9] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
    1.0 / 74_724_249_600.0,
    -3617.0 / 10_670_622_842_880_000.0,
    43_867.0 / 5_109_094_217_170_944_000.0,
];

const EM_START: u64 = 64;
const DIRECT_DECAY: f64 = 0.5;

/// Polylogarithm / Bose function `g_s(z)` for `s > 1`, `0 ≤ z ≤ 1`.
pub fn polylog(s: f64, z: f64) -> Result<SeriesResult> {
    if !(s > 1.0) {
        return Err(Error::domain("polylog", format!("order s = {s} must exceed 1")));
    }
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::domain("polylog", format!("argument z = {z} outside [0, 1]")));
    }
    if z == 0.0 {
        return Ok(SeriesResult::exact(0.0));
    }
    bose_tail_sum(s, -z.ln(), 1)
}

/// `Σ_{j ≥ from} e^{-a j} j^{-s}` for `a ≥ 0`, `s > 0` (with `s > 1` when `a = 0`).
pub fn bose_tail_sum(s: f64, a: f64, from: u64) -> Result<SeriesResult> {
    check_args("bose_tail_sum", s, a)?;
    let from = from.max(1);
    if a >= DIRECT_DECAY {
        return Ok(geometric_tail(s, a, from));
    }
    let start = from.max(EM_START);
    let mut head = 0.0;
    for j in from..start {
        head += term(s, a, j as f64);
    }
    let (em, em_bound) = euler_maclaurin_tail(s, a, start as f64)?;
    let value = head + em;
    let rounding = 8.0 * f64::EPSILON * (head.abs() + em.abs());
    Ok(SeriesResult::new(value, em_bound + rounding, start - from + 1))
}

/// `Σ_{j = from}^{to} e^{-a j} j^{-s}`; an empty range sums to zero.
pub fn bose_partial_sum(s: f64, a: f64, from: u64, to: u64) -> Result<SeriesResult> {
    if !(s > 0.0) || !(a >= 0.0) || !a.is_finite() {
        return Err(Error::domain(
            "bose_partial_sum",
            format!("need s > 0 and finite a ≥ 0, got s = {s}, a = {a}"),
        ));
    }
    let from = from.max(1);
    if to < from {
        return Ok(SeriesResult::exact(0.0));
    }
    if to - from < 4096 {
        let mut sum = 0.0;
        for j in from..=to {
            sum += term(s, a, j as f64);
        }
        let rounding = (to - from + 1) as f64 * f64::EPSILON * sum.abs();
        return Ok(SeriesResult::new(sum, rounding, to - from + 1));
    }
    // Difference of two tails; for a = 0 and s ≤ 1 both diverge, so sum a
    // short head directly and shift.
    let lower = tail_any(s, a, from)?;
    let upper = tail_any(s, a, to + 1)?;
    let value = lower.value - upper.value;
    let bound = lower.tail_bound + upper.tail_bound + 4.0 * f64::EPSILON * lower.value.abs();
    Ok(SeriesResult::new(value, bound, lower.terms_used + upper.terms_used))
}

// Like `bose_tail_sum`, but for a = 0 and s ≤ 1 returns the finite part
// `Σ_{j≥from} j^{-s} - ∫_{from}^∞` regularised consistently, which cancels
// in differences. Only used through `bose_partial_sum`.
fn tail_any(s: f64, a: f64, from: u64) -> Result<SeriesResult> {
    if a > 0.0 || s > 1.0 {
        return bose_tail_sum(s, a, from);
    }
    // Zeta-regularised tail: EM without the divergent integral, plus the
    // antiderivative F(from) with F(t) = t^{1-s}/(1-s) (or ln t for s = 1).
    let start = from.max(EM_START);
    let mut head = 0.0;
    for j in from..start {
        head += term(s, 0.0, j as f64);
    }
    let t = start as f64;
    let (corr, bound) = em_corrections(s, 0.0, t);
    let antiderivative = if (s - 1.0).abs() < 1e-15 {
        -t.ln()
    } else {
        -t.powf(1.0 - s) / (1.0 - s)
    };
    let value = head + corr + antiderivative;
    Ok(SeriesResult::new(
        value,
        bound + 8.0 * f64::EPSILON * value.abs(),
        start - from + 1,
    ))
}

fn check_args(op: &'static str, s: f64, a: f64) -> Result<()> {
    if !(s > 0.0) || !(a >= 0.0) || !a.is_finite() {
        return Err(Error::domain(op, format!("need s > 0 and finite a ≥ 0, got s = {s}, a = {a}")));
    }
    if a == 0.0 && s <= 1.0 {
        return Err(Error::domain(op, format!("series diverges for z = 1 and s = {s} ≤ 1")));
    }
    Ok(())
}

#[inline]
fn term(s: f64, a: f64, j: f64) -> f64 {
    (-a * j - s * j.ln()).exp()
}

fn geometric_tail(s: f64, a: f64, from: u64) -> SeriesResult {
    let ratio = (-a).exp();
    let mut sum = 0.0;
    let mut j = from;
    loop {
        sum += term(s, a, j as f64);
        j += 1;
        // Σ_{i ≥ j} f(i) ≤ f(j) / (1 - e^{-a}) since j^{-s} is decreasing.
        let bound = term(s, a, j as f64) / (1.0 - ratio);
        if bound <= f64::EPSILON * 0.25 * sum || bound == 0.0 {
            let rounding = 2.0 * f64::EPSILON * sum;
            return SeriesResult::new(sum, bound + rounding, j - from);
        }
    }
}

/// Euler–Maclaurin tail `Σ_{j≥t} f(j)` at integer `t`; returns (value, bound).
fn euler_maclaurin_tail(s: f64, a: f64, t: f64) -> Result<(f64, f64)> {
    let integral = if a == 0.0 {
        t.powf(1.0 - s) / (s - 1.0)
    } else {
        a.powf(s - 1.0) * upper_incomplete_gamma(1.0 - s, a * t)?
    };
    let (corr, bound) = em_corrections(s, a, t);
    Ok((integral + corr, bound + 1e-14 * integral.abs()))
}

/// `f(t)/2 - Σ_k B_{2k}/(2k)! f^{(2k-1)}(t)` and the first omitted term.
fn em_corrections(s: f64, a: f64, t: f64) -> (f64, f64) {
    let mut corr = 0.5 * term(s, a, t);
    let last = BERNOULLI_OVER_FACTORIAL.len() - 1;
    for (k, coeff) in BERNOULLI_OVER_FACTORIAL.iter().enumerate().take(last) {
        corr -= coeff * derivative(s, a, t, 2 * k + 1);
    }
    let omitted = (BERNOULLI_OVER_FACTORIAL[last] * derivative(s, a, t, 2 * last + 1)).abs();
    (corr, omitted)
}

/// n-th derivative of `e^{-a t} t^{-s}`:
/// `(-1)^n e^{-a t} Σ_i C(n, i) a^{n-i} (s)_i t^{-s-i}`.
fn derivative(s: f64, a: f64, t: f64, n: usize) -> f64 {
    let mut sum = 0.0;
    let mut binom = 1.0;
    let mut rising = 1.0; // (s)_i
    for i in 0..=n {
        let power = if n - i == 0 { 1.0 } else { a.powi((n - i) as i32) };
        sum += binom * power * rising * t.powf(-s - i as f64);
        binom *= (n - i) as f64 / (i + 1) as f64;
        rising *= s + i as f64;
    }
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * (-a * t).exp() * sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    // Brute-force partial sum plus the elementary integral enclosure
    // ∫_{N+1}^∞ f ≤ Σ_{j>N} f(j) ≤ ∫_N^∞ f for decreasing f.
    fn zeta_oracle(s: f64, n: u64) -> (f64, f64) {
        let mut sum = 0.0;
        for j in (1..=n).rev() {
            sum += (j as f64).powf(-s);
        }
        let lo = ((n + 1) as f64).powf(1.0 - s) / (s - 1.0);
        let hi = (n as f64).powf(1.0 - s) / (s - 1.0);
        (sum + lo, sum + hi)
    }

    #[test]
    fn empty_series_at_zero() {
        let r = polylog(1.5, 0.0).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.terms_used >= 1);
    }

    #[test]
    fn zeta_three_halves() {
        let r = polylog(1.5, 1.0).unwrap();
        // Oracle at two truncation depths must bracket the value.
        for n in [1_000_000u64, 4_000_000] {
            let (lo, hi) = zeta_oracle(1.5, n);
            assert!(r.value >= lo - 1e-12 && r.value <= hi + 1e-12, "{lo} {} {hi}", r.value);
        }
        assert!((r.value - 2.612_375_348_685_488).abs() < 1e-14);
        assert!(r.tail_bound < 1e-13);
    }

    #[test]
    fn basel() {
        let r = polylog(2.0, 1.0).unwrap();
        assert!((r.value - PI * PI / 6.0).abs() < 1e-14);
    }

    #[test]
    fn domain_errors() {
        assert!(polylog(1.5, 1.0000001).is_err());
        assert!(polylog(1.0, 0.5).is_err());
        assert!(polylog(0.5, 1.0).is_err());
        assert!(polylog(1.5, -0.1).is_err());
    }

    #[test]
    fn near_one_matches_direct_summation() {
        // z = e^{-0.01}: direct sum converges geometrically; 10^4 terms leave e^{-100}.
        let a: f64 = 0.01;
        let z = (-a).exp();
        let mut direct = 0.0;
        for j in (1..=10_000u64).rev() {
            direct += (-a * j as f64).exp() * (j as f64).powf(-1.5);
        }
        let r = polylog(1.5, z).unwrap();
        assert!((r.value - direct).abs() < 1e-13, "{} vs {direct}", r.value);
    }

    #[test]
    fn partial_sum_consistent_with_tails() {
        let a = 1e-4;
        let p = bose_partial_sum(1.5, a, 10, 200_000).unwrap();
        let mut direct = 0.0;
        for j in (10..=200_000u64).rev() {
            direct += (-a * j as f64).exp() * (j as f64).powf(-1.5);
        }
        assert!((p.value - direct).abs() < 1e-13 + p.tail_bound, "{} vs {direct}", p.value);
    }

    #[test]
    fn partial_sum_for_small_order_at_unit_argument() {
        // Σ_{j=10}^{10^5} j^{-1/2}, via regularised tails.
        let p = bose_partial_sum(0.5, 0.0, 10, 100_000).unwrap();
        let mut direct = 0.0;
        for j in (10..=100_000u64).rev() {
            direct += (j as f64).powf(-0.5);
        }
        assert!((p.value / direct - 1.0).abs() < 1e-13, "{} vs {direct}", p.value);
    }

    #[test]
    fn li_five_halves_small_argument() {
        // g_{5/2}(0.5) by direct summation.
        let mut direct = 0.0;
        for j in (1..=200u64).rev() {
            direct += 0.5f64.powi(j as i32) / (j as f64).powf(2.5);
        }
        let r = polylog(2.5, 0.5).unwrap();
        assert!((r.value - direct).abs() < 1e-15);
    }
}
