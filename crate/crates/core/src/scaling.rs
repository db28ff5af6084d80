//! Volume sweeps and extrapolation to infinite volume.
//!
//! Every observable is sampled on a geometric volume sequence and fitted to
//! `f(V) ≈ L + c·(V/V_first)^{-p}` with `p > 0`. For fixed `p` the model is
//! linear in `(L, c)`, so the fit scans `p` on a log grid with `(L, c)`
//! eliminated, refines the best cell by golden section, and finishes with
//! Gauss–Newton steps on all three parameters.

use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Environment variable capping the number of sweep worker threads.
pub const THREADS_ENV: &str = "CASIMIR_THREADS";

const P_MIN: f64 = 1e-3;
const P_MAX: f64 = 20.0;
const P_GRID: usize = 240;

/// `V_k = V0·2^k` for `k = 0..=doublings`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeSequence {
    pub v0: f64,
    pub doublings: u32,
}

impl Default for VolumeSequence {
    fn default() -> Self {
        Self {
            v0: 1e3,
            doublings: 10,
        }
    }
}

impl VolumeSequence {
    pub fn new(v0: f64, doublings: u32) -> Result<Self> {
        if !(v0 > 0.0) || !v0.is_finite() {
            return Err(Error::Scaling(format!("first volume must be positive, got {v0}")));
        }
        Ok(Self { v0, doublings })
    }

    pub fn volumes(&self) -> Vec<f64> {
        (0..=self.doublings).map(|k| self.v0 * 2f64.powi(k as i32)).collect()
    }
}

/// An observable sampled over volumes together with its extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSeries {
    pub volumes: Vec<f64>,
    pub values: Vec<f64>,
    /// `L` in `L + c·(V/V_first)^{-p}`.
    pub extrapolated_limit: f64,
    /// `c`; zero for a constant series.
    pub amplitude: f64,
    /// `p`; NaN when the series carries no measurable correction.
    pub fit_exponent: f64,
    /// Root-mean-square fit residual.
    pub residual: f64,
    /// Residual below tolerance and the last three samples monotone
    /// within three residuals.
    pub converged: bool,
}

impl ScalingSeries {
    /// Model value at volume `v`.
    pub fn model(&self, v: f64) -> f64 {
        if self.amplitude == 0.0 {
            return self.extrapolated_limit;
        }
        self.extrapolated_limit + self.amplitude * (v / self.volumes[0]).powf(-self.fit_exponent)
    }

    pub fn last_value(&self) -> f64 {
        *self.values.last().expect("series is never empty")
    }
}

/// Fit `L + c·(V/V_first)^{-p}` to the samples; `tolerance` is the absolute
/// RMS residual below which the fit may count as converged.
pub fn fit(volumes: &[f64], values: &[f64], tolerance: f64) -> Result<ScalingSeries> {
    check_samples(volumes, values)?;
    let v_ref = volumes[0];
    let logs: Vec<f64> = volumes.iter().map(|v| (v / v_ref).ln()).collect();
    let scale = values.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    let spread = values.iter().fold(f64::NEG_INFINITY, |m, &y| m.max(y))
        - values.iter().fold(f64::INFINITY, |m, &y| m.min(y));

    let (limit, amplitude, exponent) = if spread <= 4.0 * f64::EPSILON * scale {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        (mean, 0.0, f64::NAN)
    } else {
        let p = scan_exponent(&logs, values);
        let (l, c) = linear_fit(&logs, values, p).expect("non-constant samples");
        gauss_newton(&logs, values, (l, c, p))
    };

    let model = |i: usize| {
        if amplitude == 0.0 {
            limit
        } else {
            limit + amplitude * (-exponent * logs[i]).exp()
        }
    };
    let rss: f64 = (0..values.len()).map(|i| (values[i] - model(i)).powi(2)).sum();
    let residual = (rss / values.len() as f64).sqrt();
    let converged = residual < tolerance && tail_is_monotone(values, residual);
    Ok(ScalingSeries {
        volumes: volumes.to_vec(),
        values: values.to_vec(),
        extrapolated_limit: limit,
        amplitude,
        fit_exponent: exponent,
        residual,
        converged,
    })
}

fn check_samples(volumes: &[f64], values: &[f64]) -> Result<()> {
    if volumes.len() != values.len() {
        return Err(Error::Scaling(format!(
            "{} volumes but {} values",
            volumes.len(),
            values.len()
        )));
    }
    if volumes.len() < 4 {
        return Err(Error::Scaling(format!(
            "extrapolation needs at least 4 volumes, got {}",
            volumes.len()
        )));
    }
    if !volumes.windows(2).all(|w| w[1] > w[0]) || !(volumes[0] > 0.0) {
        return Err(Error::Scaling("volumes must be positive and strictly increasing".into()));
    }
    if let Some(bad) = values.iter().find(|y| !y.is_finite()) {
        return Err(Error::Scaling(format!("non-finite sample {bad}")));
    }
    Ok(())
}

fn tail_is_monotone(values: &[f64], residual: f64) -> bool {
    let n = values.len();
    let d1 = values[n - 2] - values[n - 3];
    let d2 = values[n - 1] - values[n - 2];
    let slack = 3.0 * residual;
    (d1 >= -slack && d2 >= -slack) || (d1 <= slack && d2 <= slack)
}

/// Least-squares `(L, c)` for fixed `p`; `None` if the regressor is flat.
fn linear_fit(logs: &[f64], values: &[f64], p: f64) -> Option<(f64, f64)> {
    let n = values.len() as f64;
    let xs: Vec<f64> = logs.iter().map(|t| (-p * t).exp()).collect();
    let xm = xs.iter().sum::<f64>() / n;
    let ym = values.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(values) {
        sxx += (x - xm) * (x - xm);
        sxy += (x - xm) * (y - ym);
    }
    if !(sxx > 1e-300) {
        return None;
    }
    let c = sxy / sxx;
    Some((ym - c * xm, c))
}

fn projected_rss(logs: &[f64], values: &[f64], p: f64) -> f64 {
    match linear_fit(logs, values, p) {
        Some((l, c)) => logs
            .iter()
            .zip(values)
            .map(|(t, y)| (y - l - c * (-p * t).exp()).powi(2))
            .sum(),
        None => f64::INFINITY,
    }
}

fn scan_exponent(logs: &[f64], values: &[f64]) -> f64 {
    let step = (P_MAX / P_MIN).ln() / (P_GRID - 1) as f64;
    let grid: Vec<f64> = (0..P_GRID).map(|i| P_MIN * (step * i as f64).exp()).collect();
    let rss: Vec<f64> = grid.iter().map(|&p| projected_rss(logs, values, p)).collect();
    let best = (0..P_GRID).min_by(|&a, &b| rss[a].total_cmp(&rss[b])).unwrap_or(0);
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(P_GRID - 1)];
    golden_section(|p| projected_rss(logs, values, p), lo, hi)
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-12 * (a.abs() + b.abs()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Gauss–Newton with step halving on `(L, c, p)`, keeping `p` in range.
fn gauss_newton(logs: &[f64], values: &[f64], start: (f64, f64, f64)) -> (f64, f64, f64) {
    let rss = |(l, c, p): (f64, f64, f64)| -> f64 {
        logs.iter()
            .zip(values)
            .map(|(t, y)| (y - l - c * (-p * t).exp()).powi(2))
            .sum()
    };
    let mut cur = start;
    let mut cur_rss = rss(cur);
    for _ in 0..60 {
        let (l, c, p) = cur;
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for (t, y) in logs.iter().zip(values) {
            let x = (-p * t).exp();
            let r = y - l - c * x;
            let row = [1.0, x, -c * x * t];
            for a in 0..3 {
                jtr[a] += row[a] * r;
                for b in 0..3 {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        let Some(step) = solve3(jtj, jtr) else { break };
        let mut scale = 1.0;
        let mut improved = false;
        while scale > 1e-6 {
            let trial = (l + scale * step[0], c + scale * step[1], p + scale * step[2]);
            if trial.2 > P_MIN * 0.5 && trial.2 < P_MAX * 2.0 {
                let trial_rss = rss(trial);
                if trial_rss < cur_rss {
                    cur = trial;
                    cur_rss = trial_rss;
                    improved = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if !improved {
            break;
        }
    }
    cur
}

/// Solve a symmetric 3×3 system by Gaussian elimination after diagonal
/// equilibration.
fn solve3(m: [[f64; 3]; 3], r: [f64; 3]) -> Option<[f64; 3]> {
    let d: Vec<f64> = (0..3).map(|i| if m[i][i] > 0.0 { m[i][i].sqrt() } else { 1.0 }).collect();
    let mut a = [[0.0; 4]; 3];
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] = m[i][j] / (d[i] * d[j]);
        }
        a[i][3] = r[i] / d[i];
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|k| a[i][k] * x[k]).sum();
        x[i] = (a[i][3] - s) / a[i][i];
    }
    Some([x[0] / d[0], x[1] / d[1], x[2] / d[2]])
}

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let threads = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
            .unwrap_or(0);
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("sweep thread pool")
    })
}

/// Evaluate `observable` at every volume in parallel, then fit.
///
/// The observable must be a pure function of the volume. On the first failing
/// volume (in volume order) the sweep returns [`Error::Sweep`] carrying every
/// sample obtained at smaller volumes.
pub fn run_sweep<F>(observable: F, volumes: &[f64], tolerance: f64) -> Result<ScalingSeries>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let results = sweep(observable, volumes);
    let mut values = Vec::with_capacity(volumes.len());
    for (v, r) in volumes.iter().zip(results) {
        match r {
            Ok(y) => values.push(y),
            Err(e) => {
                return Err(Error::Sweep {
                    volume: *v,
                    source: Box::new(e),
                    partial: volumes.iter().copied().zip(values).collect(),
                })
            }
        }
    }
    fit(volumes, &values, tolerance)
}

/// Parallel map over volumes, results in volume order.
pub fn sweep<T, F>(observable: F, volumes: &[f64]) -> Vec<Result<T>>
where
    T: Send,
    F: Fn(f64) -> Result<T> + Sync,
{
    pool().install(|| volumes.par_iter().map(|&v| observable(v)).collect())
}

/// Outcome of comparing a fitted exponent with a hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentTest {
    pub pass: bool,
    /// `tol - |p_fit - p_hyp|`; negative on failure.
    pub margin: f64,
}

/// Pass iff `|p_fit - hypothesis| ≤ tol`. Unconverged series are refused.
pub fn exponent_test(series: &ScalingSeries, hypothesis_p: f64, tol: f64) -> Result<ExponentTest> {
    if !series.converged {
        return Err(Error::Scaling(format!(
            "exponent test needs a converged series (residual {:e})",
            series.residual
        )));
    }
    if series.fit_exponent.is_nan() {
        return Err(Error::Scaling("series has no fitted exponent".into()));
    }
    let margin = tol - (series.fit_exponent - hypothesis_p).abs();
    Ok(ExponentTest {
        pass: margin >= 0.0,
        margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn volumes() -> Vec<f64> {
        VolumeSequence::default().volumes()
    }

    #[test]
    fn default_sequence() {
        let v = volumes();
        assert_eq!(v.len(), 11);
        assert_eq!(v[0], 1e3);
        assert_eq!(v[10], 1024e3);
    }

    #[test]
    fn constant_series() {
        let s = run_sweep(|_| Ok(7.0), &volumes(), 1e-12).unwrap();
        assert_eq!(s.extrapolated_limit, 7.0);
        assert_eq!(s.residual, 0.0);
        assert!(s.converged);
        assert!(s.fit_exponent.is_nan());
    }

    #[test]
    fn inverse_volume_law() {
        let v: Vec<f64> = (0..=9).map(|k| 100.0 * 2f64.powi(k)).collect();
        let s = run_sweep(|v| Ok(2.0 + 3.0 / v), &v, 1e-10).unwrap();
        assert!((s.extrapolated_limit - 2.0).abs() < 1e-6);
        assert!((s.fit_exponent - 1.0).abs() < 1e-6);
        assert!(s.residual < 1e-12);
        assert!(s.converged);
    }

    #[test]
    fn fractional_exponent() {
        let s = run_sweep(|v| Ok(5.0 + v.powf(-0.8)), &volumes(), 1e-10).unwrap();
        assert!((s.fit_exponent - 0.8).abs() < 0.02);
        assert!((s.extrapolated_limit - 5.0).abs() < 1e-9);
    }

    #[test]
    fn failure_keeps_partial_results() {
        let err = run_sweep(
            |v| if v > 5e3 { Err(Error::Scaling("boom".into())) } else { Ok(v) },
            &volumes(),
            1.0,
        )
        .unwrap_err();
        match err {
            Error::Sweep { volume, partial, .. } => {
                assert_eq!(volume, 8e3);
                assert_eq!(partial.len(), 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn short_series_is_rejected() {
        assert!(fit(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0], 1.0).is_err());
        assert!(fit(&[1.0, 3.0, 2.0, 4.0], &[1.0; 4], 1.0).is_err());
    }

    #[test]
    fn exponent_hypothesis() {
        let s = run_sweep(|v| Ok(1.0 + 1.0 / v), &volumes(), 1e-10).unwrap();
        assert!(!exponent_test(&s, 0.5, 0.1).unwrap().pass);
        assert!(exponent_test(&s, 1.0, 0.01).unwrap().pass);
        let mut raw = s.clone();
        raw.converged = false;
        assert!(exponent_test(&raw, 1.0, 0.1).is_err());
    }

    #[test]
    fn non_monotone_tail_is_not_converged() {
        let v = volumes();
        let mut y = vec![1.0; v.len()];
        y[v.len() - 2] = 1.5;
        let s = fit(&v, &y, 1.0).unwrap();
        assert!(s.residual < 1.0);
        assert!(!s.converged);
    }
}
