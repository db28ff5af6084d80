//! The four experiments. Each returns a table and a JSON-serialisable
//! sidecar; `main` writes them out.

use crate::config::ExperimentConfig;
use crate::output::{Cell, Table};
use crate::CliError;
use casimir_core::box_model::{solve_chemical_potential, BoxGeometry};
use casimir_core::condensate::{
    bulk_beta_mu, chemical_potential_scaling, classify, fragmentation_report, solve_constant,
    Classification, CondensateConstants, FragmentationReport, Regime,
};
use casimir_core::correlation::{
    correlation_theta, limiting_profile, natural_coordinate, odlro_limit, OdlroEstimate,
    SeparationPath,
};
use casimir_core::cycles::{
    hierarchy_detect, long_cycle_density, short_cycle_density, window_limit,
    windowed_cycle_density, CycleWindow, HierarchyReport, ShortCycleDensity,
};
use casimir_core::scaling::{fit, run_sweep, sweep, ScalingSeries};
use serde::Serialize;

/// Cycle lengths above this are no longer exact in a double.
const EXACT_INTEGER_LIMIT: f64 = 9_007_199_254_740_992.0;

pub struct Report<M> {
    pub table: Table,
    pub meta: M,
}

#[derive(Debug, Serialize)]
struct Setting {
    alpha: [f64; 3],
    lambda: f64,
    rho: f64,
    rho0: f64,
    volumes: Vec<f64>,
}

fn setting(c: &ExperimentConfig) -> Setting {
    Setting {
        alpha: c.alpha.exponents(),
        lambda: c.lambda,
        rho: c.rho,
        rho0: c.rho0(),
        volumes: c.volume_list(),
    }
}

fn constants(c: &ExperimentConfig) -> Result<Option<CondensateConstants>, CliError> {
    if c.rho0() > 0.0 {
        Ok(Some(solve_constant(&c.alpha, c.lambda, c.rho0())?))
    } else {
        Ok(None)
    }
}

#[derive(Debug, Serialize)]
pub struct SolveMuMeta {
    setting: Setting,
    /// Exponent used for the scaled column.
    delta: f64,
    regime: Option<Regime>,
    /// Constant predicted from ρ0.
    predicted_constant: Option<f64>,
    /// Constant extrapolated through the implied condensate density.
    extrapolated_constant: Option<f64>,
    /// Fit of the scaled column.
    scaled: ScalingSeries,
    implied: Option<ScalingSeries>,
    exponent: Option<ScalingSeries>,
    /// Infinite-volume βμ below condensation.
    bulk_beta_mu: Option<f64>,
}

pub fn solve_mu(c: &ExperimentConfig) -> Result<Report<SolveMuMeta>, CliError> {
    let volumes = c.volume_list();
    let k = constants(c)?;
    let delta = c.solve_mu.delta.or(k.map(|k| k.delta)).unwrap_or(1.0);
    let scaled_tol = 1e-3 * k.map_or(1.0, |k| k.constant);
    let (neg_beta_mu, implied, exponent, extrapolated_constant) = if k.is_some() {
        let s = chemical_potential_scaling(&c.alpha, c.lambda, c.rho, &volumes)?;
        (s.neg_beta_mu, Some(s.implied), s.exponent, Some(s.constant))
    } else {
        let s = run_sweep(
            |v| Ok(-solve_chemical_potential(&BoxGeometry::new(c.alpha, v)?, c.lambda, c.rho)?.beta_mu),
            &volumes,
            f64::INFINITY,
        )?;
        (s.values, None, None, None)
    };
    let scaled_values: Vec<f64> = neg_beta_mu
        .iter()
        .zip(&volumes)
        .map(|(m, v)| m * v.powf(delta))
        .collect();
    let scaled = fit(&volumes, &scaled_values, scaled_tol)?;
    let mut table = Table::new(vec!["volume", "beta_mu", "scaled_neg_beta_mu"]);
    for ((v, m), s) in volumes.iter().zip(&neg_beta_mu).zip(&scaled_values) {
        table.push(vec![(*v).into(), (-m).into(), (*s).into()]);
    }
    let bulk = if k.is_none() {
        Some(bulk_beta_mu(c.lambda, c.rho)?)
    } else {
        None
    };
    let meta = SolveMuMeta {
        setting: setting(c),
        delta,
        regime: k.map(|k| k.regime),
        predicted_constant: k.map(|k| k.constant),
        extrapolated_constant,
        scaled,
        implied,
        exponent,
        bulk_beta_mu: bulk,
    };
    Ok(Report { table, meta })
}

#[derive(Debug, Serialize)]
pub struct ClassifyMeta {
    setting: Setting,
    constants: Option<CondensateConstants>,
    classification: Classification,
    fragmentation: FragmentationReport,
}

pub fn classify_cmd(c: &ExperimentConfig) -> Result<Report<ClassifyMeta>, CliError> {
    let volumes = c.volume_list();
    let classification = classify(&c.alpha, c.lambda, c.rho, &volumes)?;
    let largest = *volumes.last().expect("validated volume list");
    let fragmentation = fragmentation_report(&c.alpha, c.lambda, c.rho, largest, c.classify.fragment_threshold)?;
    let mut table = Table::new(vec!["series", "offset", "volume", "value"]);
    if let Some(s) = &classification.max_mode {
        for (v, x) in s.volumes.iter().zip(&s.values) {
            table.push(vec!["max_mode".into(), Cell::Empty, (*v).into(), (*x).into()]);
        }
    }
    for p in &classification.probes {
        for (v, x) in p.series.volumes.iter().zip(&p.series.values) {
            table.push(vec!["threshold_window".into(), p.offset.into(), (*v).into(), (*x).into()]);
        }
    }
    let meta = ClassifyMeta {
        setting: setting(c),
        constants: constants(c)?,
        classification,
        fragmentation,
    };
    Ok(Report { table, meta })
}

#[derive(Debug, Serialize)]
struct WindowResult {
    window: CycleWindow,
    /// Infinite-volume density the window holds.
    predicted: f64,
    series: ScalingSeries,
}

#[derive(Debug, Serialize)]
pub struct CyclesMeta {
    setting: Setting,
    constants: Option<CondensateConstants>,
    long: ScalingSeries,
    short: ShortCycleDensity,
    windows: Vec<WindowResult>,
    hierarchy: Option<HierarchyReport>,
    warnings: Vec<String>,
}

pub fn cycles_cmd(c: &ExperimentConfig) -> Result<Report<CyclesMeta>, CliError> {
    let volumes = c.volume_list();
    let k = constants(c)?;
    let long = long_cycle_density(&c.alpha, c.lambda, c.rho, &volumes)?;
    let short = short_cycle_density(&c.alpha, c.lambda, c.rho, &volumes, c.cycles.short_cutoff)?;
    let largest = *volumes.last().expect("validated volume list");
    let mut warnings = Vec::new();
    let mut windows = Vec::new();
    for w in &c.cycles.windows {
        if w.y * w.scale(largest) > EXACT_INTEGER_LIMIT {
            warnings.push(format!(
                "window {w:?}: upper end {:e} exceeds 2^53 at V = {largest:e}; endpoints are rounded",
                w.y * w.scale(largest)
            ));
        }
        let series = windowed_cycle_density(&c.alpha, c.lambda, c.rho, *w, &volumes)?;
        windows.push(WindowResult {
            window: *w,
            predicted: k.map_or(0.0, |k| window_limit(&k, w)),
            series,
        });
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let hierarchy = if c.cycles.hierarchy && k.is_some() {
        Some(hierarchy_detect(&c.alpha, c.lambda, c.rho, &volumes)?)
    } else {
        None
    };

    let mut table = Table::new(vec!["series", "delta", "x", "y", "volume", "value"]);
    let mut add = |name: &str, w: Option<&CycleWindow>, s: &ScalingSeries| {
        for (v, x) in s.volumes.iter().zip(&s.values) {
            table.push(vec![
                name.into(),
                w.map(|w| w.delta).into(),
                w.map(|w| w.x).into(),
                w.map(|w| w.y).into(),
                (*v).into(),
                (*x).into(),
            ]);
        }
    };
    add("long", None, &long);
    add("short_truncated", None, &short.truncated);
    add("short_unbounded", None, &short.unbounded);
    for w in &windows {
        add("window", Some(&w.window), &w.series);
    }
    let meta = CyclesMeta {
        setting: setting(c),
        constants: k,
        long,
        short,
        windows,
        hierarchy,
        warnings,
    };
    Ok(Report { table, meta })
}

#[derive(Debug, Serialize)]
struct PathResult {
    path: SeparationPath,
    /// `"ok"` or the reason the path was rejected.
    status: String,
    estimate: Option<OdlroEstimate>,
    /// Limiting profile when the path runs at the regime's own scale.
    predicted: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct CorrelateMeta {
    setting: Setting,
    constants: Option<CondensateConstants>,
    paths: Vec<PathResult>,
}

/// Default probe: a quarter of the side along axis 1 for types I and II,
/// `X_1 = V^{δ/2}` for type III.
fn default_path(c: &ExperimentConfig) -> Result<SeparationPath, CliError> {
    let a = &c.alpha;
    let path = if a.leading() > 0.5 {
        SeparationPath::along_axis(0, 1.0, 0.5 * a.delta())?
    } else {
        SeparationPath::along_axis(0, 0.25, a.leading())?
    };
    Ok(path)
}

fn diverges(path: &SeparationPath) -> bool {
    path.coefficients.iter().zip(&path.exponents).any(|(x, s)| *x > 0.0 && *s > 0.0)
}

pub fn correlate_cmd(c: &ExperimentConfig) -> Result<Report<CorrelateMeta>, CliError> {
    let volumes = c.volume_list();
    let k = constants(c)?;
    let paths = if c.correlate.paths.is_empty() {
        vec![default_path(c)?]
    } else {
        c.correlate.paths.clone()
    };
    let densities = sweep(
        |v| {
            let geom = BoxGeometry::new(c.alpha, v)?;
            let tp = solve_chemical_potential(&geom, c.lambda, c.rho)?;
            Ok(correlation_theta(&tp.state(), &geom, [0.0; 3]).value)
        },
        &volumes,
    )
    .into_iter()
    .collect::<casimir_core::Result<Vec<f64>>>()?;

    let mut table = Table::new(vec!["path", "volume", "x1", "x2", "x3", "density", "sigma", "status"]);
    let mut results = Vec::with_capacity(paths.len());
    for (i, path) in paths.iter().enumerate() {
        if let Err(e) = path.validate(&c.alpha, &volumes) {
            let reason = format!("rejected: {e}");
            table.push(vec![
                Cell::Int(i as u64),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                reason.as_str().into(),
            ]);
            results.push(PathResult {
                path: *path,
                status: reason,
                estimate: None,
                predicted: None,
            });
            continue;
        }
        let estimate = odlro_limit(&c.alpha, c.lambda, c.rho, path, &volumes)?;
        for ((v, sigma), rho_v) in volumes.iter().zip(&estimate.series.values).zip(&densities) {
            let x = path.at(*v);
            table.push(vec![
                Cell::Int(i as u64),
                (*v).into(),
                x[0].into(),
                x[1].into(),
                x[2].into(),
                (*rho_v).into(),
                (*sigma).into(),
                "ok".into(),
            ]);
        }
        let predicted = match (k, natural_coordinate(&c.alpha, path)) {
            (Some(k), Some(y)) => Some(limiting_profile(&k, y)),
            (Some(k), None) if k.regime == Regime::TypeI && diverges(path) => Some(k.rho0),
            (None, _) => Some(0.0),
            _ => None,
        };
        results.push(PathResult {
            path: *path,
            status: "ok".into(),
            estimate: Some(estimate),
            predicted,
        });
    }
    let meta = CorrelateMeta {
        setting: setting(c),
        constants: k,
        paths: results,
    };
    Ok(Report { table, meta })
}
