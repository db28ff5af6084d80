//! Experiment configuration: one JSON document, overridden by flags.

use crate::CliError;
use casimir_core::box_model::Anisotropy;
use casimir_core::condensate::critical_density;
use casimir_core::correlation::SeparationPath;
use casimir_core::cycles::CycleWindow;
use casimir_core::scaling::VolumeSequence;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Fewest volumes any extrapolation accepts.
const MIN_VOLUMES: u32 = 4;

/// The configuration file as written; every field is optional so that flags
/// can supply or replace it.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub alpha: Option<[f64; 3]>,
    pub lambda: Option<f64>,
    pub rho: Option<f64>,
    pub rho_offset: Option<f64>,
    pub volumes: Option<VolumeSequence>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub solve_mu: SolveMuConfig,
    #[serde(default)]
    pub classify: ClassifyConfig,
    #[serde(default)]
    pub cycles: CyclesConfig,
    #[serde(default)]
    pub correlate: CorrelateConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveMuConfig {
    /// Exponent δ in the reported `-βμ̄·V^δ`; defaults to the regime's.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyConfig {
    /// Fraction of N above which a mode counts in the fragmentation report.
    pub fragment_threshold: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            fragment_threshold: casimir_core::condensate::DEFAULT_FRAGMENT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CyclesConfig {
    pub windows: Vec<CycleWindow>,
    /// Cut-off M of the short-cycle density.
    pub short_cutoff: u64,
    pub hierarchy: bool,
}

impl Default for CyclesConfig {
    fn default() -> Self {
        Self {
            windows: Vec::new(),
            short_cutoff: 100,
            hierarchy: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrelateConfig {
    pub paths: Vec<SeparationPath>,
}

/// Command-line replacements for configuration fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub alpha: Option<[f64; 3]>,
    pub rho_offset: Option<f64>,
    pub lambda: Option<f64>,
    pub volumes: Option<VolumeSequence>,
    pub out: Option<PathBuf>,
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub alpha: Anisotropy,
    pub lambda: f64,
    pub rho: f64,
    pub volumes: VolumeSequence,
    pub out: PathBuf,
    pub solve_mu: SolveMuConfig,
    pub classify: ClassifyConfig,
    pub cycles: CyclesConfig,
    pub correlate: CorrelateConfig,
}

impl ExperimentConfig {
    pub fn rho0(&self) -> f64 {
        self.rho - critical_density(self.lambda)
    }

    pub fn volume_list(&self) -> Vec<f64> {
        self.volumes.volumes()
    }
}

pub fn load(path: Option<&Path>, overrides: Overrides) -> Result<ExperimentConfig, CliError> {
    let raw = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => RawConfig::default(),
    };
    resolve(raw, overrides)
}

/// Parse the JSON document; errors carry line and column.
pub fn parse(text: &str) -> Result<RawConfig, String> {
    serde_json::from_str(text).map_err(|e| e.to_string())
}

pub fn resolve(mut raw: RawConfig, o: Overrides) -> Result<ExperimentConfig, CliError> {
    let bad = |m: String| Err(CliError::Config(m));
    if o.alpha.is_some() {
        raw.alpha = o.alpha;
    }
    if o.lambda.is_some() {
        raw.lambda = o.lambda;
    }
    if o.rho_offset.is_some() {
        raw.rho_offset = o.rho_offset;
        raw.rho = None;
    }
    if o.volumes.is_some() {
        raw.volumes = o.volumes;
    }
    if o.out.is_some() {
        raw.out = o.out;
    }

    let Some(alpha) = raw.alpha else {
        return bad("alpha: missing (set it in the config or pass --alpha)".into());
    };
    let alpha = Anisotropy::new(alpha).map_err(|e| CliError::Config(format!("alpha: {e}")))?;
    let lambda = raw.lambda.unwrap_or(1.0);
    if !(lambda > 0.0) || !lambda.is_finite() {
        return bad(format!("lambda: must be positive, got {lambda}"));
    }
    let rho = match (raw.rho, raw.rho_offset) {
        (Some(_), Some(_)) => return bad("rho and rho_offset are mutually exclusive".into()),
        (Some(r), None) => r,
        (None, Some(off)) => critical_density(lambda) + off,
        (None, None) => return bad("rho: missing (give rho, rho_offset or --rho-offset)".into()),
    };
    if !(rho > 0.0) || !rho.is_finite() {
        return bad(format!("rho: must be positive, got {rho}"));
    }
    let volumes = raw.volumes.unwrap_or_default();
    if !(volumes.v0 > 0.0) || !volumes.v0.is_finite() {
        return bad(format!("volumes.v0: must be positive, got {}", volumes.v0));
    }
    if volumes.doublings + 1 < MIN_VOLUMES {
        return bad(format!(
            "volumes: {} volume(s) given, extrapolation needs at least {MIN_VOLUMES}",
            volumes.doublings + 1
        ));
    }
    if let Some(d) = raw.solve_mu.delta {
        if !(d > 0.0) || !d.is_finite() {
            return bad(format!("solve_mu.delta: must be positive, got {d}"));
        }
    }
    let t = raw.classify.fragment_threshold;
    if !(t > 0.0 && t < 1.0) {
        return bad(format!("classify.fragment_threshold: must lie in (0, 1), got {t}"));
    }
    for (i, w) in raw.cycles.windows.iter().enumerate() {
        CycleWindow::new(w.delta, w.x, w.y)
            .map_err(|e| CliError::Config(format!("cycles.windows[{i}]: {e}")))?;
    }
    if raw.cycles.short_cutoff < 1 {
        return bad("cycles.short_cutoff: must be at least 1".into());
    }
    for (i, p) in raw.correlate.paths.iter().enumerate() {
        SeparationPath::new(p.coefficients, p.exponents)
            .map_err(|e| CliError::Config(format!("correlate.paths[{i}]: {e}")))?;
    }
    Ok(ExperimentConfig {
        alpha,
        lambda,
        rho,
        volumes,
        out: raw.out.unwrap_or_else(|| PathBuf::from(".")),
        solve_mu: raw.solve_mu,
        classify: raw.classify,
        cycles: raw.cycles,
        correlate: raw.correlate,
    })
}

/// `a,b,c` as three numbers.
pub fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let parts = parse_list(s)?;
    parts
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected three comma-separated numbers, got {}", v.len()))
}

/// `v0,K` as a volume sequence.
pub fn parse_volumes(s: &str) -> Result<VolumeSequence, String> {
    let (v0, k) = s
        .split_once(',')
        .ok_or_else(|| format!("expected v0,K, got {s:?}"))?;
    let v0: f64 = v0.trim().parse().map_err(|e| format!("v0: {e}"))?;
    let k: u32 = k.trim().parse().map_err(|e| format!("K: {e}"))?;
    Ok(VolumeSequence { v0, doublings: k })
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect()
}
