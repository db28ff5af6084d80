use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("{op}: argument out of domain: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("invalid box geometry: {0}")]
    Geometry(String),

    /// An iterative procedure gave up; `detail` carries the last iterate.
    #[error("{op}: no convergence: {detail}")]
    Convergence { op: &'static str, detail: String },

    #[error("separation {separation} on axis {axis} exceeds half period {half_period} at V = {volume}")]
    PathViolation {
        volume: f64,
        axis: usize,
        separation: f64,
        half_period: f64,
    },

    #[error("cycle window [{lower}, {upper}] is empty at V = {volume}")]
    EmptyWindow { volume: f64, lower: f64, upper: f64 },

    #[error("scaling: {0}")]
    Scaling(String),

    /// A volume sweep aborted; the values obtained before the failure are kept.
    #[error("sweep aborted at V = {volume}: {source}")]
    Sweep {
        volume: f64,
        #[source]
        source: Box<Error>,
        partial: Vec<(f64, f64)>,
    },
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn convergence(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Convergence {
            op,
            detail: detail.into(),
        }
    }

    /// True for failures caused by the numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Convergence { .. } | Error::Scaling(_) => true,
            Error::Sweep { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
