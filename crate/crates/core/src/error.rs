use thiserror::Error;

/// Errors raised by the curvature, sampling and verification layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("chi_unknown: set `{0}` has no declared Euler characteristic")]
    ChiUnknown(String),
    #[error("degenerate: {0}")]
    Degenerate(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("unstable: link counts {counts:?} did not stabilise up to radius {radius}")]
    Unstable { counts: Vec<i64>, radius: f64 },
    #[error("degenerate_chart: Gram determinant {0:e} below threshold")]
    DegenerateChart(f64),
    #[error("coverage_gap: {0}")]
    CoverageGap(String),
    #[error("non_generic_direction: |<u, v>| = {0:e}")]
    NonGenericDirection(f64),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid subspace: {0}")]
    InvalidSubspace(String),
    #[error("invalid set field `{field}`: {message}")]
    InvalidSet { field: String, message: String },
    #[error("too many degenerate samples: {rejected} rejections for {samples} samples")]
    DegenerateBudget { rejected: usize, samples: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid_set(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidSet { field: field.into(), message: message.into() }
    }

    /// Whether the error marks a measure-zero configuration that a Monte
    /// Carlo driver may reject and redraw.
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Error::Degenerate(_) | Error::Unstable { .. } | Error::NonGenericDirection(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
