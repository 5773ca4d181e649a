use thiserror::Error;

/// Errors raised by dataset validation, configuration checks and the
/// numerical self-checks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("sample size {0} is below the minimum of 3")]
    SampleTooSmall(usize),

    #[error("non-finite value in column `{column}` at row {row}")]
    NonFinite { column: String, row: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported design: {0}")]
    UnsupportedDesign(String),

    #[error("observation {0} is degenerate (delta below floor)")]
    Degenerate(usize),

    #[error("quadrature did not converge: estimate {estimate:e}, refinement change {change:e}")]
    Quadrature { estimate: f64, change: f64 },

    #[error("replication {rep} failed: {source}")]
    Replication {
        rep: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
