use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid action index {index} (action set has {len} actions)")]
    InvalidAction { index: usize, len: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("capacity exhausted: {message} (achieved {achieved})")]
    Capacity { message: String, achieved: usize },

    #[error("vector lies outside the design span (residual {residual:.3e})")]
    Span { residual: f64 },

    #[error("ill-conditioned matrix: {0}")]
    Conditioning(String),

    #[error("optimizer did not converge after {iterations} iterations (gap {gap:.3e})")]
    Optimization { iterations: usize, gap: f64 },

    #[error("clipping anomaly: rejection rate {rate:.3} exceeds 0.5")]
    ClippingAnomaly { rate: f64 },

    #[error("reduction inapplicable: rho*C2/(1-rho) = {ratio:.4} > 1/2")]
    ReductionInapplicable { ratio: f64 },

    #[error("oracle failed: {0}")]
    Oracle(Box<Error>),

    #[error("config error: {0}")]
    Config(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
