use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// The adaptive integrator could not meet its tolerance.
    #[error("integration failed at t = {t:e} s: step {step:e} s, population mismatch {mismatch:e} after {halvings} halvings")]
    IntegrationFailure {
        t: f64,
        step: f64,
        mismatch: f64,
        halvings: u32,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A request was refused because honoring it would exceed a guard.
    #[error("refused: {0}")]
    Refused(String),

    /// The fit loss has no sensitivity to the parameter.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("protocol failure: {0}")]
    Protocol(String),

    #[error("serialization: {0}")]
    Serialization(#[from] serde_json::Error),
}

pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        op,
        detail: detail.into(),
    }
}
