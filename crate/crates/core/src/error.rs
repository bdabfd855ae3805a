use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("evaluation error: {0}")]
    Eval(String),

    /// The integrated state left the finite region. `time` is the last flow
    /// parameter at which the state was still valid.
    #[error("blow-up{} at t = {time}", stage.map(|s| format!(" in stage {s}")).unwrap_or_default())]
    BlowUp { stage: Option<usize>, time: f64 },

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("target not group-like (worst shuffle violation {0:e})")]
    NotGroupLike(f64),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn with_stage(self, stage: usize) -> Self {
        match self {
            Error::BlowUp { time, .. } => Error::BlowUp {
                stage: Some(stage),
                time,
            },
            other => other,
        }
    }
}
