use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    /// A parameter is outside the domain the operation accepts.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown atom `{0}`")]
    UnknownAtom(String),

    /// The request is well-formed but exceeds what exhaustive enumeration
    /// supports, or needs a structural property the input lacks.
    #[error("capability exceeded: {0}")]
    Capability(String),

    #[error("objective is not concave near lambda = {at}: {detail}")]
    NonConvex { at: f64, detail: String },
}

impl LabError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        LabError::InvalidInput(msg.into())
    }

    pub(crate) fn capability(msg: impl Into<String>) -> Self {
        LabError::Capability(msg.into())
    }
}

/// Checks that `value` lies in the open unit interval.
pub(crate) fn check_open_unit(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(LabError::invalid(format!("{name} must lie in (0, 1), got {value}")))
    }
}
