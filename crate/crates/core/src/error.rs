use alloc::string::String;

/// Failure modes shared by every kernel in the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("bond {bond} would grow to dimension {dim}, above the hard cap of {cap}")]
    BondOverflow { bond: usize, dim: usize, cap: usize },
    #[error("training diverged at epoch {epoch}")]
    TrainingDiverged { epoch: usize },
    #[error("rollout diverged at step {step}")]
    RolloutDiverged { step: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::Numeric(_) => "numeric",
            Error::Resource(_) => "resource",
            Error::BondOverflow { .. } => "bond_overflow",
            Error::TrainingDiverged { .. } => "training_diverged",
            Error::RolloutDiverged { .. } => "rollout_diverged",
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
