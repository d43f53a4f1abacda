use thiserror::Error;

use crate::dsl::ParseError;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Two operands were allocated from different seed registries.
    #[error("registry mismatch: operands come from different seed registries")]
    RegistryMismatch,

    /// A parameter lies outside its physical domain.
    #[error("{0}")]
    Domain(String),

    /// The separability weight is undefined because a marginal variance does
    /// not exceed the vacuum level 1/4.
    #[error("criterion-undefined: both marginal variances must exceed the vacuum level 1/4")]
    CriterionUndefined,

    /// All photon-pair rates vanish, so conditional correlators are 0/0.
    #[error("no-detection: r1=0 gives vanishing rates")]
    NoDetection,

    /// A Monte Carlo run was requested with zero samples.
    #[error("empty sample: n_samples must be at least 1")]
    EmptySample,

    /// Circuit-description parse failure.
    #[error(transparent)]
    Parse(#[from] ParseError),

    /// A hybrid-model instance failed validation.
    #[error("invalid model: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
