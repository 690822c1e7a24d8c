use alloc::string::String;

/// Everything that can go wrong inside the simulation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not a valid density matrix: {0}")]
    InvalidState(String),

    #[error("feedback requires a nonzero measurement strength")]
    FeedbackWithoutMeasurement,

    #[error("mean spin has collapsed (|<Jx>| = {mean_spin:e} below {threshold:e})")]
    MeanSpinCollapse { mean_spin: f64, threshold: f64 },

    #[error("numerical invariant violated at tau = {tau}: {detail}")]
    InvariantViolation { tau: f64, detail: String },

    #[error("stochastic step produced non-positive trace {trace:e}; reduce dt")]
    StepTooLarge { trace: f64 },

    #[error("squeezing minimum lies on the boundary of the series (index {index}); extend t_max")]
    BoundaryMinimum { index: usize },

    #[error("target xi^2 = {target} is unreachable (closed-form minimum {minimum})")]
    UnreachableTarget { target: f64, minimum: f64 },

    #[error("missing experimental parameter `{0}`")]
    MissingParameter(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::InvariantViolation { .. }
                | Error::StepTooLarge { .. }
                | Error::MeanSpinCollapse { .. }
                | Error::BoundaryMinimum { .. }
        )
    }
}
