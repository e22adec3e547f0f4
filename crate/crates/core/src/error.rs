use thiserror::Error;

/// Errors raised by the co-investment engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter or configuration field is outside its valid domain.
    /// `field` is a dotted path such as `uncertainty.sigma` or `players[1].benefit`.
    #[error("invalid `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    /// The requested analysis needs bounded loads (Hoeffding ranges).
    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("fBm horizon of {requested} slots exceeds the limit of {limit}")]
    HorizonTooLong { requested: usize, limit: usize },

    #[error("value table has {got} entries, expected {expected}")]
    MissingSubset { expected: usize, got: usize },

    /// An accounting identity failed beyond rounding, which points at a bug.
    #[error("invariant violated: {0}")]
    InvariantViolated(String),

    #[error("player {player} is already in coalition {coalition:#b}")]
    PlayerInCoalition { player: usize, coalition: u32 },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field: field.into(), reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Prepends `prefix` to the field path of an `InvalidParameter` error.
    pub fn under(self, prefix: &str) -> Self {
        match self {
            Error::InvalidParameter { field, reason } => Error::InvalidParameter {
                field: if field.is_empty() {
                    prefix.to_string()
                } else if field.starts_with('[') {
                    format!("{prefix}{field}")
                } else {
                    format!("{prefix}.{field}")
                },
                reason,
            },
            other => other,
        }
    }
}
