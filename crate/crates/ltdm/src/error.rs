use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A record violates structural rules (stamp ordering, shape mismatch).
    #[error("malformed record: {0}")]
    MalformedRecord(String),

    /// A raw log row cannot be interpreted; carries the offending row number.
    #[error("malformed log at row {row}: {reason}")]
    MalformedLog { row: usize, reason: String },

    /// A sentence admits no separation under the current dictionary.
    #[error("unsegmentable sentence: {0}")]
    UnsegmentableSentence(String),

    /// Separation enumeration exceeded the configured cap.
    #[error("separation cap exceeded: sentence admits more than {cap} separations")]
    SeparationCap { cap: usize },

    /// Parameters outside their domain (probabilities, rates, shapes).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Caller broke an API contract (e.g. pattern not in dictionary).
    #[error("contract violation: {0}")]
    Contract(String),

    /// An internal invariant failed; indicates a bug, not bad input.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
