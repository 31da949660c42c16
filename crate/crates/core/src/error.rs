use std::path::PathBuf;

/// Errors produced by the recommender core.
///
/// Variants are grouped by how operators should react: `Shape`, `IdOutOfRange`
/// and friends indicate a caller bug or corrupt input; the `NonFinite*`
/// variants indicate a numeric failure mid-training.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty attention target")]
    EmptyAttentionTarget,

    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("{kind} id {id} out of range (limit {limit})")]
    IdOutOfRange {
        kind: &'static str,
        id: usize,
        limit: usize,
    },

    #[error("non-finite gradient in parameter group {group}")]
    NonFiniteGradient { group: &'static str },

    #[error("non-finite parameter after update in group {group}")]
    NonFiniteParam { group: &'static str },

    #[error("non-finite loss in epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("stale forward cache: {0}")]
    StaleCache(String),

    #[error("empty corpus: vocabulary needs at least one document")]
    EmptyCorpus,

    #[error("metrics require at least one evaluated user")]
    NoEvaluatedUsers,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("infeasible generator configuration: {0}")]
    Infeasible(String),

    #[error("malformed input at {path}:{line}: {detail}")]
    Parse {
        path: PathBuf,
        line: usize,
        detail: String,
    },

    #[error("checkpoint error in {path}: {detail}")]
    Checkpoint { path: PathBuf, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of the numeric kind (gradient/loss blowups), as
    /// opposed to bad inputs or I/O.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteGradient { .. }
                | Error::NonFiniteParam { .. }
                | Error::NonFiniteLoss { .. }
        )
    }
}
