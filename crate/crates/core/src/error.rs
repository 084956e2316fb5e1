use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("label {0} is already present in the index")]
    DuplicateLabel(u32),

    #[error("no layer assignment for label {0}")]
    MissingAssignment(u32),

    #[error("index is empty")]
    EmptyIndex,

    #[error("k = {k} exceeds ef_search = {ef_search}")]
    KExceedsEf { k: usize, ef_search: usize },

    #[error("label {label} is not present on layer {layer} of branch {branch}")]
    NotInLayer { label: u32, layer: usize, branch: usize },

    #[error("label {0} has no LID value")]
    MissingLid(u32),

    #[error("no entry point outside the exclude set is reachable")]
    ExcludeExhausted,

    #[error("degenerate neighborhood: {0}")]
    DegenerateNeighborhood(String),

    #[error("format error at {location}: {reason}")]
    Format { location: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_byte(offset: usize, reason: impl Into<String>) -> Self {
        Error::Format {
            location: format!("byte {offset}"),
            reason: reason.into(),
        }
    }

    pub(crate) fn at_line(line: usize, reason: impl Into<String>) -> Self {
        Error::Format {
            location: format!("line {line}"),
            reason: reason.into(),
        }
    }
}
