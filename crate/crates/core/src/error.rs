use std::path::PathBuf;

/// Errors produced by the recommendation engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("embedding file contains no vectors")]
    EmptyEmbeddingFile,

    #[error("line {line}: {message}")]
    MalformedEmbeddingRow { line: usize, message: String },

    #[error("line {line}: expected dimension {expected}, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("vector dimensions differ: {left} vs {right}")]
    VectorDimension { left: usize, right: usize },

    #[error("invalid inventory: {0}")]
    InvalidInventory(String),

    #[error("duplicate codepoint {0}")]
    DuplicateCodepoint(String),

    #[error("invalid codepoint sequence {0:?}")]
    InvalidCodepoint(String),

    #[error("invalid class probabilities: {0}")]
    InvalidProbabilities(String),

    #[error("query has no usable image or caption signal")]
    EmptyQuery,

    #[error("no candidate emojis to rank")]
    NoCandidates,

    #[error("k must be at least 1")]
    InvalidK,

    #[error("no valid queries in {path} ({rejected} rejected)")]
    EmptyDataset { path: PathBuf, rejected: usize },

    #[error("label lists differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("need ≥ 2 annotators, found {0}")]
    TooFewAnnotators(usize),

    #[error("invalid annotations: {0}")]
    InvalidAnnotations(String),

    #[error("invalid vector artifact: {0}")]
    InvalidArtifact(String),

    #[error("unknown {kind} {value:?}")]
    UnknownName { kind: &'static str, value: String },

    #[error("evaluation grid is empty: {0}")]
    EmptyGrid(&'static str),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
