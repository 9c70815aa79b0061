//! Error type shared across the crate.

use std::path::PathBuf;

/// All failure modes of the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record at line {line} of {path}: {msg}")]
    Malformed {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("inconsistent feature dimension at record {record}: expected {expected}, found {found}")]
    InconsistentDimension {
        record: usize,
        expected: usize,
        found: usize,
    },

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("undefined comparison: md_index tie at {0}")]
    UndefinedComparison(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("class {0} unsatisfiable: {1}")]
    ClassUnsatisfiable(String, String),

    #[error("pair budget unreachable: requested {requested}, emitted {emitted} after {attempts} attempts{}", admissible.map(|a| format!(", {a} admissible pairs exist")).unwrap_or_default())]
    BudgetUnreachable {
        requested: usize,
        emitted: usize,
        attempts: usize,
        admissible: Option<usize>,
    },

    #[error("no admissible pairs")]
    NoAdmissiblePairs,

    #[error("unknown item id {0:?}")]
    UnknownItem(String),

    #[error("undefined nDCG: all relevances are zero")]
    AllZeroRelevance,

    #[error("missing relevance for item {0:?}")]
    MissingRelevance(String),

    #[error("missing heatmap for channel {0}")]
    MissingHeatmap(usize),

    #[error("no positively contributing comparisons")]
    NoPositiveContribution,

    #[error("exact enumeration bound exceeded: n = {n} > {max}")]
    EnumerationBound { n: usize, max: usize },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("training diverged at epoch {0}: loss is non-finite")]
    Diverged(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// I/O error wrapper that keeps the offending path.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path)
        } else {
            Error::Io { path, source }
        }
    }
}
