use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("invalid phase config: {0}")]
    PhaseConfig(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("no rows")]
    NoRows,
    #[error("degenerate labels: training data contains a single class")]
    DegenerateLabels,
    #[error("insufficient minority samples: {0} (need at least 2)")]
    InsufficientMinority(usize),
    #[error("LOSO requires >= 2 subjects, got {0}")]
    TooFewSubjects(usize),
    #[error("schema fingerprint mismatch: model {expected}, input {found}")]
    SchemaMismatch { expected: String, found: String },
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("invalid cohort spec: {0}")]
    InvalidCohort(String),
    #[error("unsupported model format version {0}")]
    ModelFormat(u32),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
