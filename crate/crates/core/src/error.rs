use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("duplicate date {0}")]
    DuplicateDate(chrono::NaiveDate),

    #[error("unknown timezone {0:?}")]
    UnknownTimezone(String),

    #[error("no posts")]
    NoPosts,

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("zero-norm row {row}")]
    ZeroNormRow { row: usize },

    #[error("non-finite value at row {row}")]
    NonFinite { row: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("degenerate bandwidth: all pairwise distances are zero")]
    DegenerateBandwidth,

    #[error("rank 0 embedding matrix: all rows identical")]
    RankZero,

    #[error("underdetermined design: {rows} usable rows for {cols} columns")]
    Underdetermined { rows: usize, cols: usize },

    #[error("rank-deficient design: collinear columns {0:?}")]
    RankDeficient(Vec<String>),

    #[error("HAC bandwidth {bandwidth} must be smaller than the sample size {n}")]
    BandwidthTooLarge { bandwidth: usize, n: usize },

    #[error("non-positive variance for linear combination: {0}")]
    NonPositiveVariance(f64),

    #[error("singular covariance block")]
    SingularCovariance,

    #[error("embedding file does not match posts: {0}")]
    EmbeddingMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("[{stage}] {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Tags an error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            already @ Error::Stage { .. } => already,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }
}
