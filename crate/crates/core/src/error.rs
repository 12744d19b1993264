//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // Dataset ingestion and alignment.
    #[error("missing column `{0}` in header")]
    MissingColumn(String),
    #[error("row {row}: cannot parse `{value}` as a number for column `{column}`")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },
    #[error("duplicate observation for trajectory `{id}` at time {time}")]
    DuplicateObservation { id: String, time: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("time {time} of trajectory `{id}` is not on the alignment grid")]
    OffGrid { id: String, time: f64 },
    #[error("trajectory `{id}` has missing cells under the fail-on-missing policy")]
    MissingData { id: String },
    #[error("cannot impute trajectory `{id}`: {reason}")]
    Imputation { id: String, reason: String },
    #[error("empty dataset")]
    EmptyDataset,

    // Method specification and estimation.
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("unknown argument `{arg}` for method `{method}`")]
    UnknownArgument { method: String, arg: String },
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("trajectory `{id}` is degenerate: {reason}")]
    DegenerateTrajectory { id: String, reason: String },
    #[error("cluster index {index} out of range for {k} clusters")]
    ClusterIndex { index: usize, k: usize },
    #[error("trajectory `{0}` has no cluster assignment")]
    Unassigned(String),
    #[error("stratification rule error: {0}")]
    Rule(String),
    #[error("feature method contract violation: {0}")]
    Contract(String),
    #[error("distance matrix over {n} trajectories exceeds the configured cap of {cap}")]
    Capacity { n: usize, cap: usize },
    #[error("model has no training data attached")]
    NoTrainingData,

    // Metrics and model lists.
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("incompatible partitions: {0}")]
    IncompatiblePartition(String),
    #[error("not found: {0}")]
    NotFound(String),

    // IO and serialization.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by the input data rather than by the caller's
    /// configuration or an internal failure.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::MissingColumn(_)
                | Error::Parse { .. }
                | Error::DuplicateObservation { .. }
                | Error::Shape(_)
                | Error::OffGrid { .. }
                | Error::MissingData { .. }
                | Error::Imputation { .. }
                | Error::EmptyDataset
                | Error::DegenerateTrajectory { .. }
                | Error::Io(_)
                | Error::Csv(_)
        )
    }
}
