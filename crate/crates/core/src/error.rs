use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("empty block: at least one row is required")]
    EmptyBlock,

    #[error("non-finite value in {what} at row {row}")]
    NonFinite { what: &'static str, row: usize },

    #[error("response value {value} at row {row} is outside the domain of the {family} family")]
    InvalidResponse {
        family: &'static str,
        row: usize,
        value: f64,
    },

    #[error("poisson mean overflows at row {row} (linear predictor {eta})")]
    Overflow { row: usize, eta: f64 },

    #[error("design matrix is singular: column {column} is linearly dependent on earlier columns")]
    SingularDesign { column: usize },

    #[error("information matrix is singular{} (column {column})", subset_suffix(*.subset))]
    SingularInformation {
        subset: Option<usize>,
        column: usize,
    },

    #[error("complete separation suspected{}: |beta| exceeded 1e4 at iteration {iteration}", subset_suffix(*.subset))]
    Separation {
        subset: Option<usize>,
        iteration: usize,
    },

    #[error("need more rows than parameters: {rows} rows for {params} parameters")]
    InsufficientRows { rows: usize, params: usize },

    #[error("recombination rejected: subsets {subsets:?} did not converge")]
    CombineRejected { subsets: Vec<usize> },

    #[error("invalid partition request: {0}")]
    InvalidPartition(String),

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration at {path}: {message}")]
    InvalidConfig { path: String, message: String },

    #[error("cannot parse {column:?} at row {row}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("missing value in column {column:?} at row {row}")]
    MissingValue { row: usize, column: String },

    #[error("no data rows in {}", .0.display())]
    NoRows(PathBuf),

    #[error("level {level:?} of column {column:?} is not in the schema")]
    UnseenLevel { column: String, level: String },

    #[error("row count changed between scan and stream: expected {expected}, found {actual}")]
    RowCountDrift { expected: usize, actual: usize },

    #[error(
        "coefficient labels differ: only in first {only_left:?}, only in second {only_right:?}"
    )]
    LabelMismatch {
        only_left: Vec<String>,
        only_right: Vec<String>,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn subset_suffix(subset: Option<usize>) -> String {
    subset
        .map(|s| format!(" in subset {s}"))
        .unwrap_or_default()
}

impl Error {
    /// Attach a 1-based subset index to errors that carry one.
    pub fn in_subset(self, index: usize) -> Self {
        match self {
            Error::SingularInformation { column, .. } => Error::SingularInformation {
                subset: Some(index),
                column,
            },
            Error::Separation { iteration, .. } => Error::Separation {
                subset: Some(index),
                iteration,
            },
            other => other,
        }
    }

    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::EmptyBlock => "empty_block",
            Error::NonFinite { .. } => "non_finite",
            Error::InvalidResponse { .. } => "invalid_response",
            Error::Overflow { .. } => "overflow",
            Error::SingularDesign { .. } => "singular_design",
            Error::SingularInformation { .. } => "singular_information",
            Error::Separation { .. } => "separation",
            Error::InsufficientRows { .. } => "insufficient_rows",
            Error::CombineRejected { .. } => "combine_rejected",
            Error::InvalidPartition(_) => "invalid_partition",
            Error::InvalidSpec(_) => "invalid_spec",
            Error::InvalidConfig { .. } => "invalid_config",
            Error::Parse { .. } => "parse",
            Error::MissingValue { .. } => "missing_value",
            Error::NoRows(_) => "no_rows",
            Error::UnseenLevel { .. } => "unseen_level",
            Error::RowCountDrift { .. } => "row_count_drift",
            Error::LabelMismatch { .. } => "label_mismatch",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
        }
    }

    /// True for failures caused by the request itself rather than the data or the fit.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidPartition(_) | Error::InvalidSpec(_) | Error::InvalidConfig { .. }
        )
    }
}
