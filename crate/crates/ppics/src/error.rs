use std::path::PathBuf;

use thiserror::Error;

/// Everything the front end can fail with. Each variant maps to one exit
/// code category; see [`AppError::category`].
#[derive(Debug, Error)]
pub enum AppError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("row {row}, column {col}: cannot parse {value:?} as a finite number")]
    Parse {
        row: usize,
        col: usize,
        value: String,
    },
    #[error("row {row} has {found} fields, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("need more rows than columns, got {n} rows and {p} columns")]
    TooFewRows { n: usize, p: usize },
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Core(#[from] ppics_core::Error),
}

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INPUT: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const ALL_CAPPED: i32 = 4;
}

impl AppError {
    /// `"input"`, `"numerical"` or `"io"`.
    pub fn category(&self) -> &'static str {
        use ppics_core::Error as E;
        match self {
            AppError::Write { .. } => "io",
            AppError::Core(
                E::NotPositiveDefinite { .. } | E::DegeneratePairs | E::SingularDesign,
            ) => "numerical",
            _ => "input",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "numerical" => exit::NUMERICAL,
            "io" => 1,
            _ => exit::INPUT,
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
