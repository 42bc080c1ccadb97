use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("column `{0}` has zero Euclidean norm; cosine similarity is undefined")]
    ZeroNormColumn(String),

    #[error("column `{0}` is constant; Pearson correlation is undefined")]
    ConstantColumn(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix is rank deficient: numerical rank {rank} < {expected} columns (dependent: {})", dependent.join(", "))]
    RankDeficient {
        rank: usize,
        expected: usize,
        dependent: Vec<String>,
    },

    #[error("degenerate target for `{0}`: variance must be strictly positive and finite")]
    DegenerateTarget(String),

    #[error("invalid competitor: {0}")]
    InvalidCompetitor(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid correlation target: {0}")]
    InvalidCorrelation(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    ParseError {
        /// 1-based data row (header excluded).
        row: u64,
        column: String,
        message: String,
    },

    #[error("column `{0}` not found in input")]
    MissingColumn(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numeric,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::ZeroNormColumn(_) | Error::ConstantColumn(_) | Error::RankDeficient { .. } => {
                ErrorClass::Numeric
            }
            Error::Io(_) => ErrorClass::Io,
            _ => ErrorClass::Validation,
        }
    }

    /// Variant name, for messages that need a stable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::ZeroNormColumn(_) => "ZeroNormColumn",
            Error::ConstantColumn(_) => "ConstantColumn",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::DegenerateTarget(_) => "DegenerateTarget",
            Error::InvalidCompetitor(_) => "InvalidCompetitor",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::InvalidCorrelation(_) => "InvalidCorrelation",
            Error::ParseError { .. } => "ParseError",
            Error::MissingColumn(_) => "MissingColumn",
            Error::SchemaMismatch(_) => "SchemaMismatch",
            Error::Io(_) => "IoError",
        }
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let position = err.position().map(|p| p.record()).unwrap_or(0);
        match err.into_kind() {
            csv::ErrorKind::Io(e) => Error::Io(e),
            csv::ErrorKind::UnequalLengths {
                expected_len, len, ..
            } => Error::ParseError {
                row: position,
                column: String::from("*"),
                message: format!("ragged row: expected {expected_len} fields, found {len}"),
            },
            other => Error::ParseError {
                row: position,
                column: String::from("*"),
                message: format!("{other:?}"),
            },
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Io(io::Error::other(err))
    }
}
