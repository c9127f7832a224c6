//! Crate-wide error type.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    Io(std::io::Error),
    Csv(csv::Error),
    Json(serde_json::Error),
    /// The named label column is not present in the CSV header.
    MissingLabelColumn(String),
    /// The label column holds `found` distinct values; exactly two are required.
    LabelCardinality {
        found: usize,
    },
    /// Every row was dropped by the missing-value filter.
    NoRowsSurvived,
    /// Fewer rows than an operation needs.
    TooFewRows {
        needed: usize,
        got: usize,
    },
    /// A random split produced a single-class training set.
    SingleClassSplit {
        seed: u64,
    },
    DimensionMismatch {
        expected: usize,
        got: usize,
    },
    /// A configuration value is out of its admissible range.
    InvalidConfig(String),
    /// A non-finite or degenerate value arose; `context` names the site
    /// (layer, set, kernel) where it was detected.
    Numeric {
        context: String,
    },
    /// A linear system was too ill-conditioned to invert reliably.
    Singular {
        cond: f64,
    },
    /// The SVM solver hit its update cap before reaching tolerance.
    NoConvergence {
        residual: f64,
    },
    TooFewSupportVectors {
        got: usize,
    },
    /// Training aborted mid-run; the partial report records what happened
    /// up to the failing iteration.
    Training {
        at_iteration: usize,
        report: Box<crate::train::TrainReport>,
        source: Box<Error>,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Io(e) => write!(f, "io error: {e}"),
            Error::Csv(e) => write!(f, "csv error: {e}"),
            Error::Json(e) => write!(f, "json error: {e}"),
            Error::MissingLabelColumn(name) => {
                write!(f, "label column {name:?} not found in header")
            }
            Error::LabelCardinality { found } => {
                write!(f, "label column must have exactly 2 distinct values, found {found}")
            }
            Error::NoRowsSurvived => write!(f, "no rows survived missing-value filtering"),
            Error::TooFewRows { needed, got } => {
                write!(f, "need at least {needed} rows, got {got}")
            }
            Error::SingleClassSplit { seed } => write!(
                f,
                "split with seed {seed} left a single-class training set; re-split with a different seed"
            ),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Numeric { context } => write!(f, "numeric failure at {context}"),
            Error::Singular { cond } => write!(
                f,
                "linear system is numerically singular (condition estimate {cond:.3e}); \
                 a larger regularizer eta may help"
            ),
            Error::NoConvergence { residual } => {
                write!(f, "SVM solver did not converge (max KKT residual {residual:.3e})")
            }
            Error::TooFewSupportVectors { got } => {
                write!(f, "need at least 2 support vectors, got {got}")
            }
            Error::Training { at_iteration, source, .. } => {
                write!(f, "training failed at iteration {at_iteration}: {source}")
            }
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            Error::Csv(e) => Some(e),
            Error::Json(e) => Some(e),
            Error::Training { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e)
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e)
    }
}
