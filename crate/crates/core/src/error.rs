use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("score sets differ")]
    ScoreSetMismatch,

    #[error("invalid score set: {0}")]
    InvalidScoreSet(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid transition: {0}")]
    InvalidTransition(String),

    #[error("unknown {kind} label `{label}`")]
    UnknownLabel { kind: &'static str, label: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("test `{test}` is not more discerning than `{against}` at type `{type_label}`")]
    NotDiscerning {
        type_label: String,
        test: String,
        against: String,
    },

    #[error("authentication rate is not most discerning: ({0}, {1}, {2}) violates the three-type condition")]
    NotMostDiscerning(String, String, String),

    #[error("quadrature did not converge on [{lo}, {hi}]")]
    Quadrature { lo: f64, hi: f64 },

    #[error("virtual value is not increasing near {theta}")]
    NonMonotoneVirtualValue { theta: f64 },

    #[error("precision is negative ({value}) at {theta}")]
    NegativePrecision { theta: f64, value: f64 },

    #[error("linear program failed: {0}")]
    LinearProgram(String),
}

pub type Result<T> = std::result::Result<T, Error>;
