use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax { line: usize, col: usize, message: String },

    #[error("invalid program: {0}")]
    Invalid(String),

    #[error("illegal mode in call to {pred}: {goal}")]
    IllegalMode { pred: String, goal: String },

    #[error("unknown procedure {0}")]
    Existence(String),

    #[error("instantiation error in {0}")]
    Instantiation(String),

    #[error("type error: {0}")]
    Type(String),

    #[error("{0}")]
    TableError(String),

    #[error("step limit of {0} exceeded")]
    StepLimit(u64),

    #[error("bottom-up evaluation did not converge within {0} iterations")]
    IterationCap(usize),

    #[error("not supported by the bottom-up evaluator: {0}")]
    Unsupported(String),

    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad data in {}: {message}", path.display())]
    Data { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Short machine-readable category, used by the service layer.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "syntax",
            Error::Invalid(_) => "invalid",
            Error::IllegalMode { .. } => "illegal_mode",
            Error::Existence(_) => "existence",
            Error::Instantiation(_) => "instantiation",
            Error::Type(_) => "type",
            Error::TableError(_) => "table_error",
            Error::StepLimit(_) => "step_limit",
            Error::IterationCap(_) => "iteration_cap",
            Error::Unsupported(_) => "unsupported",
            Error::Io { .. } => "io",
            Error::Data { .. } => "data",
        }
    }
}
