use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent file structure.
    #[error("schema error in {source_name}{}: {message}", line_suffix(*.line))]
    Schema {
        source_name: String,
        line: Option<usize>,
        message: String,
    },

    #[error("unknown class label {label:?} in {source_name}{}", line_suffix(*.line))]
    Vocabulary {
        source_name: String,
        line: Option<usize>,
        label: String,
    },

    /// Numerically invalid content (probabilities out of range, bad row sums).
    #[error("validation error in {source_name}{}: {message}", line_suffix(*.line))]
    Validation {
        source_name: String,
        line: Option<usize>,
        message: String,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    /// Inputs that are well-formed but carry no usable signal (e.g. one class only).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("predictor protocol error: {0}")]
    Protocol(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error: {0}")]
    Image(String),
}

fn line_suffix(line: Option<usize>) -> String {
    match line {
        Some(l) => format!(" (line {l})"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status used by the command-line front end.
    ///
    /// 1: input/schema problems, 2: argument or configuration problems,
    /// 3: degenerate data.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Argument(_) | Error::Config(_) => 2,
            Error::Degenerate(_) => 3,
            _ => 1,
        }
    }
}
