//! Crate-wide error type.

use std::fmt;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// A tensor did not have the shape an operation required. `context`
    /// names the operation or layer, `expected`/`actual` are the shapes.
    ShapeMismatch {
        context: String,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },
    /// A configuration value violated its contract (non-positive dimension,
    /// negative weight, empty attribute group, ...).
    InvalidConfig(String),
    /// A label or count was outside its legal domain.
    InvalidValue(String),
    /// A text file did not match its line grammar. Line numbers are 1-based.
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    /// A binary checkpoint was truncated, had a bad magic string, or an
    /// unsupported version.
    CheckpointFormat(String),
    /// Training produced a non-finite joint loss; carries the iteration and
    /// the per-attribute losses observed at the failure point.
    NonFiniteLoss {
        iteration: u64,
        attribute_losses: Vec<f64>,
        fld_loss: f64,
    },
    /// An operation that needs at least one element got none.
    EmptyInput(String),
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch {
                context,
                expected,
                actual,
            } => write!(
                f,
                "shape mismatch in {context}: expected {expected:?}, got {actual:?}"
            ),
            Error::InvalidConfig(msg) => write!(f, "invalid config: {msg}"),
            Error::InvalidValue(msg) => write!(f, "invalid value: {msg}"),
            Error::Parse {
                path,
                line,
                message,
            } => write!(f, "parse error in {} at line {line}: {message}", path.display()),
            Error::CheckpointFormat(msg) => write!(f, "bad checkpoint: {msg}"),
            Error::NonFiniteLoss {
                iteration,
                attribute_losses,
                fld_loss,
            } => write!(
                f,
                "non-finite joint loss at iteration {iteration}: attribute losses {attribute_losses:?}, landmark loss {fld_loss}"
            ),
            Error::EmptyInput(msg) => write!(f, "empty input: {msg}"),
            Error::Io { path, source } => write!(f, "io error on {}: {source}", path.display()),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
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
}
