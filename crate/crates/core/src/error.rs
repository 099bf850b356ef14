use std::fmt;
use std::io;
use std::path::PathBuf;

/// Matrix shape as `(rows, cols)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape(pub usize, pub usize);

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.0, self.1)
    }
}

/// What went wrong while parsing one line of a text file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    MalformedHeader(String),
    IndexOutOfRange { index: usize, dim: usize },
    UnsortedFeatures { prev: usize, next: usize },
    NonNumeric(String),
    MissingLines { expected: usize, found: usize },
    Malformed(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::MalformedHeader(s) => write!(f, "malformed header: {s}"),
            ParseErrorKind::IndexOutOfRange { index, dim } => {
                write!(f, "index {index} out of range for dimension {dim}")
            }
            ParseErrorKind::UnsortedFeatures { prev, next } => {
                write!(f, "feature indices not strictly ascending ({prev} then {next})")
            }
            ParseErrorKind::NonNumeric(s) => write!(f, "non-numeric token {s:?}"),
            ParseErrorKind::MissingLines { expected, found } => {
                write!(f, "expected {expected} data lines, found {found}")
            }
            ParseErrorKind::Malformed(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{op}: dimension mismatch between {left} and {right}")]
    DimensionMismatch {
        op: &'static str,
        left: Shape,
        right: Shape,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: {kind}")]
    Parse {
        path: String,
        line: usize,
        kind: ParseErrorKind,
    },

    #[error("{0}")]
    Infeasible(String),

    #[error("problem too large for exhaustive search: {0}")]
    SizeGuard(String),

    #[error("missing file {0}")]
    MissingFile(PathBuf),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
