use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("image dimensions differ: {expected:?} vs {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("filtration is not nested: level {level} is not contained in level {}", level + 1)]
    NestednessViolation { level: usize },

    #[error("source complex is not contained in target complex: missing {cell}")]
    InclusionViolation { cell: String },

    #[error("chain is not expressible in the target homology basis")]
    NotInSpan,

    #[error("level {level} out of range (expected {min}..={max})")]
    LevelOutOfRange { level: usize, min: usize, max: usize },

    #[error("class has {found} coordinates but the homology at level {level} has dimension {expected}")]
    ClassDimension {
        level: usize,
        expected: usize,
        found: usize,
    },

    #[error("invalid poset: {0}")]
    InvalidPoset(String),

    #[error("shape mismatch for restriction {from} -> {to}: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        from: usize,
        to: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("missing restriction for covering relation {from} <= {to}")]
    MissingRestriction { from: usize, to: usize },

    #[error("{from} <= {to} is not a covering relation")]
    NotACover { from: usize, to: usize },

    #[error("functoriality violated: restriction maps do not compose along {p} <= {q} <= {r}")]
    FunctorialityViolation { p: usize, q: usize, r: usize },

    #[error("open set is not up-closed: {below} is in it but {above} is not")]
    NotUpClosed { below: usize, above: usize },

    #[error("patch does not come from the given image: {0}")]
    PatchMismatch(String),

    #[error("closures of the two patch pieces meet at pixels {a:?} and {b:?}")]
    HypothesisViolation { a: (usize, usize), b: (usize, usize) },
}

/// Coarse failure class, for exit statuses and diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Io,
    Parse,
    Validation,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } => ErrorKind::Io,
            Error::Parse(_) => ErrorKind::Parse,
            _ => ErrorKind::Validation,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
