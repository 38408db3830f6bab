use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the loader.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error("permission denied: {}", .0.display())]
    PermissionDenied(PathBuf),
    #[error("not a regular file: {}", .0.display())]
    NotAFile(PathBuf),
    #[error("failed to map {}: {source}", .path.display())]
    Mapping { path: PathBuf, source: io::Error },
    #[error("I/O error on {}: {source}", .path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("format error at byte {offset}: {kind}")]
    Format { offset: u64, kind: FormatErrorKind },
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn from_io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        let path = path.into();
        match source.kind() {
            io::ErrorKind::NotFound => Error::NotFound(path),
            io::ErrorKind::PermissionDenied => Error::PermissionDenied(path),
            _ => Error::Io { path, source },
        }
    }

    pub(crate) fn format(offset: usize, kind: FormatErrorKind) -> Self {
        Error::Format {
            offset: offset as u64,
            kind,
        }
    }

    /// Byte offset of a format error, if this is one.
    pub fn offset(&self) -> Option<u64> {
        match self {
            Error::Format { offset, .. } => Some(*offset),
            _ => None,
        }
    }

    pub fn format_kind(&self) -> Option<&FormatErrorKind> {
        match self {
            Error::Format { kind, .. } => Some(kind),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatErrorKind {
    #[error("missing %%MatrixMarket banner")]
    MissingBanner,
    #[error("malformed banner line")]
    MalformedBanner,
    #[error("unsupported object {0:?} (only \"matrix\" is supported)")]
    UnsupportedObject(String),
    #[error("unsupported format {0:?} (only \"coordinate\" is supported)")]
    NotCoordinate(String),
    #[error("unsupported field {0:?}")]
    UnsupportedField(String),
    #[error("unsupported symmetry {0:?}")]
    UnsupportedSymmetry(String),
    #[error("malformed dimension line")]
    MalformedDimensions,
    #[error("matrix is not square ({rows} x {cols})")]
    NonSquare { rows: u64, cols: u64 },
    #[error("vertex count {0} exceeds the supported maximum")]
    TooManyVertices(u64),
    #[error("integer overflows 64 bits")]
    IntegerOverflow,
    #[error("malformed number")]
    MalformedNumber,
    #[error("signed vertex id")]
    SignedVertexId,
    #[error("missing field on edge line")]
    MissingField,
    #[error("vertex id {id} out of range for {vertices} vertices")]
    VertexOutOfRange { id: u64, vertices: u64 },
    #[error("declared {declared} entries but found {found}")]
    EntryCountMismatch { declared: u64, found: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
