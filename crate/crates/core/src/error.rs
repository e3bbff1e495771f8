use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),
    #[error("malformed header in {path}: {detail}")]
    MalformedHeader { path: PathBuf, detail: String },
    #[error("truncated payload in {path}: expected {expected} bytes, found {found}")]
    TruncatedPayload {
        path: PathBuf,
        expected: usize,
        found: usize,
    },
    #[error("inconsistent frame sizes in {dir}: {detail}")]
    InconsistentFrames { dir: PathBuf, detail: String },
    #[error("no frames found in directory {0}")]
    EmptyDirectory(PathBuf),
    #[error("bad magic in {path}: expected {expected:?}")]
    BadMagic { path: PathBuf, expected: String },
    #[error("unsupported format version {found} in {path} (expected {expected})")]
    VersionMismatch {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
    #[error("requested size {requested:?} exceeds volume {actual:?}")]
    CropTooLarge {
        requested: (usize, usize, usize),
        actual: (usize, usize, usize),
    },
    #[error("volume {dims:?} smaller than neighborhood P={p}")]
    VolumeTooSmall { dims: (usize, usize, usize), p: usize },
    #[error("neighborhood size P={0} must be odd and at least 3")]
    BadNeighborhoodSize(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("manifest error at {path}:{line}: {detail}")]
    BadManifest {
        path: PathBuf,
        line: usize,
        detail: String,
    },
    #[error("zero-norm feature vector cannot be classified")]
    ZeroNormFeature,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
