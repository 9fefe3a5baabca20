use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("header: {0}")]
    Header(String),

    #[error("raster size mismatch: header implies {expected} bytes, file has {actual}")]
    RasterSize { expected: u64, actual: u64 },

    #[error("unsupported data type code {0} (expected 4, 5 or 12)")]
    UnsupportedDataType(u32),

    #[error("wavelengths must be strictly increasing (band {index}: {value} nm)")]
    NonIncreasingWavelengths { index: usize, value: f64 },

    #[error("invalid cube: {0}")]
    InvalidCube(String),

    #[error("value {value} at sample {index} cannot be stored as {data_type}")]
    Unrepresentable {
        value: f64,
        index: usize,
        data_type: &'static str,
    },

    #[error("band window [{lo}, {hi}) nm contains no band of the cube")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("pixel ({row}, {col}) has an all-zero spectrum")]
    ZeroSpectrum { row: usize, col: usize },

    #[error("spectral angle undefined for a zero vector")]
    ZeroVector,

    #[error("band count mismatch: {left} vs {right}")]
    BandMismatch { left: usize, right: usize },

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("superpixel count {k} out of range 1..={pixels}")]
    SuperpixelCount { k: usize, pixels: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown superpixel label {0}")]
    UnknownLabel(usize),

    #[error("skin mask is empty")]
    EmptyMask,

    #[error("no superpixel intersects the skin mask")]
    NoSkinSuperpixel,

    #[error("signature set is empty")]
    EmptySignatureSet,

    #[error("probe person {0:?} does not appear in the gallery")]
    OpenSet(String),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("id misalignment: {0}")]
    IdMismatch(String),

    #[error("image format: {0}")]
    ImageFormat(String),

    #[error("csv: {0}")]
    Csv(String),

    #[error("config: {0}")]
    Config(String),

    #[error("metamer generation infeasible after {attempts} attempts (min angle {min_angle} rad)")]
    MetamerInfeasible { attempts: usize, min_angle: f64 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
