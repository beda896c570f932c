use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, OsprError>;

#[derive(Debug, Error)]
pub enum OsprError {
    #[error("unsupported transform size {width}x{height}: both axes need at least 2 samples")]
    UnsupportedSize { width: usize, height: usize },

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("image is entirely zero")]
    ZeroImage,

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("image file not found: {}", .0.display())]
    MissingImage(PathBuf),

    #[error("image is {image:?} pixels but the SSIM window is {window}")]
    ImageSmallerThanWindow { image: (usize, usize), window: usize },

    #[error("unknown SSIM component `{0}`")]
    UnknownComponent(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl OsprError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        OsprError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(location: impl Into<String>, message: impl Into<String>) -> Self {
        OsprError::Config {
            location: location.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            OsprError::Config { .. }
            | OsprError::InvalidArgument(_)
            | OsprError::UnknownComponent(_)
            | OsprError::InsufficientSamples(_)
            | OsprError::ImageSmallerThanWindow { .. }
            | OsprError::DimensionMismatch { .. }
            | OsprError::UnsupportedSize { .. }
            | OsprError::Domain(_) => 1,
            OsprError::Io { .. }
            | OsprError::MissingImage(_)
            | OsprError::UnsupportedFormat(_)
            | OsprError::ZeroImage => 2,
            OsprError::NonConvergence(_) => 3,
        }
    }
}
