use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt image data: {0}")]
    CorruptData(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("invalid image dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },

    #[error("kernel size must be odd and at least 1, got {0}")]
    EvenKernel(usize),

    #[error("invalid blur sigma {0}; must be positive")]
    InvalidSigma(f64),

    #[error("point ({x}, {y}) lies outside the {width}x{height} image")]
    OutOfBounds {
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },

    #[error("degenerate histogram: every pixel has intensity {0}")]
    DegenerateHistogram(u8),

    #[error("contour start ({x}, {y}) is not a foreground pixel")]
    StartNotForeground { x: usize, y: usize },

    #[error("patch cannot be fitted: {0}")]
    UnfittablePatch(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error stems from caller-supplied input (files, configs,
    /// scene descriptions) rather than an internal failure.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
