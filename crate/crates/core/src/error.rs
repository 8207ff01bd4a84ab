use std::path::PathBuf;

/// Errors produced by the reconstruction library.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    #[error("point is behind camera (camera-frame z = {z})")]
    BehindCamera { z: f64 },

    #[error("invalid depth: {0}")]
    InvalidDepth(String),

    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error in {path} at byte {offset}: {message}")]
    Parse {
        path: PathBuf,
        offset: usize,
        message: String,
    },

    #[error("missing component: {0}")]
    MissingComponent(String),

    #[error("empty point cloud: {0}")]
    EmptyCloud(&'static str),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, offset: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            offset,
            message: message.into(),
        }
    }

    /// True for errors caused by user input (bad files, bad configuration)
    /// rather than by an internal failure.
    pub fn is_user_error(&self) -> bool {
        match self {
            Error::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
            Error::Image { .. } => false,
            _ => true,
        }
    }

    /// Short stable identifier for machine-readable reporting.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::BehindCamera { .. } => "behind-camera",
            Error::InvalidDepth(_) => "invalid-depth",
            Error::InvalidCamera(_) => "invalid-camera",
            Error::Dimension(_) => "dimension",
            Error::Config(_) => "config",
            Error::Parse { .. } => "parse",
            Error::MissingComponent(_) => "missing-component",
            Error::EmptyCloud(_) => "empty-cloud",
            Error::Io { .. } => "io",
            Error::Image { .. } => "image",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
