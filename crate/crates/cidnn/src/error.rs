//! Crate-wide error type.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("signal too short: {0}")]
    SignalTooShort(String),

    #[error("no active speech: signal is all zero")]
    NoActiveSpeech,

    #[error("silent noise: cannot scale to a target SNR")]
    SilentNoise,

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("no speech-active frames")]
    NoActiveFrames,

    #[error("wav error in {path}: {reason}")]
    Wav { path: PathBuf, reason: String },

    #[error("model file error in {path}: {reason}")]
    Model { path: PathBuf, reason: String },

    #[error("manifest error in {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
