//! Gateway error types. Network failures stay distinct from protocol
//! violations so clients can tell them apart.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("connect error: {0}")]
    Connect(std::io::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad frame: {0}")]
    BadFrame(String),

    #[error("frame of {0} bytes exceeds the limit")]
    FrameTooLarge(usize),

    #[error("session timed out waiting for a channel")]
    SessionTimeout,

    #[error("server error {code}: {message}")]
    Remote { code: String, message: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("engine error: {0}")]
    Core(#[from] vauth_core::CoreError),
}

pub type Result<T> = std::result::Result<T, GatewayError>;
