use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("random-unitary parameters violate |alpha|^2 + |beta|^2 = 1 (deviation {deviation:e})")]
    NormViolation { deviation: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("usage pattern mismatch: {0}")]
    PatternMismatch(String),

    #[error("topology error: {0}")]
    Topology(String),

    #[error("correlator simulation supports n <= 3 sources, got {0}")]
    Dimension(usize),

    #[error("channel does not match witness case: {0}")]
    CaseMismatch(String),

    #[error("closed-form mismatch in {what}: max deviation {max_deviation:e}")]
    FormulaMismatch { what: String, max_deviation: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
