use thiserror::Error;

/// Errors produced by grid construction, coefficient laws, functionals,
/// the solver and the config layer.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("positivity violation: min density {min:.6e}")]
    Positivity { min: f64 },

    #[error("unsupported derivative order {0}; only 1..=3 are available")]
    UnsupportedOrder(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("misuse: {0}")]
    Misuse(String),

    #[error("grid mismatch: fields live on different grids")]
    GridMismatch,

    #[error("field is not finite: {0}")]
    NonFinite(String),

    #[error("sampling too sparse: {0}")]
    SamplingDensity(String),
}

pub type Result<T> = std::result::Result<T, Error>;
