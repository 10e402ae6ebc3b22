use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("stability index mismatch: {0} vs {1}")]
    StabilityMismatch(f64, f64),

    #[error("no power-law tail at alpha = 2 (Gaussian decay)")]
    TailUndefined,

    #[error("degenerate tail amplitudes: C+ + C- must be positive")]
    DegenerateTail,

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("quadrature did not reach tolerance: error estimate {achieved:e} > {requested:e}")]
    Accuracy { achieved: f64, requested: f64 },

    #[error("fixed point did not converge: residual {residual:e} after {} iterations", history.len())]
    Convergence { residual: f64, history: Vec<f64> },

    #[error("argument {x} outside solved grid [{lo}, {hi}]")]
    Extrapolation { x: f64, lo: f64, hi: f64 },

    #[error("root tracking stalled at {last} (residual {residual:e})")]
    RootTracking { last: Complex64, residual: f64 },

    #[error("wrong branch: {0}")]
    Branch(String),

    #[error("eigensolver failed to converge at index {0}")]
    Eigensolver(usize),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("config error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// True for failures of a numerical method (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Accuracy { .. }
                | Error::Convergence { .. }
                | Error::RootTracking { .. }
                | Error::Branch(_)
                | Error::Eigensolver(_)
        )
    }
}
