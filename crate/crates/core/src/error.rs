use thiserror::Error;

/// Errors produced anywhere in the solver stack.
#[derive(Debug, Error)]
pub enum QnlError {
    /// Inconsistent grid, horizon or study parameters.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("kernel `{kernel}` cannot be evaluated at s = {s}: {reason}")]
    KernelEvaluation {
        kernel: String,
        s: f64,
        reason: &'static str,
    },

    #[error("quadrature did not reach tolerance {tolerance:e} (estimate {estimate:e})")]
    Quadrature { tolerance: f64, estimate: f64 },

    #[error("grid mismatch between operator and field")]
    GridMismatch,

    /// A time step produced a non-finite value.
    #[error("numerical instability at step {step} (t = {t}): non-finite value at node {node}")]
    Instability { step: usize, t: f64, node: isize },

    /// The explicit step violates the Gershgorin bound dt * max|A_ii| <= 2.
    #[error("CFL violation: dt * max|A_ii| = {margin} exceeds {limit}")]
    Cfl { margin: f64, limit: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = QnlError> = std::result::Result<T, E>;

impl QnlError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        QnlError::Config(msg.into())
    }
}
