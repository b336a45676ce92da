use thiserror::Error;

/// Errors raised by the solvers, kernels and problem builders.
#[derive(Debug, Error)]
pub enum HomotopyError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("singular matrix (pivot magnitude {pivot:e})")]
    SingularMatrix { pivot: f64 },

    /// The Newton corrector hit a singular Jacobian at an iterate.
    #[error("singular Jacobian at iterate {iteration}")]
    SingularPoint { iteration: usize, x: Vec<f64> },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("evaluation failed at {x:?}: {message}")]
    Evaluation { message: String, x: Vec<f64> },

    #[error("integration blew up at t = {t}")]
    IntegrationBlowup { t: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Jacobian of the steering term is rank deficient, so no weight matrix
    /// can lift the singular values of the homotopy Jacobian.
    #[error("regularization impossible: steering Jacobian is rank deficient")]
    RegularizationImpossible,

    /// Tangent computation found a null space of dimension > 1.
    #[error("irregular point: augmented Jacobian is rank deficient")]
    IrregularPoint,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HomotopyError {
    pub fn eval(message: impl Into<String>, x: &[f64]) -> Self {
        HomotopyError::Evaluation { message: message.into(), x: x.to_vec() }
    }
}

pub type Result<T, E = HomotopyError> = std::result::Result<T, E>;
