use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("speed must be positive, got {0} m/s")]
    NonPositiveSpeed(f64),

    #[error("hessian is not positive definite")]
    IndefiniteHessian,

    #[error("quadratic program is infeasible")]
    Infeasible,

    #[error("QP solver did not converge within {iterations} iterations")]
    SolverStalled { iterations: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("brake lever arm vanishes at steering angle {delta_f} rad")]
    BrakeGeometry { delta_f: f64 },

    #[error("numerical blow-up at t = {t} s")]
    Diverged { t: f64 },
}

pub(crate) fn ensure_finite(value: f64, what: &'static str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
