use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpdeError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid of {grid} points cannot represent {modes} modes")]
    Truncation { modes: usize, grid: usize },

    #[error("step {step}: nonlinear solve did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        step: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("step size {dt} exceeds the solvability bound {bound}")]
    StepTooLarge { dt: f64, bound: f64 },

    #[error("fit refused: {0}")]
    Fit(String),

    #[error("too many nonconvergent trajectories: {failed} of {total}")]
    Exclusions { failed: usize, total: usize },

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SpdeError {
    fn from(e: std::io::Error) -> Self {
        SpdeError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SpdeError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(SpdeError::Domain(msg.into()))
}
