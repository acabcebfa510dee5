use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} is singular at r = {r}")]
    Singular { what: &'static str, r: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("step size underflow at r* = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("step budget of {0} exhausted")]
    TooManySteps(usize),

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("degenerate case: {0}")]
    Degenerate(String),

    #[error("eigensolver: {0}")]
    Eigen(String),
}

pub type Result<T> = std::result::Result<T, Error>;
