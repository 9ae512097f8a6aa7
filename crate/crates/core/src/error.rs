use alloc::string::String;

use crate::lp::LpError;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("point is outside the domain (violation {violation:e})")]
    Infeasible { violation: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("gradient of a steep regularizer is undefined at boundary coordinate {coordinate}")]
    Steepness { coordinate: usize },
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("construction not applicable: {0}")]
    NotApplicable(String),
    #[error("invalid oracle: {0}")]
    InvalidOracle(String),
    #[error("sampling radius {delta} is not below the SPSA radius {radius} at step {step}; first valid step is {first_valid}")]
    Schedule {
        step: u64,
        delta: f64,
        radius: f64,
        first_valid: u64,
    },
    #[error("invalid run configuration: {0}")]
    InvalidRun(String),
    #[error("analysis error: {0}")]
    Analysis(String),
    #[error("linear program: {0}")]
    Lp(#[from] LpError),
}
