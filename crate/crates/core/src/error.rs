//! Error type shared by every module of the core crate.

use alloc::string::String;

/// Errors raised by operator construction, solving and protocol building.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("target is not golden: R_F = {robustness}, 1/F_F = {inverse_overlap}, R_F^F = {standard}")]
    NotGolden {
        robustness: f64,
        inverse_overlap: f64,
        standard: f64,
    },
    #[error("conversion impossible: Omega(rho) = {omega_rho} < Omega(rho') = {omega_target}")]
    NoGo { omega_rho: f64, omega_target: f64 },
    #[error("certificate check failed: {0}")]
    Certificate(String),
    #[error("dual degenerate: complementary slackness residual {0}")]
    DualDegenerate(f64),
    #[error("theorem violation: {0}")]
    TheoremViolation(String),
    #[error("undecided: {0}")]
    Undecided(String),
}

pub type Result<T> = core::result::Result<T, Error>;
