use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid channel parameters: {0}")]
    InvalidChannel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no sign change of the CGF derivative on [{lo}, {hi}]: k'({lo}) = {d_lo}, k'({hi}) = {d_hi}")]
    NoSaddlepoint {
        lo: f64,
        hi: f64,
        d_lo: f64,
        d_hi: f64,
    },

    #[error(
        "saddlepoint search did not converge: |k'(s)| = {residual} after {iterations} iterations"
    )]
    NotConverged { residual: f64, iterations: usize },

    #[error("saddlepoint curvature is not positive: k''(s) = {0}")]
    NonPositiveCurvature(f64),

    #[error("no root of the {what} stationarity condition on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoRoot {
        what: &'static str,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
