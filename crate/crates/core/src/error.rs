use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {what} at coordinate {coordinate}")]
    NonFinite { what: String, coordinate: usize },

    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    #[error("system `{system}` requires parameter `{key}`")]
    MissingParameter { system: String, key: String },

    #[error("infeasible parameters, violates ({condition}): {detail}")]
    Infeasible { condition: String, detail: String },

    #[error("domain too thin in B_R (R = {radius}): {accepted} of {draws} draws accepted")]
    DomainTooThin { radius: f64, accepted: usize, draws: usize },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("solution blew up at t = {t}")]
    BlowUp { t: f64 },

    #[error("time {t} outside [0, {t_final}]")]
    OutOfRange { t: f64, t_final: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("certificate error: {0}")]
    Certificate(String),

    #[error("dissipation bound is not positive on [{lo}, {hi}] (min = {min})")]
    NonPositiveRate { lo: f64, hi: f64, min: f64 },

    #[error("no bracket found below s = 1e18 for value {value}")]
    BracketNotFound { value: f64 },

    #[error("horizon {horizon} shorter than 10 grid steps (dt = {dt})")]
    HorizonTooShort { horizon: f64, dt: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
