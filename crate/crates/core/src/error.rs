use thiserror::Error;

/// Everything that can go wrong while building a metric or estimating an entropy.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("InvalidSpec: {0}")]
    InvalidSpec(String),

    #[error("NonPositiveMetric: metric is not positive definite at r = {radius}")]
    NonPositiveMetric { radius: f64 },

    #[error("IncompleteMetric: spec `{spec}` has alpha = 0, entropy is undefined")]
    IncompleteMetric { spec: String },

    #[error("TailTooLarge: series tail bound {bound:e} at r = {radius} exceeds 1e-12")]
    TailTooLarge { radius: f64, bound: f64 },

    #[error("DomainError: point norm {norm} is not inside the unit ball")]
    DomainError { norm: f64 },

    #[error("FitRejected: {reason}")]
    FitRejected { reason: String },

    #[error("DegenerateDecay: decay slope {slope} is not positive")]
    DegenerateDecay { slope: f64 },

    #[error("NoBracket: both ends of [{lo}, {hi}] classify as {class}")]
    NoBracket { lo: f64, hi: f64, class: String },

    #[error("QuadratureFailure: {0}")]
    QuadratureFailure(String),

    #[error("Unconverged: extrapolation residual {residual:e} exceeds tolerance {tolerance:e}")]
    Unconverged { residual: f64, tolerance: f64 },

    #[error("WindowTooShort: {0}")]
    WindowTooShort(String),

    #[error("MethodDisagreement: {0}")]
    MethodDisagreement(String),
}

impl Error {
    /// Process exit code for this error: 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidSpec(_)
            | Error::NonPositiveMetric { .. }
            | Error::IncompleteMetric { .. }
            | Error::TailTooLarge { .. }
            | Error::DomainError { .. } => 2,
            Error::FitRejected { .. }
            | Error::DegenerateDecay { .. }
            | Error::NoBracket { .. }
            | Error::QuadratureFailure(_)
            | Error::Unconverged { .. }
            | Error::WindowTooShort(_)
            | Error::MethodDisagreement(_) => 3,
        }
    }

    /// The bare variant name, as printed in diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::NonPositiveMetric { .. } => "NonPositiveMetric",
            Error::IncompleteMetric { .. } => "IncompleteMetric",
            Error::TailTooLarge { .. } => "TailTooLarge",
            Error::DomainError { .. } => "DomainError",
            Error::FitRejected { .. } => "FitRejected",
            Error::DegenerateDecay { .. } => "DegenerateDecay",
            Error::NoBracket { .. } => "NoBracket",
            Error::QuadratureFailure(_) => "QuadratureFailure",
            Error::Unconverged { .. } => "Unconverged",
            Error::WindowTooShort(_) => "WindowTooShort",
            Error::MethodDisagreement(_) => "MethodDisagreement",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
