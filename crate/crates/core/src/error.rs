use thiserror::Error;

/// Errors raised by the model, the Riemann solver and the time loop.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid physical parameters: {0}")]
    InvalidParams(String),

    #[error("state outside the admissibility domain: {0}")]
    Domain(String),

    #[error("non-hyperbolic state: dP/dh = {value} <= 0")]
    NonHyperbolic { value: f64 },

    #[error("relaxed Riemann fan rejected: {0}")]
    StarState(String),

    #[error("cell {cell} left the admissibility domain after the {stage} update: {detail}")]
    AdmissibilityLoss {
        cell: usize,
        stage: &'static str,
        detail: String,
    },

    #[error("implicit source solve failed in cell {cell}: {detail}")]
    SourceSolveFailure { cell: usize, detail: String },

    #[error("time step collapsed: dt = {dt:e} < {dt_min:e} at t = {t}")]
    TimeStepCollapse { dt: f64, dt_min: f64, t: f64 },

    #[error("free-energy dissipation violated in cell {cell} at step {step}: residual {residual:e} > {tolerance:e}")]
    DissipationViolation {
        cell: usize,
        step: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParams(_) | Error::Config(_) => 2,
            Error::DissipationViolation { .. } => 4,
            Error::Io(_) => 1,
            _ => 3,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "invalid_params",
            Error::Domain(_) => "domain",
            Error::NonHyperbolic { .. } => "non_hyperbolic",
            Error::StarState(_) => "star_state",
            Error::AdmissibilityLoss { .. } => "admissibility_loss",
            Error::SourceSolveFailure { .. } => "source_solve_failure",
            Error::TimeStepCollapse { .. } => "time_step_collapse",
            Error::DissipationViolation { .. } => "dissipation_violation",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
