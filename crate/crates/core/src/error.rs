use thiserror::Error;

/// Errors raised by the simulation pipeline.
///
/// Every variant maps onto a stable machine-readable code (see [`Error::code`])
/// so that the CLI and sweep records can report failures uniformly.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("detuning of the {0} cavity mode is zero")]
    ZeroDetuning(&'static str),

    #[error("ratio hbar*omega/(k_B*T) must be positive, got {0}")]
    NonpositiveRatio(f64),

    #[error("mean-field linear system is singular{}", at_time(*.time))]
    SingularSystem { time: Option<f64> },

    #[error("integrator failed to meet tolerance at t = {time} (step {step:e})")]
    StepFailure { time: f64, step: f64 },

    #[error("moment matrix lost positivity at t = {time}: smallest eigenvalue {min_eigenvalue:e}")]
    PsdViolation { time: f64, min_eigenvalue: f64 },

    #[error("occupancy of mode {mode} is negative ({value:e})")]
    NegativeOccupancy { mode: usize, value: f64 },

    #[error("initial occupancy of the first membrane is zero")]
    ZeroInitial,

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("null space of the coupling matrix has dimension {0}")]
    DegenerateNullspace(usize),

    #[error("both drive fields are zero")]
    ZeroFields,

    #[error("sweep grid has {cells} cells, above the cap of {cap}")]
    GridTooLarge { cells: usize, cap: usize },

    #[error("every sweep cell failed")]
    AllFailed,

    #[error("numerical overflow at t = {0}")]
    Overflow(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

fn at_time(time: Option<f64>) -> String {
    match time {
        Some(t) => format!(" at t = {t}"),
        None => String::new(),
    }
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::ZeroDetuning(_) => "ZERO_DETUNING",
            Error::NonpositiveRatio(_) => "NONPOSITIVE_RATIO",
            Error::SingularSystem { .. } => "SINGULAR_SYSTEM",
            Error::StepFailure { .. } => "STEP_FAILURE",
            Error::PsdViolation { .. } => "PSD_VIOLATION",
            Error::NegativeOccupancy { .. } => "NEGATIVE_OCCUPANCY",
            Error::ZeroInitial => "ZERO_INITIAL",
            Error::NoConvergence => "NO_CONVERGENCE",
            Error::PreconditionViolated(_) => "PRECONDITION_VIOLATED",
            Error::DegenerateNullspace(_) => "DEGENERATE_NULLSPACE",
            Error::ZeroFields => "ZERO_FIELDS",
            Error::GridTooLarge { .. } => "GRID_TOO_LARGE",
            Error::AllFailed => "ALL_FAILED",
            Error::Overflow(_) => "OVERFLOW",
            Error::InvalidInput(_) => "INVALID_INPUT",
        }
    }

    pub(crate) fn with_time(self, t: f64) -> Self {
        match self {
            Error::SingularSystem { time: None } => Error::SingularSystem { time: Some(t) },
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
