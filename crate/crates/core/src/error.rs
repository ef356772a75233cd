use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("distribution is identically zero")]
    ZeroDistribution,

    #[error("duplicate qubit {0} in gate operands")]
    DuplicateQubit(usize),

    #[error("value {value} does not fit in a {bits}-qubit register")]
    RegisterValue { value: usize, bits: usize },

    #[error("register {0} overlaps another register")]
    OverlappingRegisters(String),

    #[error("post-selected outcome has zero probability")]
    ImpossibleOutcome,

    #[error(
        "velocity wrap violation at column j={column}: shift {shift} pushes amplitude {magnitude:e} across the velocity boundary"
    )]
    WrapViolation {
        column: usize,
        shift: i64,
        magnitude: f64,
    },

    #[error("CFL counter D[{column}] = {value} left (-1, 1)")]
    CflViolation { column: usize, value: f64 },

    #[error("invalid mode window: {0}")]
    InvalidModeWindow(String),

    #[error("singular Green's function at the zero mode")]
    ZeroMode,

    #[error("no accepted shots during post-selection")]
    NoAcceptedShots,

    #[error("tomography did not converge after {iterations} iterations (last log-likelihood gain {last_gain:e})")]
    TomographyNonConvergence { iterations: usize, last_gain: f64 },

    #[error("plasma dispersion function is undefined on the real axis (w = {0})")]
    RealAxis(f64),

    #[error("no dispersion root bracketed for k/kJ = {ratio}; scanned residuals: {scan:?}")]
    NoRoot { ratio: f64, scan: Vec<(f64, f64)> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error on line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("physics check failed: {0}")]
    Physics(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a physical or numerical assertion, as opposed to
    /// usage or I/O problems.
    pub fn is_physics(&self) -> bool {
        matches!(
            self,
            Error::WrapViolation { .. }
                | Error::CflViolation { .. }
                | Error::Physics(_)
                | Error::ImpossibleOutcome
                | Error::NoAcceptedShots
                | Error::TomographyNonConvergence { .. }
                | Error::NoRoot { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
