use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular point: {0}")]
    SingularPoint(String),

    #[error("invalid parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("step rejected: dt = {dt:e} exceeds stability bound {bound:e}")]
    StepRejected { dt: f64, bound: f64 },

    #[error("density positivity failure at t = {time}: min density {min_density:e}")]
    PositivityFailure { time: f64, min_density: f64 },

    #[error("density ceiling exceeded at t = {time}: max density {max_density} > {ceiling}")]
    DensityCeiling { time: f64, max_density: f64, ceiling: f64 },

    #[error("path left the slab through the far cap at t = {time}")]
    TruncationExit { time: f64 },

    #[error("path crossed the wall by {depth:e} at t = {time}")]
    WallExcursion { time: f64, depth: f64 },

    #[error("underdetermined fit: {0}")]
    UnderdeterminedFit(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the `halfslip` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParams(_) => 2,
            Error::PositivityFailure { .. } => 3,
            Error::StepRejected { .. } => 4,
            Error::Config(_) | Error::Io(_) | Error::Snapshot(_) | Error::GridMismatch(_) => 5,
            Error::InvalidArgument(_) | Error::SingularPoint(_) | Error::InvalidKernel(_) | Error::InvalidDomain(_) => {
                6
            }
            Error::DensityCeiling { .. } => 7,
            Error::TruncationExit { .. } | Error::WallExcursion { .. } => 8,
            Error::UnderdeterminedFit(_) => 9,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
