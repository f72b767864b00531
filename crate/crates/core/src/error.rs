use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid drive: {0}")]
    InvalidDrive(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("stationary solve did not converge (residual {residual:e})")]
    NonConvergent { residual: f64 },

    #[error("stationary solve did not converge at eps = {eps} GHz, amp = {amp} GHz (row {row}, col {col})")]
    NonConvergentAt { eps: f64, amp: f64, row: usize, col: usize },

    #[error("degenerate rate system: all rates are zero")]
    DegenerateSystem,

    #[error("time step rejected: {0}")]
    StepRejected(String),

    #[error("regime classification needs at least two left-well levels, found {0}")]
    InsufficientLevels(usize),
}
