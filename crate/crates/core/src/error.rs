use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("amplitude would leave the window [{min}, {max}]")]
    WindowOverflow { min: i64, max: i64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("step {step} is outside the explicit schedule of length {len}")]
    StepOutOfRange { step: u64, len: usize },

    #[error("{what} is not supported for {schedule} schedules")]
    Unsupported {
        what: &'static str,
        schedule: &'static str,
    },

    #[error("invalid position profile: {0}")]
    InvalidProfile(String),

    #[error("mismatched snapshot spacing: {0}")]
    SnapshotSpacing(String),

    #[error("residual input rejected: {0}")]
    ResidualInput(String),

    #[error("Dirac regime precondition violated: {0}")]
    DiracRegime(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
