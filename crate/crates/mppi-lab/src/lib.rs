//! Experiment runner around `mppi-core`: registered scenarios, deterministic
//! CSV/JSON artifact emission, companion plot scripts, and the acceptance
//! suite that pins solver behavior to certified oracle references.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod csv_out;
pub mod plots;
pub mod runrec;

use mppi_core::CoreError;

/// Process-level failure classes; the binary maps them onto exit codes
/// (0 success, 1 failed acceptance criterion, 2 usage, 3 numeric or i/o).
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    /// Bad invocation: unknown flag value, malformed list, bad config file.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl LabError {
    /// Unknown scenario names are usage errors: the caller mistyped the
    /// command line, and the message lists what is registered.
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Usage(_) => 2,
            LabError::Core(CoreError::UnknownScenario { .. }) => 2,
            LabError::Core(_) | LabError::Io(_) => 3,
        }
    }
}

pub type LabResult<T> = Result<T, LabError>;
