use strainmodal::beam::BeamError;
use strainmodal::signal::SignalError;
use strainmodal::sim::SimError;
use strainmodal::ssi::SsiError;
use thiserror::Error;

/// Failure of a subcommand, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("simulation error: {0}")]
    Simulation(SimError),
    #[error("identification failed: {0}")]
    Identification(String),
}

impl CliError {
    /// 2 for configuration and usage, 3 for simulation, 4 for
    /// identification or fit degeneracy.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Simulation(_) => 3,
            CliError::Identification(_) => 4,
        }
    }

    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Config(format!("{}: {e}", path.display()))
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidScenario(_)
            | SimError::Beam(BeamError::PositionOutOfRange { .. } | BeamError::InvalidLayout(_)) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Simulation(other),
        }
    }
}

impl From<SignalError> for CliError {
    fn from(e: SignalError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<SsiError> for CliError {
    fn from(e: SsiError) -> Self {
        match e {
            SsiError::RecordTooShort { .. } | SsiError::InvalidConfig(_) | SsiError::OrderTooHigh { .. } => {
                CliError::Config(e.to_string())
            }
            other => CliError::Identification(other.to_string()),
        }
    }
}
