//! Synthetic continuous-beam bridge.
//!
//! Exact modes of a multi-span Euler–Bernoulli beam, each driven as an
//! independent white-noise SDOF oscillator, observed by a strain array and a
//! few accelerometers with additive measurement noise.

mod modes;
mod scenario;

use thiserror::Error;

use crate::beam::BeamError;
use crate::signal::SignalError;

pub use modes::{calibrate_first_frequency, solve_modes, BeamSpec, TrueMode};
pub use scenario::{simulate, SdofDiscrete, SimOutput, SimScenario};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("mode at {frequency_hz:.3} Hz is above the Nyquist frequency {nyquist_hz:.3} Hz")]
    NyquistViolation { frequency_hz: f64, nyquist_hz: f64 },
    #[error(transparent)]
    Beam(#[from] BeamError),
    #[error(transparent)]
    Signal(#[from] SignalError),
}
