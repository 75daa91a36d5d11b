use std::marker::PhantomData;

use nalgebra::DMatrix;

use super::SignalError;
use crate::scalar::Real;

/// Physical quantity carried by a [`Record`].
pub trait Quantity: Copy + Default + std::fmt::Debug + Send + Sync + 'static {
    const NAME: &'static str;
}

/// Strain samples. Files and the simulator use microstrain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Strain;

/// Acceleration samples in m/s².
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Acceleration;

impl Quantity for Strain {
    const NAME: &'static str = "strain";
}

impl Quantity for Acceleration {
    const NAME: &'static str = "acceleration";
}

/// Multi-channel, uniformly sampled record of a sensor array along the bridge.
///
/// `samples` is laid out channels × time steps. Construction validates the
/// sampling rate, the channel positions (strictly increasing, one per row) and
/// that every sample is finite; a `Record` that exists is always valid.
#[derive(Debug, Clone, PartialEq)]
pub struct Record<T: Real, Q: Quantity> {
    samples: DMatrix<T>,
    sampling_rate_hz: T,
    positions_m: Vec<T>,
    _quantity: PhantomData<Q>,
}

/// Distributed strain array (the observations of the strain state-space model).
pub type StrainRecord<T> = Record<T, Strain>;
/// Accelerometer array used as a validation signal.
pub type AccelRecord<T> = Record<T, Acceleration>;

impl<T: Real, Q: Quantity> Record<T, Q> {
    pub fn new(
        samples: DMatrix<T>,
        sampling_rate_hz: T,
        positions_m: Vec<T>,
    ) -> Result<Self, SignalError> {
        if !(sampling_rate_hz > T::zero()) || !sampling_rate_hz.is_finite_value() {
            return Err(SignalError::Validation(format!(
                "sampling rate must be positive and finite, got {sampling_rate_hz}"
            )));
        }
        if positions_m.len() != samples.nrows() {
            return Err(SignalError::Validation(format!(
                "{} channel positions for {} channels",
                positions_m.len(),
                samples.nrows()
            )));
        }
        if samples.nrows() == 0 {
            return Err(SignalError::Validation("record has no channels".into()));
        }
        if let Some(p) = positions_m.iter().find(|p| !p.is_finite_value()) {
            return Err(SignalError::Validation(format!("non-finite channel position {p}")));
        }
        if let Some(k) = positions_m.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(SignalError::Validation(format!(
                "channel positions must be strictly increasing (index {})",
                k + 1
            )));
        }
        for (t, col) in samples.column_iter().enumerate() {
            if let Some(c) = col.iter().position(|v| !v.is_finite_value()) {
                return Err(SignalError::Validation(format!(
                    "non-finite sample at channel {c}, time step {t}"
                )));
            }
        }
        Ok(Self {
            samples,
            sampling_rate_hz,
            positions_m,
            _quantity: PhantomData,
        })
    }

    /// Build from per-channel rows.
    pub fn from_channels(
        channels: &[Vec<T>],
        sampling_rate_hz: T,
        positions_m: Vec<T>,
    ) -> Result<Self, SignalError> {
        let n = channels.first().map_or(0, Vec::len);
        if channels.iter().any(|c| c.len() != n) {
            return Err(SignalError::Validation("channels differ in length".into()));
        }
        let samples = DMatrix::from_fn(channels.len(), n, |c, t| channels[c][t]);
        Self::new(samples, sampling_rate_hz, positions_m)
    }

    /// Replace the samples, keeping rate and positions.
    pub(crate) fn with_samples(&self, samples: DMatrix<T>) -> Self {
        debug_assert_eq!(samples.nrows(), self.samples.nrows());
        Self {
            samples,
            sampling_rate_hz: self.sampling_rate_hz,
            positions_m: self.positions_m.clone(),
            _quantity: PhantomData,
        }
    }

    pub fn samples(&self) -> &DMatrix<T> {
        &self.samples
    }

    pub fn sampling_rate_hz(&self) -> T {
        self.sampling_rate_hz
    }

    pub fn positions_m(&self) -> &[T] {
        &self.positions_m
    }

    pub fn n_channels(&self) -> usize {
        self.samples.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.samples.ncols()
    }

    pub fn channel(&self, c: usize) -> Vec<T> {
        self.samples.row(c).iter().copied().collect()
    }

    pub fn into_samples(self) -> DMatrix<T> {
        self.samples
    }

    /// Multiply every sample by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        self.with_samples(&self.samples * factor)
    }

    /// Reverse the time axis.
    pub fn time_reversed(&self) -> Self {
        let n = self.n_samples();
        let samples = DMatrix::from_fn(self.n_channels(), n, |c, t| self.samples[(c, n - 1 - t)]);
        self.with_samples(samples)
    }

    /// Keep only the first `n` time steps.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.n_samples());
        self.with_samples(self.samples.columns(0, n).into_owned())
    }
}
