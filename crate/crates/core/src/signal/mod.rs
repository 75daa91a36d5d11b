//! Strain and acceleration records: ingestion, validation and preprocessing.

mod filter;
mod io;
mod record;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::scalar::Real;

pub use filter::{butterworth_highpass, high_pass, Biquad, FilterKind, FilterSpec};
pub use io::{load_record, save_record, LoadOptions, RecordFormat, BINARY_MAGIC};
pub use record::{AccelRecord, Acceleration, Quantity, Record, Strain, StrainRecord};

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid record: {0}")]
    Validation(String),
    #[error("cutoff {cutoff_hz} Hz must lie in (0, {nyquist_hz}) Hz")]
    InvalidCutoff { cutoff_hz: f64, nyquist_hz: f64 },
    #[error("record has {len} samples, at least {required} required")]
    RecordTooShort { len: usize, required: usize },
    #[error("invalid filter: {0}")]
    InvalidFilter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Remove the least-squares line from every channel.
///
/// The fit is repeated once on the residual, which removes the round-off
/// trend left by large offsets and makes the operation idempotent.
pub fn detrend<T: Real, Q: Quantity>(record: &Record<T, Q>) -> Record<T, Q> {
    let (m, n) = record.samples().shape();
    if n == 0 {
        return record.clone();
    }
    let centre = T::from_count(n - 1) * T::lit(0.5);
    let tt: T = (0..n)
        .map(|k| {
            let t = T::from_count(k) - centre;
            t * t
        })
        .fold(T::zero(), |a, b| a + b);
    let mut out = record.samples().clone();
    for c in 0..m {
        let mut row: Vec<T> = out.row(c).iter().copied().collect();
        for _ in 0..2 {
            let mean = row.iter().fold(T::zero(), |a, &b| a + b) / T::from_count(n);
            let slope = if tt > T::zero() {
                row.iter()
                    .enumerate()
                    .fold(T::zero(), |a, (k, &v)| a + (T::from_count(k) - centre) * (v - mean))
                    / tt
            } else {
                T::zero()
            };
            for (k, v) in row.iter_mut().enumerate() {
                *v = *v - mean - slope * (T::from_count(k) - centre);
            }
        }
        for (k, v) in row.into_iter().enumerate() {
            out[(c, k)] = v;
        }
    }
    record.with_samples(out)
}

/// Time derivative by central differences (one-sided at the ends).
pub fn differentiate<T: Real, Q: Quantity>(record: &Record<T, Q>) -> Record<T, Q> {
    let (m, n) = record.samples().shape();
    let fs = record.sampling_rate_hz();
    let x = record.samples();
    let out = DMatrix::from_fn(m, n, |c, k| {
        if n < 2 {
            T::zero()
        } else if k == 0 {
            (x[(c, 1)] - x[(c, 0)]) * fs
        } else if k == n - 1 {
            (x[(c, n - 1)] - x[(c, n - 2)]) * fs
        } else {
            (x[(c, k + 1)] - x[(c, k - 1)]) * fs * T::lit(0.5)
        }
    });
    record.with_samples(out)
}
