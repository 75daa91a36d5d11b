use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Quantity, Record, SignalError};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    #[default]
    HighPass,
}

/// Butterworth filter design parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec<T> {
    pub cutoff_hz: T,
    pub order: usize,
    #[serde(default)]
    pub kind: FilterKind,
    pub zero_phase: bool,
}

impl<T: Real> Default for FilterSpec<T> {
    /// 4th-order zero-phase high-pass at 1 Hz.
    fn default() -> Self {
        Self {
            cutoff_hz: T::one(),
            order: 4,
            kind: FilterKind::HighPass,
            zero_phase: true,
        }
    }
}

/// Direct-form-II-transposed second order section (first order when `b2 = a2 = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad<T> {
    pub b: [T; 3],
    /// Denominator coefficients a1, a2 (a0 normalised to 1).
    pub a: [T; 2],
}

impl<T: Real> Biquad<T> {
    /// DC gain of the section.
    pub fn dc_gain(&self) -> T {
        (self.b[0] + self.b[1] + self.b[2]) / (T::one() + self.a[0] + self.a[1])
    }

    /// Filter in place, starting from the steady state for a constant input
    /// equal to `x[0]`.
    fn run(&self, x: &mut [T]) {
        let Some(&x0) = x.first() else { return };
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        let y0 = self.dc_gain() * x0;
        let mut z2 = b2 * x0 - a2 * y0;
        let mut z1 = y0 - b0 * x0;
        for v in x.iter_mut() {
            let xin = *v;
            let y = b0 * xin + z1;
            z1 = b1 * xin - a1 * y + z2;
            z2 = b2 * xin - a2 * y;
            *v = y;
        }
    }

    /// Complex frequency response at `f_hz`.
    pub fn response(&self, f_hz: T, fs_hz: T) -> num_complex::Complex<T> {
        let w = T::two_pi() * f_hz / fs_hz;
        let z1 = num_complex::Complex::new(w.cos(), -w.sin());
        let z2 = z1 * z1;
        let num = z1 * self.b[1] + z2 * self.b[2] + self.b[0];
        let den = z1 * self.a[0] + z2 * self.a[1] + T::one();
        num / den
    }
}

/// Bilinear-transform (pre-warped) Butterworth high-pass as cascaded sections.
pub fn butterworth_highpass<T: Real>(order: usize, cutoff_hz: T, fs_hz: T) -> Vec<Biquad<T>> {
    let k = (T::pi() * cutoff_hz / fs_hz).tan();
    let k2 = k * k;
    let two = T::lit(2.0);
    let mut sections = Vec::with_capacity(order.div_ceil(2));
    for s in 0..order / 2 {
        let theta = T::pi() * T::from_count(2 * s + 1) / (two * T::from_count(order));
        let q = T::one() / (two * theta.sin());
        let norm = T::one() + k / q + k2;
        let b0 = T::one() / norm;
        sections.push(Biquad {
            b: [b0, -two * b0, b0],
            a: [two * (k2 - T::one()) / norm, (T::one() - k / q + k2) / norm],
        });
    }
    if order % 2 == 1 {
        let norm = T::one() + k;
        sections.push(Biquad {
            b: [T::one() / norm, -T::one() / norm, T::zero()],
            a: [(k - T::one()) / norm, T::zero()],
        });
    }
    sections
}

fn cascade<T: Real>(sections: &[Biquad<T>], x: &mut [T]) {
    for s in sections {
        s.run(x);
    }
}

/// Forward-backward pass on an odd-reflection padded copy of `x`.
fn forward_backward<T: Real>(sections: &[Biquad<T>], x: &[T], pad: usize) -> Vec<T> {
    let n = x.len();
    let two = T::lit(2.0);
    let mut buf = Vec::with_capacity(n + 2 * pad);
    buf.extend((1..=pad).rev().map(|k| two * x[0] - x[k]));
    buf.extend_from_slice(x);
    buf.extend((1..=pad).map(|k| two * x[n - 1] - x[n - 1 - k]));
    cascade(sections, &mut buf);
    buf.reverse();
    cascade(sections, &mut buf);
    buf.reverse();
    buf[pad..pad + n].to_vec()
}

fn zero_phase_channel<T: Real>(sections: &[Biquad<T>], x: &[T], pad: usize) -> Vec<T> {
    let forward = forward_backward(sections, x, pad);
    let reversed: Vec<T> = x.iter().rev().copied().collect();
    let backward = forward_backward(sections, &reversed, pad);
    // symmetrised so that reversing the input exactly reverses the output
    forward
        .iter()
        .zip(backward.iter().rev())
        .map(|(&a, &b)| (a + b) * T::lit(0.5))
        .collect()
}

/// Apply a Butterworth high-pass to every channel independently.
///
/// With `zero_phase` the cascade runs forward and backward over a copy padded
/// by odd reflection of `3 * order` samples at each end.
pub fn high_pass<T: Real, Q: Quantity>(
    record: &Record<T, Q>,
    spec: &FilterSpec<T>,
) -> Result<Record<T, Q>, SignalError> {
    let fs = record.sampling_rate_hz();
    let nyquist = fs * T::lit(0.5);
    if spec.order == 0 {
        return Err(SignalError::InvalidFilter("order must be positive".into()));
    }
    if !(spec.cutoff_hz > T::zero() && spec.cutoff_hz < nyquist) {
        return Err(SignalError::InvalidCutoff {
            cutoff_hz: spec.cutoff_hz.to_f64_lossy(),
            nyquist_hz: nyquist.to_f64_lossy(),
        });
    }
    let n = record.n_samples();
    let pad = 3 * spec.order;
    if n < pad.max(2) {
        return Err(SignalError::RecordTooShort { len: n, required: pad.max(2) });
    }
    let pad = pad.min(n - 1);
    let sections = butterworth_highpass(spec.order, spec.cutoff_hz, fs);

    let filtered: Vec<Vec<T>> = (0..record.n_channels())
        .into_par_iter()
        .map(|c| {
            let x = record.channel(c);
            if spec.zero_phase {
                zero_phase_channel(&sections, &x, pad)
            } else {
                let mut y = x;
                cascade(&sections, &mut y);
                y
            }
        })
        .collect();
    let samples = DMatrix::from_fn(record.n_channels(), n, |c, t| filtered[c][t]);
    Ok(record.with_samples(samples))
}
