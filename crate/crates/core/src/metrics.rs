//! Comparison of modal sets: MAC, one-to-one mode pairing, frequency MAD and
//! relative improvement.

use std::fmt::Write as _;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;
use crate::ssi::ModalEstimate;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("mode shape is identically zero")]
    ZeroVector,
    #[error("shape lengths differ ({0} vs {1}) or are shorter than 2")]
    LengthMismatch(usize, usize),
    #[error("baseline value must be positive")]
    DivideByZeroBaseline,
}

/// Modal assurance criterion `|aᴴb|² / ((aᴴa)(bᴴb))`.
pub fn mac<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Result<T, MetricsError> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(MetricsError::LengthMismatch(a.len(), b.len()));
    }
    let mut cross = Complex::new(T::zero(), T::zero());
    let mut aa = T::zero();
    let mut bb = T::zero();
    for (x, y) in a.iter().zip(b) {
        cross += x.conj() * y;
        aa += x.norm_sqr();
        bb += y.norm_sqr();
    }
    if aa == T::zero() || bb == T::zero() {
        return Err(MetricsError::ZeroVector);
    }
    let v = cross.norm_sqr() / (aa * bb);
    Ok(if v > T::one() { T::one() } else { v })
}

/// [`mac`] for real shapes.
pub fn mac_real<T: Real>(a: &[T], b: &[T]) -> Result<T, MetricsError> {
    let lift = |v: &[T]| v.iter().map(|&x| Complex::new(x, T::zero())).collect::<Vec<_>>();
    mac(&lift(a), &lift(b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModePair<T> {
    pub index_a: usize,
    pub index_b: usize,
    pub mac: T,
    pub freq_a_hz: T,
    pub freq_b_hz: T,
    pub abs_freq_diff_hz: T,
}

/// One-to-one pairing of two modal sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalComparison<T> {
    /// Sorted by `freq_a_hz`.
    pub pairs: Vec<ModePair<T>>,
    pub unmatched_a: Vec<usize>,
    pub unmatched_b: Vec<usize>,
    pub mean_mac: T,
    pub mad_hz: T,
}

/// Greedy pairing by descending MAC, ties broken by the smaller frequency
/// difference. Shapes of every mode must have the same length.
pub fn pair_modes<T: Real>(
    set_a: &[ModalEstimate<T>],
    set_b: &[ModalEstimate<T>],
) -> Result<ModalComparison<T>, MetricsError> {
    let mut candidates = Vec::with_capacity(set_a.len() * set_b.len());
    for (ia, a) in set_a.iter().enumerate() {
        for (ib, b) in set_b.iter().enumerate() {
            let m = mac(&a.shape, &b.shape)?;
            candidates.push((ia, ib, m, (a.frequency_hz - b.frequency_hz).abs()));
        }
    }
    // ordering depends only on values so that permuted inputs pair identically
    candidates.sort_by(|x, y| {
        y.2.partial_cmp(&x.2)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.3.partial_cmp(&y.3).unwrap_or(std::cmp::Ordering::Equal))
            .then(
                set_a[x.0]
                    .frequency_hz
                    .partial_cmp(&set_a[y.0].frequency_hz)
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
    });
    let mut used_a = vec![false; set_a.len()];
    let mut used_b = vec![false; set_b.len()];
    let mut pairs = Vec::new();
    for (ia, ib, m, df) in candidates {
        if used_a[ia] || used_b[ib] {
            continue;
        }
        used_a[ia] = true;
        used_b[ib] = true;
        pairs.push(ModePair {
            index_a: ia,
            index_b: ib,
            mac: m,
            freq_a_hz: set_a[ia].frequency_hz,
            freq_b_hz: set_b[ib].frequency_hz,
            abs_freq_diff_hz: df,
        });
    }
    pairs.sort_by(|x, y| x.freq_a_hz.partial_cmp(&y.freq_a_hz).unwrap_or(std::cmp::Ordering::Equal));
    let n = T::from_count(pairs.len().max(1));
    let mean_mac = pairs.iter().fold(T::zero(), |s, p| s + p.mac) / n;
    let mad_hz = pairs.iter().fold(T::zero(), |s, p| s + p.abs_freq_diff_hz) / n;
    Ok(ModalComparison {
        pairs,
        unmatched_a: (0..set_a.len()).filter(|&k| !used_a[k]).collect(),
        unmatched_b: (0..set_b.len()).filter(|&k| !used_b[k]).collect(),
        mean_mac,
        mad_hz,
    })
}

/// Relative improvement in percent, `(ours − baseline) / baseline × 100`.
pub fn improvement<T: Real>(ours: T, baseline: T) -> Result<T, MetricsError> {
    if !(baseline > T::zero()) {
        return Err(MetricsError::DivideByZeroBaseline);
    }
    Ok((ours - baseline) / baseline * T::lit(100.0))
}

impl<T: Real> ModalComparison<T> {
    /// Plain-text table: mode number, frequency of each set, absolute
    /// difference and MAC, followed by the means.
    pub fn to_table(&self, label_a: &str, label_b: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<7} {:>16} {:>16} {:>10} {:>8}",
            "Mode #",
            format!("Freq-{label_a} (Hz)"),
            format!("Freq-{label_b} (Hz)"),
            "Diff (Hz)",
            "MAC"
        );
        for (k, p) in self.pairs.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:<7} {:>16.3} {:>16.3} {:>10.3} {:>8.4}",
                k + 1,
                p.freq_a_hz.to_f64_lossy(),
                p.freq_b_hz.to_f64_lossy(),
                p.abs_freq_diff_hz.to_f64_lossy(),
                p.mac.to_f64_lossy()
            );
        }
        let _ = writeln!(
            out,
            "{:<7} {:>16} {:>16} {:>10.3} {:>8.4}",
            "Mean",
            "",
            "",
            self.mad_hz.to_f64_lossy(),
            self.mean_mac.to_f64_lossy()
        );
        out
    }
}
