use nalgebra::{ComplexField, DMatrix, SVD};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{SsiError, StateSpaceRealization};
use crate::scalar::Real;

/// Identified mode: natural frequency, damping ratio and complex shape at the
/// sensor positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalEstimate<T> {
    pub frequency_hz: T,
    pub damping_ratio: T,
    pub shape: Vec<Complex<T>>,
    pub order_found: usize,
}

/// Inclusive model order range scanned in steps of two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderRange {
    pub min: usize,
    pub max: usize,
}

impl OrderRange {
    pub fn orders(&self) -> impl Iterator<Item = usize> {
        (self.min.max(1)..=self.max).step_by(2)
    }
}

/// Thresholds comparing a mode with its neighbour two orders lower.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityCriteria<T> {
    pub max_freq_rel: T,
    pub max_damping_abs: T,
    pub min_mac: T,
}

impl<T: Real> Default for StabilityCriteria<T> {
    fn default() -> Self {
        Self {
            max_freq_rel: T::lit(0.01),
            max_damping_abs: T::lit(0.05),
            min_mac: T::lit(0.98),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsiConfig<T> {
    pub block_rows: usize,
    pub order_range: OrderRange,
    pub freq_band_hz: (T, T),
    pub damping_bounds: (T, T),
    pub stability: StabilityCriteria<T>,
    /// Relative frequency gap that separates clusters during mode selection.
    pub cluster_linkage_rel: T,
    /// Clusters with fewer fully stable members are ignored.
    pub min_cluster_size: usize,
}

/// `ceil(1.5 · fs / f_min / m)` clamped to `[10, 60]`: the past window spans
/// the slowest expected period.
pub fn default_block_rows<T: Real>(sampling_rate_hz: T, channels: usize, f_min_hz: T) -> usize {
    let raw = T::lit(1.5) * sampling_rate_hz / f_min_hz / T::from_count(channels.max(1));
    raw.ceil().to_usize().unwrap_or(60).clamp(10, 60)
}

impl<T: Real> SsiConfig<T> {
    /// Defaults for a record: band from `f_min_hz` to Nyquist, damping in
    /// `[0, 0.2]`, orders 2..=40 capped by the realizable maximum.
    pub fn for_record(sampling_rate_hz: T, channels: usize, f_min_hz: T) -> Self {
        let block_rows = default_block_rows(sampling_rate_hz, channels, f_min_hz);
        let cap = block_rows * channels - channels;
        Self {
            block_rows,
            order_range: OrderRange {
                min: 2,
                max: 40.min(cap),
            },
            freq_band_hz: (f_min_hz, sampling_rate_hz * T::lit(0.5)),
            damping_bounds: (T::zero(), T::lit(0.2)),
            stability: StabilityCriteria::default(),
            cluster_linkage_rel: T::lit(0.01),
            min_cluster_size: 3,
        }
    }

    /// Check the Hankel width and order limits for a record of the given size.
    pub fn validate(&self, n_samples: usize, channels: usize) -> Result<(), SsiError> {
        super::hankel::hankel_columns(n_samples, channels, self.block_rows)?;
        if self.order_range.min == 0 || self.order_range.min > self.order_range.max {
            return Err(SsiError::InvalidConfig(format!(
                "invalid order range {}..={}",
                self.order_range.min, self.order_range.max
            )));
        }
        if self.order_range.max > self.block_rows * channels {
            return Err(SsiError::InvalidConfig(format!(
                "max order {} exceeds block rows × channels = {}",
                self.order_range.max,
                self.block_rows * channels
            )));
        }
        if !(self.freq_band_hz.0 < self.freq_band_hz.1) || !(self.damping_bounds.0 <= self.damping_bounds.1) {
            return Err(SsiError::InvalidConfig("empty frequency band or damping bounds".into()));
        }
        Ok(())
    }
}

/// Scale a complex shape so its largest-magnitude entry becomes exactly `1 + 0i`.
pub fn normalize_shape<T: Real>(shape: &mut [Complex<T>]) {
    let Some((k, _)) = shape
        .iter()
        .enumerate()
        .map(|(k, z)| (k, z.modulus()))
        .fold(None, |best: Option<(usize, T)>, (k, v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((k, v)),
        })
    else {
        return;
    };
    let pivot = shape[k];
    if pivot.modulus() == T::zero() {
        return;
    }
    for z in shape.iter_mut() {
        *z /= pivot;
    }
    shape[k] = Complex::new(T::one(), T::zero());
}

/// Eigenvectors for the given eigenvalues, as right singular vectors of
/// `A − λI`. Repeated eigenvalues draw distinct vectors from the same null space.
fn eigenvectors<T: Real>(a: &DMatrix<T>, eigenvalues: &[Complex<T>]) -> Result<DMatrix<Complex<T>>, SsiError> {
    let n = a.nrows();
    let ac: DMatrix<Complex<T>> = a.map(|v| Complex::new(v, T::zero()));
    let scale = eigenvalues.iter().map(|l| l.modulus()).fold(T::one(), |x, y| if y > x { y } else { x });
    let same = |x: &Complex<T>, y: &Complex<T>| (x - y).modulus() <= T::lit(1e-10) * scale;
    let mut psi = DMatrix::zeros(n, n);
    for (k, lambda) in eigenvalues.iter().enumerate() {
        let rank_in_cluster = eigenvalues[..k].iter().filter(|l| same(l, lambda)).count();
        let mut shifted = ac.clone();
        for d in 0..n {
            shifted[(d, d)] -= *lambda;
        }
        let svd = SVD::try_new(shifted, false, true, T::eps(), 0).ok_or(SsiError::SvdFailure)?;
        let v_t = svd.v_t.ok_or(SsiError::SvdFailure)?;
        // a further vector from the cluster only if the null space really is that wide
        let wide = n - 1 - rank_in_cluster.min(n - 1);
        let row = if svd.singular_values[wide] <= T::lit(1e-8) * scale {
            wide
        } else {
            n - 1
        };
        let v = v_t.row(row).adjoint();
        let norm = v.norm();
        psi.set_column(k, &(v / Complex::new(norm, T::zero())));
    }
    Ok(psi)
}

/// Modal parameters from the eigendecomposition of a realization.
///
/// Only eigenvalues with positive imaginary part are kept (one per conjugate
/// pair); each maps to the continuous pole `fs·ln(λ)`. Modes outside the
/// configured band or damping bounds are dropped; the rest are sorted by
/// frequency.
pub fn extract_modes<T: Real>(
    realization: &StateSpaceRealization<T>,
    config: &SsiConfig<T>,
) -> Result<Vec<ModalEstimate<T>>, SsiError> {
    let fs = realization.sampling_rate_hz;
    let eigenvalues = realization.eigenvalues()?;
    let psi = eigenvectors(&realization.a, &eigenvalues)?;

    let sv = psi.singular_values();
    let smin = sv.iter().copied().fold(T::max_value().unwrap_or(T::lit(f64::MAX)), |a, b| if b < a { b } else { a });
    let smax = sv.iter().copied().fold(T::zero(), |a, b| if b > a { b } else { a });
    let condition = if smin > T::zero() { smax / smin } else { T::lit(f64::INFINITY) };
    if !(condition <= T::lit(1e12)) {
        return Err(SsiError::DefectiveSystemMatrix {
            condition: condition.to_f64_lossy(),
        });
    }

    let c: DMatrix<Complex<T>> = realization.c.map(|v| Complex::new(v, T::zero()));
    let nyquist = fs * T::lit(0.5);
    let mut modes = Vec::new();
    for (k, lambda) in eigenvalues.iter().enumerate() {
        if !(lambda.im > T::zero()) || lambda.modulus() == T::zero() {
            continue;
        }
        let pole = ComplexField::ln(*lambda) * fs;
        let wn = pole.modulus();
        let frequency_hz = wn / T::two_pi();
        let damping_ratio = -pole.re / wn;
        if !(frequency_hz < nyquist)
            || frequency_hz < config.freq_band_hz.0
            || frequency_hz > config.freq_band_hz.1
            || damping_ratio < config.damping_bounds.0
            || damping_ratio > config.damping_bounds.1
        {
            continue;
        }
        let mut shape: Vec<Complex<T>> = (&c * psi.column(k)).iter().copied().collect();
        normalize_shape(&mut shape);
        modes.push(ModalEstimate {
            frequency_hz,
            damping_ratio,
            shape,
            order_found: realization.order,
        });
    }
    modes.sort_by(|a, b| {
        a.frequency_hz
            .partial_cmp(&b.frequency_hz)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rotation(f: f64, fs: f64, r: f64) -> DMatrix<f64> {
        let th = 2.0 * PI * f / fs;
        DMatrix::from_row_slice(2, 2, &[r * th.cos(), -r * th.sin(), r * th.sin(), r * th.cos()])
    }

    fn config() -> SsiConfig<f64> {
        SsiConfig {
            damping_bounds: (-0.5, 0.5),
            freq_band_hz: (0.0, 125.0),
            ..SsiConfig::for_record(250.0, 1, 1.0)
        }
    }

    #[test]
    fn undamped_rotation_gives_frequency() {
        let real = StateSpaceRealization {
            a: rotation(4.61, 250.0, 1.0),
            c: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            order: 2,
            sampling_rate_hz: 250.0,
        };
        let modes = extract_modes(&real, &config()).unwrap();
        assert_eq!(modes.len(), 1);
        assert!((modes[0].frequency_hz - 4.61).abs() < 1e-9);
        assert!(modes[0].damping_ratio.abs() < 1e-9);
        assert_eq!(modes[0].shape[0], Complex::new(1.0, 0.0));
    }

    #[test]
    fn overdamped_real_poles_give_nothing() {
        let real = StateSpaceRealization {
            a: DMatrix::from_row_slice(2, 2, &[0.9, 0.0, 0.0, 0.5]),
            c: DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            order: 2,
            sampling_rate_hz: 250.0,
        };
        assert!(extract_modes(&real, &config()).unwrap().is_empty());
    }

    #[test]
    fn two_pairs_sorted_ascending() {
        let mut a = DMatrix::zeros(4, 4);
        a.view_mut((0, 0), (2, 2)).copy_from(&rotation(6.32, 250.0, 0.999));
        a.view_mut((2, 2), (2, 2)).copy_from(&rotation(4.61, 250.0, 0.999));
        let real = StateSpaceRealization {
            a,
            c: DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.5, 0.2]),
            order: 4,
            sampling_rate_hz: 250.0,
        };
        let modes = extract_modes(&real, &config()).unwrap();
        assert_eq!(modes.len(), 2);
        let f0 = (2.0 * PI * 4.61 / 250.0f64).hypot(-(0.999f64).ln()) * 250.0 / (2.0 * PI);
        assert!((modes[0].frequency_hz - f0).abs() < 1e-9);
        assert!(modes[0].frequency_hz < modes[1].frequency_hz);
        for m in &modes {
            let peak = m.shape.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!((peak - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn jordan_block_is_defective() {
        let real = StateSpaceRealization {
            a: DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.5]),
            c: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            order: 2,
            sampling_rate_hz: 10.0,
        };
        assert!(matches!(
            extract_modes(&real, &config()),
            Err(SsiError::DefectiveSystemMatrix { .. })
        ));
    }

    #[test]
    fn repeated_but_diagonalizable_is_accepted() {
        let real = StateSpaceRealization {
            a: DMatrix::from_diagonal_element(2, 2, 0.5),
            c: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            order: 2,
            sampling_rate_hz: 10.0,
        };
        assert!(extract_modes(&real, &config()).unwrap().is_empty());
    }

    #[test]
    fn block_rows_rule() {
        assert_eq!(default_block_rows(250.0, 51, 1.0), 10);
        assert_eq!(default_block_rows(250.0, 4, 1.0), 60);
        assert_eq!(default_block_rows(250.0, 4, 4.0), 24);
    }
}
