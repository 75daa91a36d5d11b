use nalgebra::{DMatrix, SVD};
use rayon::prelude::*;

use super::shape::basis;
use super::{BeamError, SpanLayout};
use crate::scalar::{golden_section, Real};

/// Grid intervals used when scanning σ_min over a β range.
const SCAN_STEPS: usize = 2000;

/// Boundary-condition matrix `B` (4K × 4K) acting on the stacked constants
/// `[C1..C4 of span 0, C1..C4 of span 1, ...]`.
///
/// Rows: zero displacement at both ends of each span (`2K`), rotation
/// continuity at interior supports (`K-1`), moment continuity at interior
/// supports (`K-1`), zero moment at the two exterior ends (`2`). Rotation and
/// moment rows are divided by `β` and `β²` of the left span so all rows are
/// dimensionless.
///
/// # Panics
/// If `betas.len()` differs from the number of spans.
pub fn assemble_bc_matrix<T: Real>(layout: &SpanLayout<T>, betas: &[T]) -> DMatrix<T> {
    let k_spans = layout.n_spans();
    assert_eq!(betas.len(), k_spans, "one β per span");
    let lengths = layout.span_lengths_m();
    let n = 4 * k_spans;
    let mut b = DMatrix::zeros(n, n);

    for k in 0..k_spans {
        let [s, co, sh, ch] = basis(betas[k], lengths[k]);
        let col = 4 * k;
        // w_k(0) = C2 + C4
        b[(2 * k, col + 1)] = T::one();
        b[(2 * k, col + 3)] = T::one();
        // w_k(l_k)
        for (j, v) in [s, co, sh, ch].into_iter().enumerate() {
            b[(2 * k + 1, col + j)] = v;
        }
    }

    let rot0 = 2 * k_spans;
    let mom0 = 3 * k_spans - 1;
    for k in 0..k_spans.saturating_sub(1) {
        let [s, co, sh, ch] = basis(betas[k], lengths[k]);
        let ratio = betas[k + 1] / betas[k];
        let col = 4 * k;
        let next = col + 4;
        for (j, v) in [co, -s, ch, sh].into_iter().enumerate() {
            b[(rot0 + k, col + j)] = v;
        }
        b[(rot0 + k, next)] = -ratio;
        b[(rot0 + k, next + 2)] = -ratio;

        for (j, v) in [-s, -co, sh, ch].into_iter().enumerate() {
            b[(mom0 + k, col + j)] = v;
        }
        b[(mom0 + k, next + 1)] = ratio * ratio;
        b[(mom0 + k, next + 3)] = -ratio * ratio;
    }

    let left = 4 * k_spans - 2;
    b[(left, 1)] = -T::one();
    b[(left, 3)] = T::one();
    let last = k_spans - 1;
    let [s, co, sh, ch] = basis(betas[last], lengths[last]);
    for (j, v) in [-s, -co, sh, ch].into_iter().enumerate() {
        b[(left + 1, 4 * last + j)] = v;
    }
    b
}

fn smallest_pair<T: Real>(b: DMatrix<T>) -> (T, Vec<T>) {
    let svd = SVD::new(b, false, true);
    let (idx, &smin) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
        .expect("non-empty matrix");
    let v_t = svd.v_t.expect("right singular vectors requested");
    (smin, v_t.row(idx).iter().copied().collect())
}

/// Smallest singular value of `B(β)` with β shared by all spans.
pub fn sigma_min<T: Real>(layout: &SpanLayout<T>, beta: T) -> T {
    let b = assemble_bc_matrix(layout, &vec![beta; layout.n_spans()]);
    let svd = SVD::new(b, false, false);
    svd.singular_values.min()
}

/// Unit-norm right singular vector of `B(β)` for its smallest singular
/// value, split per span, together with that singular value.
pub fn null_space_constants<T: Real>(layout: &SpanLayout<T>, beta: T) -> (T, Vec<[T; 4]>) {
    let b = assemble_bc_matrix(layout, &vec![beta; layout.n_spans()]);
    let (s, v) = smallest_pair(b);
    let constants = v.chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]]).collect();
    (s, constants)
}

/// Acceptance threshold on σ_min at a refined root. Relative to the largest
/// entry of `B` once hyperbolic terms grow past one, and never below what the
/// scalar type can resolve.
fn root_threshold<T: Real>(layout: &SpanLayout<T>, beta: T) -> T {
    let b = assemble_bc_matrix(layout, &vec![beta; layout.n_spans()]);
    let scale = b.amax().max(T::one());
    T::lit(1e-9).max(T::lit(100.0) * T::eps()) * scale
}

/// Every characteristic root in `[min, max]`, ascending.
pub(crate) fn roots_in<T: Real>(layout: &SpanLayout<T>, min: T, max: T) -> Result<Vec<T>, BeamError> {
    if !(min > T::zero()) || !(max > min) || !max.is_finite_value() {
        return Err(BeamError::InvalidBetaRange {
            min: min.to_f64_lossy(),
            max: max.to_f64_lossy(),
        });
    }
    let step = (max - min) / T::from_count(SCAN_STEPS);
    let grid: Vec<T> = (0..=SCAN_STEPS).map(|p| min + step * T::from_count(p)).collect();
    let sig: Vec<T> = grid.par_iter().map(|&b| sigma_min(layout, b)).collect();

    let mut roots: Vec<T> = Vec::new();
    for p in 1..SCAN_STEPS {
        if !(sig[p] <= sig[p - 1] && sig[p] < sig[p + 1]) {
            continue;
        }
        let tol = T::lit(4.0) * T::eps() * grid[p + 1];
        let (beta, s) = golden_section(|b| sigma_min(layout, b), grid[p - 1], grid[p + 1], tol, 300);
        if s < root_threshold(layout, beta) {
            let distinct = roots
                .last()
                .is_none_or(|&r| beta - r > T::lit(1e-12) * beta);
            if distinct {
                roots.push(beta);
            }
        }
    }
    Ok(roots)
}

/// First `n_roots` characteristic roots (β where `B(β)` is singular) in
/// `beta_range`, ascending.
///
/// σ_min(B) is scanned on a 2000-interval grid; each interior local minimum is
/// refined by golden-section search and kept when σ_min falls below 1e-9
/// (relative to the largest matrix entry when that exceeds one).
pub fn find_characteristic_roots<T: Real>(
    layout: &SpanLayout<T>,
    beta_range: (T, T),
    n_roots: usize,
) -> Result<Vec<T>, BeamError> {
    let mut roots = roots_in(layout, beta_range.0, beta_range.1)?;
    if roots.len() < n_roots {
        return Err(BeamError::RootsNotFound {
            found: roots.len(),
            requested: n_roots,
        });
    }
    roots.truncate(n_roots);
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn layout(spans: Vec<f64>) -> SpanLayout<f64> {
        SpanLayout::simply_supported(spans, 0.5).unwrap()
    }

    #[test]
    fn single_span_root_and_non_root() {
        let l = layout(vec![10.0]);
        let b = assemble_bc_matrix(&l, &[PI / 10.0]);
        assert_eq!(b.shape(), (4, 4));
        assert!(sigma_min(&l, PI / 10.0) < 1e-10);
        assert!(sigma_min(&l, 0.5 * PI / 10.0) > 1e-3);
    }

    #[test]
    fn three_span_structure() {
        let l = layout(vec![12.0, 12.0, 12.0]);
        let b = assemble_bc_matrix(&l, &[0.2; 3]);
        assert_eq!(b.shape(), (12, 12));
        // every row couples at most two neighbouring spans
        for r in 0..12 {
            let cols: Vec<usize> = (0..12).filter(|&c| b[(r, c)] != 0.0).collect();
            assert!(!cols.is_empty());
            assert!(cols.last().unwrap() - cols[0] < 8, "row {r} spans {cols:?}");
        }
        // displacement rows touch a single span
        for r in 0..6 {
            let spans: std::collections::BTreeSet<usize> = (0..12).filter(|&c| b[(r, c)] != 0.0).map(|c| c / 4).collect();
            assert_eq!(spans.len(), 1);
        }
    }

    #[test]
    fn two_span_antisymmetric_solution_is_in_null_space() {
        let len = 8.0;
        let l = layout(vec![len, len]);
        let beta = PI / len;
        let b = assemble_bc_matrix(&l, &[beta, beta]);
        let c = nalgebra::DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0]);
        assert!((b * c).norm() < 1e-14);
        let roots = find_characteristic_roots(&l, (0.5 * PI / len, 1.2 * PI / len), 1).unwrap();
        assert!((roots[0] - beta).abs() < 1e-8);
    }

    #[test]
    fn single_span_roots() {
        let l = layout(vec![10.0]);
        let roots = find_characteristic_roots(&l, (0.1, 5.5 * PI / 10.0), 5).unwrap();
        for (i, r) in roots.iter().enumerate() {
            assert!((r - (i + 1) as f64 * PI / 10.0).abs() < 1e-8, "root {i}: {r}");
        }
    }

    #[test]
    fn three_span_roots_are_increasing_and_singular() {
        let l = layout(vec![16.0, 18.0, 16.0]);
        let roots = find_characteristic_roots(&l, (0.05, 0.4), 3).unwrap();
        assert!(roots.windows(2).all(|w| w[1] > w[0]));
        for r in &roots {
            assert!(sigma_min(&l, *r) < 1e-9);
        }
        let (s, c) = null_space_constants(&l, roots[0]);
        assert!(s < 1e-9);
        assert_eq!(c.len(), 3);
    }

    #[test]
    fn missing_roots_and_bad_range() {
        let l = layout(vec![10.0]);
        assert!(matches!(
            find_characteristic_roots(&l, (0.1, 0.5), 3),
            Err(BeamError::RootsNotFound { found: 1, requested: 3 })
        ));
        assert!(matches!(
            find_characteristic_roots(&l, (0.5, 0.1), 1),
            Err(BeamError::InvalidBetaRange { .. })
        ));
    }
}
