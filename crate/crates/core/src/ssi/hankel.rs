use nalgebra::DMatrix;
use rayon::prelude::*;

use super::SsiError;
use crate::scalar::Real;
use crate::signal::{Quantity, Record};

/// Number of Hankel columns `j = T - 2i + 1`, after checking the record is
/// long enough for a wide Hankel (`2·i·m ≤ j`).
pub fn hankel_columns(n_samples: usize, channels: usize, block_rows: usize) -> Result<usize, SsiError> {
    if block_rows == 0 {
        return Err(SsiError::InvalidConfig("block rows must be positive".into()));
    }
    let rows = 2 * block_rows * channels;
    let required = (2 * block_rows + rows).saturating_sub(1).max(2 * block_rows + 1);
    if n_samples < required {
        return Err(SsiError::RecordTooShort {
            len: n_samples,
            required,
        });
    }
    Ok(n_samples + 1 - 2 * block_rows)
}

/// Block Hankel matrix of outputs, `2·i·m × j`, scaled by `1/√j`.
///
/// Row block `r` at column `c` holds `y(r + c)`; the first `i` blocks are the
/// past, the last `i` the future.
pub fn build_block_hankel<T: Real, Q: Quantity>(
    record: &Record<T, Q>,
    block_rows: usize,
) -> Result<DMatrix<T>, SsiError> {
    let (m, n) = record.samples().shape();
    let j = hankel_columns(n, m, block_rows)?;
    let scale = T::one() / T::from_count(j).sqrt();
    let y = record.samples();
    Ok(DMatrix::from_fn(2 * block_rows * m, j, |row, c| {
        y[(row % m, row / m + c)] * scale
    }))
}

/// `H·Hᵀ` for the block Hankel of `record`, without forming `H`.
///
/// Only the `2i` lag products against the first block row are computed
/// directly; the remaining blocks follow from sliding the summation window,
/// `G(r,s) = G(r-1,s-1) - y(r-1)y(s-1)ᵀ + y(r-1+j)y(s-1+j)ᵀ`.
pub fn hankel_gram<T: Real, Q: Quantity>(
    record: &Record<T, Q>,
    block_rows: usize,
) -> Result<DMatrix<T>, SsiError> {
    let (m, n) = record.samples().shape();
    let j = hankel_columns(n, m, block_rows)?;
    let nb = 2 * block_rows;
    let y = record.samples();

    let first: Vec<DMatrix<T>> = (0..nb)
        .into_par_iter()
        .map(|s| y.columns(0, j) * y.columns(s, j).transpose())
        .collect();

    // blocks[r][s - r] for s >= r
    let mut blocks: Vec<Vec<DMatrix<T>>> = Vec::with_capacity(nb);
    blocks.push(first);
    for r in 1..nb {
        let prev = &blocks[r - 1];
        let row: Vec<DMatrix<T>> = (r..nb)
            .map(|s| {
                let mut g = prev[s - r].clone();
                g -= y.column(r - 1) * y.column(s - 1).transpose();
                g += y.column(r - 1 + j) * y.column(s - 1 + j).transpose();
                g
            })
            .collect();
        blocks.push(row);
    }

    let inv_j = T::one() / T::from_count(j);
    let mut gram = DMatrix::zeros(nb * m, nb * m);
    for r in 0..nb {
        for s in r..nb {
            let g = &blocks[r][s - r] * inv_j;
            gram.view_mut((r * m, s * m), (m, m)).copy_from(&g);
            if s != r {
                gram.view_mut((s * m, r * m), (m, m)).copy_from(&g.transpose());
            }
        }
    }
    Ok(gram)
}
