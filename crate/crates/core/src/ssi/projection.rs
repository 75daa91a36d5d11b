use nalgebra::{DMatrix, SymmetricEigen};

use super::hankel::hankel_gram;
use super::SsiError;
use crate::scalar::Real;
use crate::signal::{Quantity, Record};

/// Orthogonal projection of the future Hankel rows onto the past row space.
///
/// Stored in factored form `P = F·Q`, where `Q` (`r × j`) has orthonormal rows
/// spanning the numerically non-null part of the past row space and
/// `F` (`i·m × r`) holds the future rows' coordinates in that basis. `P·Pᵀ =
/// F·Fᵀ`, so the column space and singular values of `P` are those of `F` and
/// realization never needs the `j`-wide matrix.
#[derive(Debug, Clone)]
pub struct Projection<T: Real> {
    block_rows: usize,
    channels: usize,
    factor: DMatrix<T>,
    past_basis: Option<DMatrix<T>>,
}

impl<T: Real> Projection<T> {
    /// Build directly from a record through its Hankel Gram matrix.
    pub fn from_record<Q: Quantity>(record: &Record<T, Q>, block_rows: usize) -> Result<Self, SsiError> {
        let gram = hankel_gram(record, block_rows)?;
        let (factor, _) = factor_from_gram(&gram, block_rows * record.n_channels())?;
        Ok(Self {
            block_rows,
            channels: record.n_channels(),
            factor,
            past_basis: None,
        })
    }

    pub fn block_rows(&self) -> usize {
        self.block_rows
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `F`, the `i·m × r` factor carrying the projection's column space.
    pub fn factor(&self) -> &DMatrix<T> {
        &self.factor
    }

    /// Numerical rank of the past row space.
    pub fn past_rank(&self) -> usize {
        self.factor.ncols()
    }

    /// Explicit `i·m × j` projection, available when built from an explicit Hankel.
    pub fn matrix(&self) -> Option<DMatrix<T>> {
        self.past_basis.as_ref().map(|q| &self.factor * q)
    }

    /// Orthonormal basis of the past row space (rows), when available.
    pub fn past_basis(&self) -> Option<&DMatrix<T>> {
        self.past_basis.as_ref()
    }

    /// Uniformly rescale the projection.
    pub fn scaled(&self, s: T) -> Self {
        Self {
            factor: &self.factor * s,
            past_basis: self.past_basis.clone(),
            ..*self
        }
    }
}

/// Returns `(F, W)` with `F = G_fp·V·Λ^{-1/2}` and `W = V·Λ^{-1/2}` over the
/// retained eigenpairs of the past Gram block `G_pp = V·Λ·Vᵀ`.
fn factor_from_gram<T: Real>(gram: &DMatrix<T>, past_rows: usize) -> Result<(DMatrix<T>, DMatrix<T>), SsiError> {
    let dim = gram.nrows();
    let gpp = gram.view((0, 0), (past_rows, past_rows)).into_owned();
    let gfp = gram.view((past_rows, 0), (dim - past_rows, past_rows));

    let eig = SymmetricEigen::try_new(gpp, T::eps(), 0).ok_or(SsiError::SvdFailure)?;
    let lmax = eig
        .eigenvalues
        .iter()
        .fold(T::zero(), |a, &b| if b > a { b } else { a });
    if !(lmax > T::zero()) {
        return Err(SsiError::RankDeficientPast);
    }
    let tol = lmax * T::eps() * T::from_count(dim) * T::lit(10.0);
    let mut keep: Vec<usize> = (0..past_rows).filter(|&k| eig.eigenvalues[k] > tol).collect();
    // descending eigenvalue order keeps the factor deterministic
    keep.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    if keep.is_empty() {
        return Err(SsiError::RankDeficientPast);
    }
    let whiten = DMatrix::from_fn(past_rows, keep.len(), |row, k| {
        eig.eigenvectors[(row, keep[k])] / eig.eigenvalues[keep[k]].sqrt()
    });
    Ok((gfp * &whiten, whiten))
}

/// Project the future block rows of `hankel` onto its past block rows.
///
/// `hankel` has `2·i·m` rows (past on top). The result keeps the explicit
/// projection available through [`Projection::matrix`].
pub fn project_future_onto_past<T: Real>(
    hankel: &DMatrix<T>,
    block_rows: usize,
    channels: usize,
) -> Result<Projection<T>, SsiError> {
    let past_rows = block_rows * channels;
    if block_rows == 0 || channels == 0 || hankel.nrows() != 2 * past_rows {
        return Err(SsiError::InvalidConfig(format!(
            "hankel has {} rows, expected 2·{block_rows}·{channels}",
            hankel.nrows()
        )));
    }
    let gram = hankel * hankel.transpose();
    let (factor, whiten) = factor_from_gram(&gram, past_rows)?;
    let past = hankel.rows(0, past_rows);
    let basis = whiten.transpose() * past;
    Ok(Projection {
        block_rows,
        channels,
        factor,
        past_basis: Some(basis),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::StrainRecord;
    use crate::ssi::build_block_hankel;
    use rand::{Rng, SeedableRng};

    fn random_matrix(r: usize, c: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(r, c, |_, _| rng.random::<f64>() - 0.5)
    }

    /// Brute-force `Yf·Ypᵀ·(Yp·Ypᵀ)†·Yp`.
    fn brute_force(h: &DMatrix<f64>, past_rows: usize) -> DMatrix<f64> {
        let yp = h.rows(0, past_rows).into_owned();
        let yf = h.rows(past_rows, h.nrows() - past_rows).into_owned();
        let gpp = &yp * yp.transpose();
        let pinv = gpp.pseudo_inverse(1e-13).unwrap();
        &yf * yp.transpose() * pinv * yp
    }

    #[test]
    fn random_hankel_matches_pseudoinverse_formula() {
        for seed in 0..4 {
            let h = random_matrix(12, 80, seed);
            let p = project_future_onto_past(&h, 3, 2).unwrap().matrix().unwrap();
            let oracle = brute_force(&h, 6);
            assert!((&p - &oracle).norm() < 1e-8, "seed {seed}");
        }
    }

    #[test]
    fn identical_future_is_reproduced() {
        let past = random_matrix(4, 50, 11);
        let mut h = DMatrix::zeros(8, 50);
        h.rows_mut(0, 4).copy_from(&past);
        h.rows_mut(4, 4).copy_from(&past);
        let p = project_future_onto_past(&h, 2, 2).unwrap().matrix().unwrap();
        assert!((&p - &past).norm() < 1e-10);
    }

    #[test]
    fn orthogonal_future_projects_to_zero() {
        let q = random_matrix(60, 8, 5).qr().q();
        let h = q.transpose();
        let p = project_future_onto_past(&h, 2, 2).unwrap().matrix().unwrap();
        assert!(p.norm() <= 1e-10);
    }

    #[test]
    fn projection_is_idempotent() {
        let h = random_matrix(12, 90, 21);
        let proj = project_future_onto_past(&h, 2, 3).unwrap();
        let p = proj.matrix().unwrap();
        let q = proj.past_basis().unwrap();
        let again = &p * q.transpose() * q;
        assert!((&again - &p).norm() < 1e-10);
    }

    #[test]
    fn zero_past_is_rank_deficient() {
        let mut h = random_matrix(4, 20, 2);
        h.rows_mut(0, 2).fill(0.0);
        assert!(matches!(
            project_future_onto_past(&h, 1, 2),
            Err(SsiError::RankDeficientPast)
        ));
    }

    #[test]
    fn record_route_matches_explicit_route() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let ch: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..300).map(|_| rng.random::<f64>()).collect())
            .collect();
        let r = StrainRecord::from_channels(&ch, 10.0, vec![0.0, 1.0]).unwrap();
        let explicit = project_future_onto_past(&build_block_hankel(&r, 4).unwrap(), 4, 2).unwrap();
        let implicit = Projection::from_record(&r, 4).unwrap();
        let ff_e = explicit.factor() * explicit.factor().transpose();
        let ff_i = implicit.factor() * implicit.factor().transpose();
        assert!((&ff_e - &ff_i).norm() < 1e-10 * ff_e.norm());
    }
}
