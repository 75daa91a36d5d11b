use nalgebra::{ComplexField, DMatrix, DVector, SVD};
use num_complex::Complex;

use super::{Projection, SsiError};
use crate::scalar::Real;

/// Discrete-time state-space model `x[k+1] = A·x[k]`, `y[k] = C·x[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceRealization<T: Real> {
    pub a: DMatrix<T>,
    pub c: DMatrix<T>,
    pub order: usize,
    pub sampling_rate_hz: T,
}

/// Warnings attached to a realization; none of them is fatal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RealizationDiagnostics {
    /// Physical modes come in conjugate pairs, so an odd order leaves one real pole.
    pub odd_order: bool,
    /// At least one eigenvalue lies outside the unit circle.
    pub unstable: bool,
}

impl<T: Real> StateSpaceRealization<T> {
    pub fn eigenvalues(&self) -> Result<Vec<Complex<T>>, SsiError> {
        let schur = nalgebra::Schur::try_new(self.a.clone(), T::eps(), 0).ok_or(SsiError::SvdFailure)?;
        Ok(schur.complex_eigenvalues().iter().copied().collect())
    }

    pub fn spectral_radius(&self) -> Result<T, SsiError> {
        Ok(self
            .eigenvalues()?
            .iter()
            .map(|l| l.modulus())
            .fold(T::zero(), |a, b| if b > a { b } else { a }))
    }

    pub fn diagnostics(&self) -> Result<RealizationDiagnostics, SsiError> {
        Ok(RealizationDiagnostics {
            odd_order: self.order % 2 == 1,
            unstable: self.spectral_radius()? > T::one(),
        })
    }
}

/// Left singular vectors and singular values of a projection, computed once
/// and reused across model orders.
#[derive(Debug, Clone)]
pub struct ProjectionSvd<T: Real> {
    u: DMatrix<T>,
    singular_values: DVector<T>,
    block_rows: usize,
    channels: usize,
}

impl<T: Real> ProjectionSvd<T> {
    pub fn new(projection: &Projection<T>) -> Result<Self, SsiError> {
        let svd = SVD::try_new(projection.factor().clone(), true, false, T::eps(), 0)
            .ok_or(SsiError::SvdFailure)?;
        Ok(Self {
            u: svd.u.ok_or(SsiError::SvdFailure)?,
            singular_values: svd.singular_values,
            block_rows: projection.block_rows(),
            channels: projection.channels(),
        })
    }

    pub fn singular_values(&self) -> &DVector<T> {
        &self.singular_values
    }

    /// Count of singular values above `1e-10` of the largest.
    pub fn rank(&self) -> usize {
        let smax = self.singular_values.iter().copied().fold(T::zero(), |a, b| if b > a { b } else { a });
        let tol = smax * T::lit(1e-10);
        self.singular_values.iter().filter(|&&s| s > tol && s > T::zero()).count()
    }

    /// Highest order admissible for realization.
    pub fn max_order(&self) -> usize {
        let shift_limit = (self.block_rows * self.channels).saturating_sub(self.channels);
        shift_limit.min(self.rank())
    }

    /// Realize `(A, C)` of order `order` by shift invariance of the extended
    /// observability matrix `Γ = U₁·S₁^{1/2}`.
    pub fn realize(&self, order: usize, sampling_rate_hz: T) -> Result<StateSpaceRealization<T>, SsiError> {
        let max = self.max_order();
        if order == 0 || order > max {
            return Err(SsiError::OrderTooHigh { order, max });
        }
        let m = self.channels;
        let rows = self.block_rows * m;
        let mut gamma = self.u.columns(0, order).into_owned();
        for (k, mut col) in gamma.column_iter_mut().enumerate() {
            col *= self.singular_values[k].sqrt();
        }
        let c = gamma.rows(0, m).into_owned();
        let upper = gamma.rows(0, rows - m).into_owned();
        let lower = gamma.rows(m, rows - m).into_owned();
        let svd = SVD::try_new(upper, true, true, T::eps(), 0).ok_or(SsiError::SvdFailure)?;
        let smax = svd.singular_values.max();
        let a = svd
            .solve(&lower, smax * T::eps() * T::from_count(rows))
            .map_err(|_| SsiError::SvdFailure)?;
        Ok(StateSpaceRealization {
            a,
            c,
            order,
            sampling_rate_hz,
        })
    }
}

/// Realize a state-space model of order `order` from a projection.
pub fn realize<T: Real>(
    projection: &Projection<T>,
    order: usize,
    sampling_rate_hz: T,
) -> Result<StateSpaceRealization<T>, SsiError> {
    ProjectionSvd::new(projection)?.realize(order, sampling_rate_hz)
}
