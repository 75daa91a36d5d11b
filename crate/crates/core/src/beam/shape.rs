use serde::{Deserialize, Serialize};

use super::{BeamError, SpanLayout};
use crate::scalar::Real;

/// Which physical quantity a set of shape samples describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    /// Strain mode shape.
    Sms,
    /// Displacement mode shape.
    Dms,
}

/// Sampled mode shape, normalized to max |value| = 1 with a positive value at
/// the largest-magnitude position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SamplesRepr<T>", into = "SamplesRepr<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct ModeShapeSamples<T: Real> {
    positions_m: Vec<T>,
    values: Vec<T>,
    kind: ShapeKind,
}

#[derive(Serialize, Deserialize)]
struct SamplesRepr<T> {
    positions_m: Vec<T>,
    values: Vec<T>,
    kind: ShapeKind,
}

impl<T: Real> TryFrom<SamplesRepr<T>> for ModeShapeSamples<T> {
    type Error = BeamError;
    fn try_from(r: SamplesRepr<T>) -> Result<Self, BeamError> {
        Self::new(r.positions_m, r.values, r.kind)
    }
}

impl<T: Real> From<ModeShapeSamples<T>> for SamplesRepr<T> {
    fn from(s: ModeShapeSamples<T>) -> Self {
        Self {
            positions_m: s.positions_m,
            values: s.values,
            kind: s.kind,
        }
    }
}

/// Scale `values` to max |v| = 1, positive at the first largest-magnitude entry.
pub(crate) fn normalize_real<T: Real>(values: &mut [T]) -> Result<(), BeamError> {
    let mut peak = T::zero();
    let mut at = 0;
    for (i, v) in values.iter().enumerate() {
        if v.abs() > peak {
            peak = v.abs();
            at = i;
        }
    }
    if !(peak > T::zero()) || !peak.is_finite_value() {
        return Err(BeamError::DegenerateShape);
    }
    let scale = if values[at] < T::zero() { -T::one() / peak } else { T::one() / peak };
    for v in values.iter_mut() {
        *v *= scale;
    }
    Ok(())
}

impl<T: Real> ModeShapeSamples<T> {
    /// Validates strictly increasing positions and normalizes the values.
    pub fn new(positions_m: Vec<T>, mut values: Vec<T>, kind: ShapeKind) -> Result<Self, BeamError> {
        if positions_m.len() != values.len() {
            return Err(BeamError::InvalidShape(format!(
                "{} positions but {} values",
                positions_m.len(),
                values.len()
            )));
        }
        if positions_m.is_empty() {
            return Err(BeamError::InvalidShape("no samples".into()));
        }
        if positions_m.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(BeamError::InvalidShape("positions must be strictly increasing".into()));
        }
        if values.iter().chain(&positions_m).any(|v| !v.is_finite_value()) {
            return Err(BeamError::InvalidShape("non-finite sample".into()));
        }
        normalize_real(&mut values)?;
        Ok(Self { positions_m, values, kind })
    }

    pub fn positions_m(&self) -> &[T] {
        &self.positions_m
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn kind(&self) -> ShapeKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Fitted or exact mode: β and `(C1, C2, C3, C4)` per span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr<T>", into = "ModelRepr<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct ShapeModel<T: Real> {
    mode_index: usize,
    beta: Vec<T>,
    constants: Vec<[T; 4]>,
    layout: SpanLayout<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
struct ModelRepr<T: Real> {
    mode_index: usize,
    beta: Vec<T>,
    constants: Vec<[T; 4]>,
    layout: SpanLayout<T>,
}

impl<T: Real> TryFrom<ModelRepr<T>> for ShapeModel<T> {
    type Error = BeamError;
    fn try_from(r: ModelRepr<T>) -> Result<Self, BeamError> {
        Self::new(r.mode_index, r.beta, r.constants, r.layout)
    }
}

impl<T: Real> From<ShapeModel<T>> for ModelRepr<T> {
    fn from(m: ShapeModel<T>) -> Self {
        Self {
            mode_index: m.mode_index,
            beta: m.beta,
            constants: m.constants,
            layout: m.layout,
        }
    }
}

/// `(sin βl, cos βl, sinh βl, cosh βl)`.
#[inline]
pub(crate) fn basis<T: Real>(beta: T, l: T) -> [T; 4] {
    let x = beta * l;
    [x.sin(), x.cos(), x.sinh(), x.cosh()]
}

impl<T: Real> ShapeModel<T> {
    pub fn new(mode_index: usize, beta: Vec<T>, constants: Vec<[T; 4]>, layout: SpanLayout<T>) -> Result<Self, BeamError> {
        let k = layout.n_spans();
        if beta.len() != k || constants.len() != k {
            return Err(BeamError::InvalidShape(format!(
                "{k} spans but {} β values and {} constant sets",
                beta.len(),
                constants.len()
            )));
        }
        if beta.iter().any(|b| !(*b > T::zero()) || !b.is_finite_value()) {
            return Err(BeamError::InvalidShape("β must be positive".into()));
        }
        if constants.iter().flatten().any(|c| !c.is_finite_value()) {
            return Err(BeamError::InvalidShape("non-finite constant".into()));
        }
        Ok(Self {
            mode_index,
            beta,
            constants,
            layout,
        })
    }

    /// Same β on every span.
    pub fn shared(mode_index: usize, beta: T, constants: Vec<[T; 4]>, layout: SpanLayout<T>) -> Result<Self, BeamError> {
        let beta = vec![beta; layout.n_spans()];
        Self::new(mode_index, beta, constants, layout)
    }

    pub fn mode_index(&self) -> usize {
        self.mode_index
    }

    pub fn beta(&self) -> &[T] {
        &self.beta
    }

    pub fn constants(&self) -> &[[T; 4]] {
        &self.constants
    }

    pub fn layout(&self) -> &SpanLayout<T> {
        &self.layout
    }

    pub fn is_shared_beta(&self) -> bool {
        self.beta.windows(2).all(|w| w[0] == w[1])
    }

    /// Constants stacked span by span, `4K` values.
    pub fn stacked_constants(&self) -> Vec<T> {
        self.constants.iter().flatten().copied().collect()
    }

    fn at(&self, x: T) -> Result<(T, [T; 4], [T; 4]), BeamError> {
        let (k, l) = self.layout.locate(x)?;
        Ok((self.beta[k], self.constants[k], basis(self.beta[k], l)))
    }

    /// Raw displacement `w(x)`.
    pub fn displacement(&self, x: T) -> Result<T, BeamError> {
        let (_, c, [s, co, sh, ch]) = self.at(x)?;
        Ok(c[0] * s + c[1] * co + c[2] * sh + c[3] * ch)
    }

    /// Raw rotation `w'(x)`.
    pub fn slope(&self, x: T) -> Result<T, BeamError> {
        let (b, c, [s, co, sh, ch]) = self.at(x)?;
        Ok(b * (c[0] * co - c[1] * s + c[2] * ch + c[3] * sh))
    }

    /// Raw curvature `w''(x)`.
    pub fn curvature(&self, x: T) -> Result<T, BeamError> {
        let (b, c, [s, co, sh, ch]) = self.at(x)?;
        Ok(b * b * (-c[0] * s - c[1] * co + c[2] * sh + c[3] * ch))
    }

    /// Raw strain `-d·w''(x)`.
    pub fn strain(&self, x: T) -> Result<T, BeamError> {
        Ok(-self.layout.fiber_offset_m() * self.curvature(x)?)
    }

    /// Largest |f| over 200 points per span.
    pub(crate) fn dense_peak(&self, f: impl Fn(&Self, T) -> Result<T, BeamError>) -> T {
        let supports = self.layout.supports_m();
        let per_span = 200;
        let mut peak = T::zero();
        for k in 0..self.layout.n_spans() {
            let (a, b) = (supports[k], supports[k + 1]);
            for p in 0..=per_span {
                let x = a + (b - a) * T::from_count(p) / T::from_count(per_span);
                if let Ok(v) = f(self, x) {
                    peak = peak.max(v.abs());
                }
            }
        }
        peak
    }
}

fn eval_with<T: Real>(
    model: &ShapeModel<T>,
    positions: &[T],
    kind: ShapeKind,
    f: impl Fn(&ShapeModel<T>, T) -> Result<T, BeamError>,
) -> Result<ModeShapeSamples<T>, BeamError> {
    let values = positions.iter().map(|&x| f(model, x)).collect::<Result<Vec<T>, _>>()?;
    let local = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if local <= T::lit(1e-12) * model.dense_peak(&f) {
        return Err(BeamError::DegenerateShape);
    }
    ModeShapeSamples::new(positions.to_vec(), values, kind)
}

/// Strain mode shape of `model` at global `positions`, normalized.
pub fn eval_sms<T: Real>(model: &ShapeModel<T>, positions: &[T]) -> Result<ModeShapeSamples<T>, BeamError> {
    eval_with(model, positions, ShapeKind::Sms, ShapeModel::strain)
}

/// Displacement mode shape of `model` at global `positions`, normalized.
pub fn eval_dms<T: Real>(model: &ShapeModel<T>, positions: &[T]) -> Result<ModeShapeSamples<T>, BeamError> {
    eval_with(model, positions, ShapeKind::Dms, ShapeModel::displacement)
}
