use serde::{Deserialize, Serialize};

use super::BeamError;
use crate::scalar::Real;

/// Conditions at the two exterior supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndCondition {
    /// Zero displacement and zero bending moment.
    #[default]
    SimplySupported,
}

/// Continuous multi-span beam geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LayoutRepr<T>", into = "LayoutRepr<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct SpanLayout<T: Real> {
    span_lengths_m: Vec<T>,
    fiber_offset_m: T,
    end_condition: EndCondition,
}

#[derive(Serialize, Deserialize)]
struct LayoutRepr<T> {
    spans: Vec<T>,
    d: T,
    #[serde(default)]
    end_condition: EndCondition,
}

impl<T: Real> TryFrom<LayoutRepr<T>> for SpanLayout<T> {
    type Error = BeamError;
    fn try_from(r: LayoutRepr<T>) -> Result<Self, BeamError> {
        Self::new(r.spans, r.d, r.end_condition)
    }
}

impl<T: Real> From<SpanLayout<T>> for LayoutRepr<T> {
    fn from(l: SpanLayout<T>) -> Self {
        Self {
            spans: l.span_lengths_m,
            d: l.fiber_offset_m,
            end_condition: l.end_condition,
        }
    }
}

impl<T: Real> SpanLayout<T> {
    pub fn new(span_lengths_m: Vec<T>, fiber_offset_m: T, end_condition: EndCondition) -> Result<Self, BeamError> {
        if span_lengths_m.is_empty() {
            return Err(BeamError::InvalidLayout("at least one span required".into()));
        }
        if span_lengths_m.iter().any(|l| !(*l > T::zero()) || !l.is_finite_value()) {
            return Err(BeamError::InvalidLayout("span lengths must be positive".into()));
        }
        if !(fiber_offset_m > T::zero()) || !fiber_offset_m.is_finite_value() {
            return Err(BeamError::InvalidLayout("fiber offset must be positive".into()));
        }
        Ok(Self {
            span_lengths_m,
            fiber_offset_m,
            end_condition,
        })
    }

    /// Simply supported spans.
    pub fn simply_supported(span_lengths_m: Vec<T>, fiber_offset_m: T) -> Result<Self, BeamError> {
        Self::new(span_lengths_m, fiber_offset_m, EndCondition::SimplySupported)
    }

    pub fn span_lengths_m(&self) -> &[T] {
        &self.span_lengths_m
    }

    pub fn n_spans(&self) -> usize {
        self.span_lengths_m.len()
    }

    pub fn fiber_offset_m(&self) -> T {
        self.fiber_offset_m
    }

    pub fn end_condition(&self) -> EndCondition {
        self.end_condition
    }

    pub fn total_length_m(&self) -> T {
        self.span_lengths_m.iter().fold(T::zero(), |a, &b| a + b)
    }

    /// Support positions from the left end, `K + 1` values.
    pub fn supports_m(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.n_spans() + 1);
        let mut x = T::zero();
        out.push(x);
        for &l in &self.span_lengths_m {
            x += l;
            out.push(x);
        }
        out
    }

    fn tolerance(&self) -> T {
        self.total_length_m() * T::lit(1e-9)
    }

    /// Span index and local coordinate of a global position. A position on an
    /// interior support belongs to the span on its left.
    pub fn locate(&self, x: T) -> Result<(usize, T), BeamError> {
        let tol = self.tolerance();
        if !(x >= -tol) || !(x <= self.total_length_m() + tol) {
            return Err(BeamError::PositionOutOfRange {
                position: x.to_f64_lossy(),
            });
        }
        let mut start = T::zero();
        let last = self.n_spans() - 1;
        for (k, &l) in self.span_lengths_m.iter().enumerate() {
            if x <= start + l || k == last {
                let local = x - start;
                let local = if local < T::zero() { T::zero() } else if local > l { l } else { local };
                return Ok((k, local));
            }
            start += l;
        }
        unreachable!("layout has at least one span")
    }

    /// Indices of `positions` falling on span `k`, supports included.
    pub(crate) fn indices_in_span(&self, positions: &[T], k: usize) -> Vec<usize> {
        let supports = self.supports_m();
        let tol = self.tolerance();
        positions
            .iter()
            .enumerate()
            .filter(|(_, &x)| x >= supports[k] - tol && x <= supports[k + 1] + tol)
            .map(|(i, _)| i)
            .collect()
    }

    /// Fail with `InsufficientSamples` unless every span holds `required` positions.
    pub(crate) fn require_per_span(&self, positions: &[T], required: usize) -> Result<(), BeamError> {
        for k in 0..self.n_spans() {
            let found = self.indices_in_span(positions, k).len();
            if found < required {
                return Err(BeamError::InsufficientSamples { span: k, found, required });
            }
        }
        Ok(())
    }
}
