use nalgebra::ComplexField;
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bc::{null_space_constants, roots_in};
use super::shape::basis;
use super::{BeamError, ModeShapeSamples, ShapeKind, ShapeModel, SpanLayout};
use crate::scalar::{golden_section, Real};

/// Search settings for [`fit_sms_with`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions<T> {
    /// One-based mode number; sets the default β window.
    pub mode_index: usize,
    /// Centre of the β window when given.
    pub beta_hint: Option<T>,
    /// Relative half-width of the window around `beta_hint`.
    pub hint_half_width: T,
    /// Multiplier on `i·π/L_total` for the default window. `None` uses the
    /// number of spans.
    pub scan_factor: Option<T>,
    /// Grid intervals over the window before golden-section refinement.
    pub grid_points: usize,
    /// Samples required on every span.
    pub min_samples_per_span: usize,
}

impl<T: Real> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            mode_index: 1,
            beta_hint: None,
            hint_half_width: T::lit(0.25),
            scan_factor: None,
            grid_points: 400,
            min_samples_per_span: 8,
        }
    }
}

impl<T: Real> FitOptions<T> {
    /// β search window for `layout`.
    pub fn window(&self, layout: &SpanLayout<T>) -> (T, T) {
        match self.beta_hint {
            Some(h) => (h * (T::one() - self.hint_half_width), h * (T::one() + self.hint_half_width)),
            None => {
                let factor = self.scan_factor.unwrap_or_else(|| T::from_count(layout.n_spans()));
                let base = T::from_count(self.mode_index.max(1)) * T::pi() / layout.total_length_m() * factor;
                (T::lit(0.3) * base, T::lit(1.5) * base)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics<T> {
    /// `1 - correlation²` at the returned β.
    pub objective: T,
    /// RMS of normalized measured minus best-scaled prediction.
    pub residual_rms: T,
    /// σ_min of the boundary-condition matrix at the returned β.
    pub sigma_min: T,
    /// Minimizer of the objective over the window without the root constraint.
    pub beta_unconstrained: T,
    pub objective_unconstrained: T,
    pub beta_window: (T, T),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct ShapeFit<T: Real> {
    pub model: ShapeModel<T>,
    pub diagnostics: FitDiagnostics<T>,
}

struct Evaluated<T> {
    objective: T,
    sigma: T,
    constants: Vec<[T; 4]>,
    predicted: Vec<T>,
}

/// Strain of stacked constants at pre-located samples, up to the common
/// factor `-d·β²`.
fn predict<T: Real>(beta: T, constants: &[[T; 4]], located: &[(usize, T)]) -> Vec<T> {
    located
        .iter()
        .map(|&(k, l)| {
            let [s, co, sh, ch] = basis(beta, l);
            let c = &constants[k];
            -c[0] * s - c[1] * co + c[2] * sh + c[3] * ch
        })
        .collect()
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

fn evaluate<T: Real>(layout: &SpanLayout<T>, located: &[(usize, T)], measured: &[T], beta: T) -> Evaluated<T> {
    let (sigma, constants) = null_space_constants(layout, beta);
    let predicted = predict(beta, &constants, located);
    let pp = dot(&predicted, &predicted);
    let mm = dot(measured, measured);
    let objective = if pp > T::zero() && mm > T::zero() {
        let pm = dot(&predicted, measured);
        T::one() - pm * pm / (pp * mm)
    } else {
        T::one()
    };
    Evaluated {
        objective,
        sigma,
        constants,
        predicted,
    }
}

/// Fit a measured strain mode shape with the default options and an optional
/// β hint.
pub fn fit_sms<T: Real>(
    measured: &ModeShapeSamples<T>,
    layout: &SpanLayout<T>,
    beta_hint: Option<T>,
) -> Result<ShapeFit<T>, BeamError> {
    fit_sms_with(
        measured,
        layout,
        &FitOptions {
            beta_hint,
            ..FitOptions::default()
        },
    )
}

/// Fit a measured strain mode shape to the multi-span beam solution.
///
/// For each β the constants are the null direction of `B(β)`, so the support
/// conditions hold by construction. The objective `1 - corr²` against the
/// samples is scanned over the window and refined by golden section; the
/// returned model uses the characteristic root in the window with the lowest
/// objective, which keeps the boundary conditions exact.
pub fn fit_sms_with<T: Real>(
    measured: &ModeShapeSamples<T>,
    layout: &SpanLayout<T>,
    options: &FitOptions<T>,
) -> Result<ShapeFit<T>, BeamError> {
    if measured.kind() != ShapeKind::Sms {
        return Err(BeamError::InvalidShape("fit_sms expects strain samples".into()));
    }
    let located = measured
        .positions_m()
        .iter()
        .map(|&x| layout.locate(x))
        .collect::<Result<Vec<_>, _>>()?;
    layout.require_per_span(measured.positions_m(), options.min_samples_per_span)?;
    let m = measured.values();

    let (lo, hi) = options.window(layout);
    if !(lo > T::zero()) || !(hi > lo) {
        return Err(BeamError::InvalidBetaRange {
            min: lo.to_f64_lossy(),
            max: hi.to_f64_lossy(),
        });
    }
    let steps = options.grid_points.max(2);
    let grid: Vec<T> = (0..=steps)
        .map(|p| lo + (hi - lo) * T::from_count(p) / T::from_count(steps))
        .collect();
    let objectives: Vec<T> = grid
        .par_iter()
        .map(|&b| evaluate(layout, &located, m, b).objective)
        .collect();
    let best = (0..=steps)
        .min_by(|&a, &b| objectives[a].partial_cmp(&objectives[b]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    let (a, b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(steps)]);
    let (beta_u, obj_u) = golden_section(
        |beta| evaluate(layout, &located, m, beta).objective,
        a,
        b,
        T::lit(4.0) * T::eps() * b,
        300,
    );

    let roots = roots_in(layout, lo, hi)?;
    let mut chosen: Option<(T, Evaluated<T>)> = None;
    for r in roots {
        let e = evaluate(layout, &located, m, r);
        let better = match &chosen {
            None => true,
            Some((cb, ce)) => {
                e.objective < ce.objective
                    || (e.objective == ce.objective && (r - beta_u).abs() < (*cb - beta_u).abs())
            }
        };
        if better {
            chosen = Some((r, e));
        }
    }
    let Some((beta, mut e)) = chosen else {
        return Err(BeamError::RootsNotFound { found: 0, requested: 1 });
    };
    if !(e.objective <= T::lit(0.5)) {
        return Err(BeamError::FitDegenerate {
            objective: e.objective.to_f64_lossy(),
        });
    }

    let sign = if dot(&e.predicted, m) < T::zero() { -T::one() } else { T::one() };
    let d = layout.fiber_offset_m();
    let raw_peak = e.predicted.iter().fold(T::zero(), |acc, v| acc.max(v.abs())) * d * beta * beta;
    let scale = sign / raw_peak;
    for c in e.constants.iter_mut().flatten() {
        *c *= scale;
    }
    for v in e.predicted.iter_mut() {
        *v *= scale * d * beta * beta;
    }
    let model = ShapeModel::shared(options.mode_index, beta, e.constants, layout.clone())?;

    let alpha = dot(&e.predicted, m) / dot(&e.predicted, &e.predicted);
    let sq = m
        .iter()
        .zip(&e.predicted)
        .fold(T::zero(), |acc, (mv, pv)| acc + (*mv - alpha * *pv).powi(2));
    let residual_rms = (sq / T::from_count(m.len())).sqrt();

    Ok(ShapeFit {
        model,
        diagnostics: FitDiagnostics {
            objective: e.objective,
            residual_rms,
            sigma_min: e.sigma,
            beta_unconstrained: beta_u,
            objective_unconstrained: obj_u,
            beta_window: (lo, hi),
        },
    })
}

/// Real shape from a complex one: rotate by the phase that maximizes the norm
/// of the real part, then drop the imaginary part.
pub fn to_real_shape<T: Real>(shape: &[Complex<T>]) -> Vec<T> {
    let s = shape.iter().fold(Complex::new(T::zero(), T::zero()), |acc, z| acc + z * z);
    let theta = if s.modulus() > T::zero() { s.im.atan2(s.re) * T::lit(0.5) } else { T::zero() };
    let rot = Complex::new(theta.cos(), -theta.sin());
    shape.iter().map(|z| (z * rot).re).collect()
}
