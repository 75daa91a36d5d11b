use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::shape::normalize_real;
use super::{BeamError, ModeShapeSamples, ShapeKind, SpanLayout};
use crate::scalar::Real;

fn check_input<T: Real>(measured: &ModeShapeSamples<T>, layout: &SpanLayout<T>) -> Result<(), BeamError> {
    if measured.kind() != ShapeKind::Sms {
        return Err(BeamError::InvalidShape("integration expects strain samples".into()));
    }
    for &x in measured.positions_m() {
        layout.locate(x)?;
    }
    Ok(())
}

/// Linear interpolation of `(xs, ys)` at `x`, extrapolating from the end
/// segments.
fn linear_at<T: Real>(xs: &[T], ys: &[T], x: T) -> T {
    let n = xs.len();
    let seg = if x <= xs[0] {
        0
    } else if x >= xs[n - 1] {
        n - 2
    } else {
        xs.windows(2).position(|w| x <= w[1]).unwrap_or(n - 2)
    };
    let t = (x - xs[seg]) / (xs[seg + 1] - xs[seg]);
    ys[seg] + t * (ys[seg + 1] - ys[seg])
}

/// Unnormalized displacement from strain samples by two cumulative
/// trapezoid passes per span, corrected by the line that zeroes the
/// displacement at both supports of the span.
///
/// `positions` must be increasing and lie on the layout.
pub fn double_integrate_trapezoid<T: Real>(positions: &[T], strain: &[T], layout: &SpanLayout<T>) -> Result<Vec<T>, BeamError> {
    if positions.len() != strain.len() {
        return Err(BeamError::InvalidShape("positions and values differ in length".into()));
    }
    layout.require_per_span(positions, 3)?;
    let supports = layout.supports_m();
    let inv_d = -T::one() / layout.fiber_offset_m();
    let half = T::lit(0.5);
    let mut out = vec![T::zero(); positions.len()];
    for k in 0..layout.n_spans() {
        let idx = layout.indices_in_span(positions, k);
        let xs: Vec<T> = idx.iter().map(|&i| positions[i]).collect();
        let g: Vec<T> = idx.iter().map(|&i| strain[i] * inv_d).collect();
        let mut slope = vec![T::zero(); xs.len()];
        let mut w = vec![T::zero(); xs.len()];
        for p in 1..xs.len() {
            let dx = xs[p] - xs[p - 1];
            slope[p] = slope[p - 1] + half * (g[p] + g[p - 1]) * dx;
            w[p] = w[p - 1] + half * (slope[p] + slope[p - 1]) * dx;
        }
        let (a, b) = (supports[k], supports[k + 1]);
        let wa = linear_at(&xs, &w, a);
        let wb = linear_at(&xs, &w, b);
        for (p, &i) in idx.iter().enumerate() {
            let t = (xs[p] - a) / (b - a);
            out[i] = w[p] - (wa + t * (wb - wa));
        }
    }
    Ok(out)
}

/// Displacement mode shape by trapezoidal double integration of the samples.
pub fn dms_via_trapezoid<T: Real>(measured: &ModeShapeSamples<T>, layout: &SpanLayout<T>) -> Result<ModeShapeSamples<T>, BeamError> {
    check_input(measured, layout)?;
    let mut w = double_integrate_trapezoid(measured.positions_m(), measured.values(), layout)?;
    normalize_real(&mut w)?;
    ModeShapeSamples::new(measured.positions_m().to_vec(), w, ShapeKind::Dms)
}

/// Per-span quality of the polynomial baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialDiagnostics<T> {
    /// RMS misfit of the strain polynomial, in normalized strain units.
    pub residual_rms: Vec<T>,
    /// Condition number of the scaled Vandermonde matrix.
    pub condition: Vec<T>,
}

/// Displacement mode shape from a per-span least-squares polynomial fit of
/// the strain, integrated twice analytically with zero displacement at both
/// supports.
///
/// Positions are mapped to `u ∈ [-1, 1]` on each span before fitting.
pub fn dms_via_polynomial<T: Real>(
    measured: &ModeShapeSamples<T>,
    layout: &SpanLayout<T>,
    degree: usize,
) -> Result<(ModeShapeSamples<T>, PolynomialDiagnostics<T>), BeamError> {
    check_input(measured, layout)?;
    if degree == 0 {
        return Err(BeamError::InvalidShape("polynomial degree must be at least 1".into()));
    }
    let positions = measured.positions_m();
    let values = measured.values();
    layout.require_per_span(positions, degree + 1)?;
    let supports = layout.supports_m();
    let d = layout.fiber_offset_m();
    let mut out = vec![T::zero(); positions.len()];
    let mut diag = PolynomialDiagnostics {
        residual_rms: Vec::new(),
        condition: Vec::new(),
    };

    for k in 0..layout.n_spans() {
        let idx = layout.indices_in_span(positions, k);
        let h = (supports[k + 1] - supports[k]) * T::lit(0.5);
        let mid = supports[k] + h;
        let u: Vec<T> = idx.iter().map(|&i| (positions[i] - mid) / h).collect();
        let v = DMatrix::from_fn(u.len(), degree + 1, |r, c| u[r].powi(c as i32));
        let rhs = DVector::from_iterator(idx.len(), idx.iter().map(|&i| values[i]));

        let svd = v.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let condition = if smin > T::zero() { smax / smin } else { T::lit(f64::INFINITY) };
        if !(condition <= T::lit(1e12)) {
            return Err(BeamError::IllConditionedFit {
                condition: condition.to_f64_lossy(),
            });
        }
        let coef = svd
            .solve(&rhs, T::zero())
            .map_err(|e| BeamError::InvalidShape(e.to_string()))?;
        let resid = &v * &coef - &rhs;
        diag.residual_rms.push((resid.norm_squared() / T::from_count(idx.len())).sqrt());
        diag.condition.push(condition);

        // d²w/du² = -h²/d · Σ a_n uⁿ
        let factor = -h * h / d;
        let p = |x: T| {
            coef.iter().enumerate().fold(T::zero(), |acc, (n, &a)| {
                let nn = T::from_count(n);
                acc + a * x.powi(n as i32 + 2) / ((nn + T::one()) * (nn + T::lit(2.0)))
            }) * factor
        };
        let (p_plus, p_minus) = (p(T::one()), p(-T::one()));
        let offset = (p_plus + p_minus) * T::lit(0.5);
        let tilt = (p_plus - p_minus) * T::lit(0.5);
        for (q, &i) in idx.iter().enumerate() {
            out[i] = p(u[q]) - offset - tilt * u[q];
        }
    }
    normalize_real(&mut out)?;
    Ok((ModeShapeSamples::new(positions.to_vec(), out, ShapeKind::Dms)?, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::mac_real;
    use std::f64::consts::PI;

    fn single(l: f64) -> SpanLayout<f64> {
        SpanLayout::simply_supported(vec![l], 0.5).unwrap()
    }

    fn sine_sms(xs: &[f64], l: f64) -> ModeShapeSamples<f64> {
        let beta = PI / l;
        let v = xs.iter().map(|x| 0.5 * beta * beta * (beta * x).sin()).collect();
        ModeShapeSamples::new(xs.to_vec(), v, ShapeKind::Sms).unwrap()
    }

    #[test]
    fn trapezoid_recovers_sine() {
        let xs: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        let dms = dms_via_trapezoid(&sine_sms(&xs, 10.0), &single(10.0)).unwrap();
        let truth: Vec<f64> = xs.iter().map(|x| (PI * x / 10.0).sin()).collect();
        assert!(mac_real(dms.values(), &truth).unwrap() > 0.999);
        assert!(dms.values()[0].abs() < 1e-12 && dms.values()[10].abs() < 1e-12);
    }

    #[test]
    fn trapezoid_zero_input() {
        let xs: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        let w = double_integrate_trapezoid(&xs, &[0.0; 11], &single(10.0)).unwrap();
        assert!(w.iter().all(|v| *v == 0.0));
        let mut w = w;
        assert_eq!(normalize_real(&mut w), Err(BeamError::DegenerateShape));
    }

    #[test]
    fn trapezoid_needs_three_samples_per_span() {
        let layout = SpanLayout::simply_supported(vec![5.0, 5.0], 0.5).unwrap();
        let xs = vec![0.0, 2.0, 4.0, 6.0, 10.0];
        let s = ModeShapeSamples::new(xs, vec![0.1, 0.5, 1.0, 0.4, 0.0], ShapeKind::Sms).unwrap();
        assert!(matches!(
            dms_via_trapezoid(&s, &layout),
            Err(BeamError::InsufficientSamples { span: 1, found: 2, required: 3 })
        ));
    }

    #[test]
    fn trapezoid_off_support_grid() {
        // samples do not land on the supports; the correction extrapolates
        let xs: Vec<f64> = (0..40).map(|k| 0.125 + k as f64 * 0.25).collect();
        let dms = dms_via_trapezoid(&sine_sms(&xs, 10.0), &single(10.0)).unwrap();
        let truth: Vec<f64> = xs.iter().map(|x| (PI * x / 10.0).sin()).collect();
        assert!(mac_real(dms.values(), &truth).unwrap() > 0.9999);
    }

    #[test]
    fn polynomial_closure_on_cubic() {
        // strain = a + b u + c u² + e u³ on two spans, compare with the
        // exact double antiderivative pinned at the supports
        let layout = SpanLayout::simply_supported(vec![6.0, 10.0], 0.5).unwrap();
        let coefs = [[0.3, -1.0, 0.7, 0.25], [-0.5, 0.2, 1.1, -0.4]];
        // the test strain jumps at the interior support, so keep samples off it
        let xs: Vec<f64> = (0..32).map(|k| 0.25 + k as f64 * 0.5).collect();
        let (starts, lens) = ([0.0, 6.0], [6.0, 10.0]);
        let span = |x: f64| if x <= 6.0 { 0 } else { 1 };
        let strain: Vec<f64> = xs
            .iter()
            .map(|&x| {
                let k = span(x);
                let h = lens[k] / 2.0;
                let u = (x - starts[k] - h) / h;
                coefs[k].iter().enumerate().map(|(n, a)| a * u.powi(n as i32)).sum()
            })
            .collect();
        let exact: Vec<f64> = xs
            .iter()
            .map(|&x| {
                let k = span(x);
                let h = lens[k] / 2.0;
                let u = (x - starts[k] - h) / h;
                let p = |u: f64| -> f64 {
                    -h * h / 0.5
                        * coefs[k]
                            .iter()
                            .enumerate()
                            .map(|(n, a)| a * u.powi(n as i32 + 2) / ((n + 1) * (n + 2)) as f64)
                            .sum::<f64>()
                };
                p(u) - (p(1.0) + p(-1.0)) / 2.0 - u * (p(1.0) - p(-1.0)) / 2.0
            })
            .collect();
        let mut exact_n = exact.clone();
        normalize_real(&mut exact_n).unwrap();
        let sms = ModeShapeSamples::new(xs, strain, ShapeKind::Sms).unwrap();
        let (dms, diag) = dms_via_polynomial(&sms, &layout, 3).unwrap();
        for (a, b) in dms.values().iter().zip(&exact_n) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(diag.residual_rms.iter().all(|r| *r < 1e-12));
    }

    #[test]
    fn polynomial_degree_eight_on_sine() {
        let xs: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        let (dms, _) = dms_via_polynomial(&sine_sms(&xs, 10.0), &single(10.0), 8).unwrap();
        let truth: Vec<f64> = xs.iter().map(|x| (PI * x / 10.0).sin()).collect();
        assert!(mac_real(dms.values(), &truth).unwrap() > 0.999);
    }

    #[test]
    fn polynomial_underfit_reports_residual() {
        let xs: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        let (_, diag) = dms_via_polynomial(&sine_sms(&xs, 10.0), &single(10.0), 1).unwrap();
        assert!(diag.residual_rms[0] > 0.2);
        let (_, diag) = dms_via_polynomial(&sine_sms(&xs, 10.0), &single(10.0), 6).unwrap();
        assert!(diag.residual_rms[0] < 1e-3);
    }

    #[test]
    fn polynomial_errors() {
        let xs: Vec<f64> = (0..=4).map(|k| k as f64 * 2.5).collect();
        let s = sine_sms(&xs, 10.0);
        assert!(matches!(
            dms_via_polynomial(&s, &single(10.0), 5),
            Err(BeamError::InsufficientSamples { .. })
        ));
        assert!(dms_via_polynomial(&s, &single(10.0), 0).is_err());
        // clustered samples make high powers indistinguishable
        let xs: Vec<f64> = (0..30).map(|k| 5.0 + k as f64 * 1e-4).collect();
        let v: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let s = ModeShapeSamples::new(xs, v, ShapeKind::Sms).unwrap();
        assert!(matches!(
            dms_via_polynomial(&s, &single(10.0), 6),
            Err(BeamError::IllConditionedFit { .. })
        ));
    }
}
