use serde::{Deserialize, Serialize};

use super::SimError;
use crate::beam::{
    eval_dms, eval_sms, find_characteristic_roots, null_space_constants, BeamError, ModeShapeSamples, ShapeModel,
    SpanLayout,
};
use crate::scalar::Real;

/// Material and modal properties of the synthetic beam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct BeamSpec<T: Real> {
    pub layout: SpanLayout<T>,
    /// Flexural rigidity EI (N·m²).
    pub ei_n_m2: T,
    /// Mass per unit length ρA (kg/m).
    pub rho_a_kg_m: T,
    /// ζ per mode; a single value applies to every mode.
    pub modal_damping: Vec<T>,
    pub n_modes: usize,
}

impl<T: Real> BeamSpec<T> {
    /// Beam whose `EI/ρA` equals `ratio`, with ρA = 10 t/m.
    pub fn from_ratio(layout: SpanLayout<T>, ratio: T, modal_damping: Vec<T>, n_modes: usize) -> Self {
        let rho_a = T::lit(1.0e4);
        Self {
            layout,
            ei_n_m2: ratio * rho_a,
            rho_a_kg_m: rho_a,
            modal_damping,
            n_modes,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidScenario(m.into()));
        if !(self.ei_n_m2 > T::zero()) || !self.ei_n_m2.is_finite_value() {
            return bad("EI must be positive");
        }
        if !(self.rho_a_kg_m > T::zero()) || !self.rho_a_kg_m.is_finite_value() {
            return bad("rho_A must be positive");
        }
        if self.n_modes == 0 {
            return bad("at least one mode required");
        }
        if self.modal_damping.len() != 1 && self.modal_damping.len() != self.n_modes {
            return bad("modal_damping needs one value or one per mode");
        }
        if self
            .modal_damping
            .iter()
            .any(|z| !(*z >= T::zero() && *z < T::lit(0.2)))
        {
            return bad("modal damping must lie in [0, 0.2)");
        }
        Ok(())
    }

    /// `EI / ρA`.
    pub fn stiffness_ratio(&self) -> T {
        self.ei_n_m2 / self.rho_a_kg_m
    }

    /// ζ of zero-based mode `i`.
    pub fn damping(&self, i: usize) -> T {
        if self.modal_damping.len() == 1 {
            self.modal_damping[0]
        } else {
            self.modal_damping[i]
        }
    }
}

/// Exact mode of the synthetic beam. The model is scaled to unit peak
/// displacement, positive at the peak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct TrueMode<T: Real> {
    pub mode_index: usize,
    pub beta: T,
    pub frequency_hz: T,
    pub damping_ratio: T,
    pub model: ShapeModel<T>,
}

impl<T: Real> TrueMode<T> {
    /// Normalized strain mode shape at `positions`.
    pub fn sms(&self, positions: &[T]) -> Result<ModeShapeSamples<T>, BeamError> {
        eval_sms(&self.model, positions)
    }

    /// Normalized displacement mode shape at `positions`.
    pub fn dms(&self, positions: &[T]) -> Result<ModeShapeSamples<T>, BeamError> {
        eval_dms(&self.model, positions)
    }
}

fn lowest_roots<T: Real>(layout: &SpanLayout<T>, n: usize) -> Result<Vec<T>, BeamError> {
    let lengths = layout.span_lengths_m();
    let l_max = lengths.iter().copied().fold(T::zero(), |a, b| a.max(b));
    let l_min = lengths.iter().copied().fold(l_max, |a, b| a.min(b));
    // Decoupled hinged spans bound the first root from below.
    let lo = T::lit(0.5) * T::pi() / l_max;
    let mut hi = T::from_count(n + 2) * T::pi() / l_min;
    let mut last = None;
    for _ in 0..4 {
        match find_characteristic_roots(layout, (lo, hi), n) {
            Ok(r) => return Ok(r),
            Err(e @ BeamError::RootsNotFound { .. }) => {
                last = Some(e);
                hi *= T::lit(2.0);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("loop ran"))
}

fn unit_peak_model<T: Real>(mode_index: usize, beta: T, layout: &SpanLayout<T>) -> Result<ShapeModel<T>, BeamError> {
    let (_, constants) = null_space_constants(layout, beta);
    let model = ShapeModel::shared(mode_index, beta, constants.clone(), layout.clone())?;
    let supports = layout.supports_m();
    let per_span = 400;
    let mut peak = T::zero();
    let mut signed = T::zero();
    for k in 0..layout.n_spans() {
        for p in 0..=per_span {
            let x = supports[k] + (supports[k + 1] - supports[k]) * T::from_count(p) / T::from_count(per_span);
            let w = model.displacement(x)?;
            if w.abs() > peak {
                peak = w.abs();
                signed = w;
            }
        }
    }
    let scale = T::one() / signed;
    let constants = constants
        .into_iter()
        .map(|c| [c[0] * scale, c[1] * scale, c[2] * scale, c[3] * scale])
        .collect();
    ShapeModel::shared(mode_index, beta, constants, layout.clone())
}

/// The first `beam.n_modes` modes, ascending in frequency.
///
/// `f = β²·sqrt(EI/ρA) / 2π`, with β from the characteristic-root search
/// and shapes from the null space of the boundary-condition matrix.
pub fn solve_modes<T: Real>(beam: &BeamSpec<T>) -> Result<Vec<TrueMode<T>>, SimError> {
    beam.validate()?;
    let roots = lowest_roots(&beam.layout, beam.n_modes)?;
    let c = beam.stiffness_ratio().sqrt();
    roots
        .into_iter()
        .enumerate()
        .map(|(i, beta)| {
            Ok(TrueMode {
                mode_index: i + 1,
                beta,
                frequency_hz: beta * beta * c / T::two_pi(),
                damping_ratio: beam.damping(i),
                model: unit_peak_model(i + 1, beta, &beam.layout)?,
            })
        })
        .collect()
}

/// `EI/ρA` that places the first mode of `layout` at `target_f1_hz`.
pub fn calibrate_first_frequency<T: Real>(layout: &SpanLayout<T>, target_f1_hz: T) -> Result<T, SimError> {
    if !(target_f1_hz > T::zero()) || !target_f1_hz.is_finite_value() {
        return Err(SimError::InvalidScenario("target frequency must be positive".into()));
    }
    let beta = lowest_roots(layout, 1)?[0];
    let r = T::two_pi() * target_f1_hz / (beta * beta);
    Ok(r * r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn beam(spans: Vec<f64>, ratio: f64, n: usize) -> BeamSpec<f64> {
        let layout = SpanLayout::simply_supported(spans, 0.6).unwrap();
        BeamSpec::from_ratio(layout, ratio, vec![0.02], n)
    }

    #[test]
    fn single_span_closed_form() {
        let modes = solve_modes(&beam(vec![10.0], 1.0, 3)).unwrap();
        for (i, m) in modes.iter().enumerate() {
            let b = (i + 1) as f64 * PI / 10.0;
            assert!((m.frequency_hz - b * b / (2.0 * PI)).abs() < 1e-8);
        }
        let d = modes[0].dms(&[2.0, 5.0]).unwrap();
        assert!((d.values()[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn calibration_round_trip() {
        let layout = SpanLayout::simply_supported(vec![10.0], 0.6).unwrap();
        let target = (PI / 10.0).powi(2) / (2.0 * PI);
        assert!((calibrate_first_frequency(&layout, target).unwrap() - 1.0).abs() < 1e-9);
        assert!(calibrate_first_frequency(&layout, 0.0).is_err());

        let layout = SpanLayout::<f64>::simply_supported(vec![16.0, 18.0, 16.0], 0.6).unwrap();
        let ratio = calibrate_first_frequency(&layout, 4.61).unwrap();
        let modes = solve_modes(&BeamSpec::from_ratio(layout, ratio, vec![0.02], 3)).unwrap();
        assert!((modes[0].frequency_hz - 4.61).abs() < 1e-6);
        assert!(modes.windows(2).all(|w| w[1].frequency_hz > w[0].frequency_hz));
    }

    #[test]
    fn ground_truth_properties() {
        let layout = SpanLayout::<f64>::simply_supported(vec![16.0, 18.0, 16.0], 0.6).unwrap();
        let ratio = calibrate_first_frequency(&layout, 4.61).unwrap();
        let modes = solve_modes(&BeamSpec::from_ratio(layout.clone(), ratio, vec![0.02], 3)).unwrap();
        let xs: Vec<f64> = (0..=50).map(|k| k as f64).collect();
        for m in &modes {
            for s in layout.supports_m() {
                assert!(m.model.displacement(s).unwrap().abs() < 1e-9);
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let a = modes[i].sms(&xs).unwrap();
                    let b = modes[j].sms(&xs).unwrap();
                    let v = crate::metrics::mac_real(a.values(), b.values()).unwrap();
                    assert!(v < 0.1, "MAC({i},{j}) = {v}");
                }
            }
        }
    }

    #[test]
    fn invalid_specs() {
        let mut b = beam(vec![10.0], 1.0, 2);
        b.modal_damping = vec![0.01, 0.02, 0.03];
        assert!(solve_modes(&b).is_err());
        let mut b = beam(vec![10.0], 1.0, 2);
        b.modal_damping = vec![0.25];
        assert!(solve_modes(&b).is_err());
        let mut b = beam(vec![10.0], 1.0, 1);
        b.n_modes = 0;
        assert!(solve_modes(&b).is_err());
    }
}
