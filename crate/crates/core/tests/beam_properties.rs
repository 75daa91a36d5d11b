use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;
use strainmodal::beam::{
    dms_via_polynomial, dms_via_trapezoid, eval_dms, eval_sms, find_characteristic_roots, fit_sms_with,
    null_space_constants, FitOptions, ModeShapeSamples, ShapeKind, ShapeModel, SpanLayout,
};
use strainmodal::metrics::mac_real;

fn default_layout() -> SpanLayout<f64> {
    SpanLayout::simply_supported(vec![16.0, 18.0, 16.0], 0.6).unwrap()
}

fn channels(layout: &SpanLayout<f64>, spacing: f64) -> Vec<f64> {
    let n = (layout.total_length_m() / spacing).round() as usize;
    (0..=n).map(|k| k as f64 * spacing).collect()
}

fn true_model(layout: &SpanLayout<f64>, i: usize) -> ShapeModel<f64> {
    let roots = find_characteristic_roots(layout, (0.05, 1.0), i).unwrap();
    let (_, c) = null_space_constants(layout, roots[i - 1]);
    ShapeModel::shared(i, roots[i - 1], c, layout.clone()).unwrap()
}

/// Largest deviation of `−d·Δ²w/h²` from the model strain at points more than
/// 1 cm from every support, relative to the largest strain magnitude seen.
fn curvature_mismatch(model: &ShapeModel<f64>, points: impl Iterator<Item = f64>) -> f64 {
    let h = 1e-3;
    let d = model.layout().fiber_offset_m();
    let supports = model.layout().supports_m();
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for x in points {
        if supports.iter().any(|s| (x - s).abs() <= 0.01) {
            continue;
        }
        let w = |x: f64| model.displacement(x).unwrap();
        let fd = -d * (w(x + h) - 2.0 * w(x) + w(x - h)) / (h * h);
        let s = model.strain(x).unwrap();
        worst = worst.max((fd - s).abs());
        scale = scale.max(s.abs());
    }
    worst / scale
}

#[test]
fn strain_matches_curvature_on_millimetre_grid() {
    let layout = default_layout();
    for i in 1..=3 {
        let model = true_model(&layout, i);
        let err = curvature_mismatch(&model, (0..=50_000).map(|k| k as f64 * 1e-3));
        assert!(err < 1e-4, "mode {i}: {err:e}");
    }
}

#[test]
fn single_span_roots_are_analytic() {
    let layout = SpanLayout::simply_supported(vec![10.0], 0.5).unwrap();
    let roots = find_characteristic_roots(&layout, (0.1, 1.7), 5).unwrap();
    for (i, b) in roots.iter().enumerate() {
        assert!((b - (i + 1) as f64 * PI / 10.0).abs() < 1e-8);
    }
}

#[test]
fn routes_agree_on_dense_single_span_sine() {
    let layout = SpanLayout::simply_supported(vec![10.0], 0.4).unwrap();
    let xs = channels(&layout, 0.1);
    let beta = PI / 10.0;
    let sms: Vec<f64> = xs.iter().map(|x| 0.4 * beta * beta * (beta * x).sin()).collect();
    let sms = ModeShapeSamples::new(xs.clone(), sms, ShapeKind::Sms).unwrap();
    let fit = fit_sms_with(&sms, &layout, &FitOptions::default()).unwrap();
    let physics = eval_dms(&fit.model, &xs).unwrap();
    let (poly, _) = dms_via_polynomial(&sms, &layout, 4).unwrap();
    let trap = dms_via_trapezoid(&sms, &layout).unwrap();
    let routes = [physics.values(), poly.values(), trap.values()];
    for a in 0..3 {
        for b in a + 1..3 {
            let v = mac_real(routes[a], routes[b]).unwrap();
            assert!(v > 0.999, "routes {a},{b}: {v}");
        }
    }
}

fn noisy_sms(layout: &SpanLayout<f64>, mode: usize, noise: f64, seed: u64) -> ModeShapeSamples<f64> {
    let xs = channels(layout, 1.0);
    let clean = eval_sms(&true_model(layout, mode), &xs).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = Normal::new(0.0, noise).unwrap();
    let values = clean.values().iter().map(|v| v + n.sample(&mut rng)).collect();
    ModeShapeSamples::new(xs, values, ShapeKind::Sms).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn random_models_satisfy_strain_curvature_relation(
        spans in prop::collection::vec(6.0f64..25.0, 1..4),
        beta in 0.05f64..0.4,
        raw in prop::collection::vec(-1.0f64..1.0, 12),
        d in 0.1f64..1.5,
    ) {
        let layout = SpanLayout::simply_supported(spans.clone(), d).unwrap();
        let constants: Vec<[f64; 4]> = (0..spans.len()).map(|k| [raw[4 * k], raw[4 * k + 1], raw[4 * k + 2], raw[4 * k + 3]]).collect();
        let model = ShapeModel::shared(1, beta, constants, layout.clone()).unwrap();
        let total = layout.total_length_m();
        let err = curvature_mismatch(&model, (0..=997).map(|k| k as f64 * total / 997.0));
        prop_assert!(err < 1e-4, "{:e}", err);
    }

    #[test]
    fn fit_is_scale_invariant(mode in 1usize..=3, seed in 0u64..1000, scale in 1e-3f64..1e3) {
        let layout = default_layout();
        let sms = noisy_sms(&layout, mode, 0.05, seed);
        let scaled_values: Vec<f64> = sms.values().iter().map(|v| v * scale).collect();
        let scaled = ModeShapeSamples::new(sms.positions_m().to_vec(), scaled_values, ShapeKind::Sms).unwrap();
        let opts = FitOptions { mode_index: mode, ..FitOptions::default() };
        let a = fit_sms_with(&sms, &layout, &opts).unwrap();
        let b = fit_sms_with(&scaled, &layout, &opts).unwrap();
        prop_assert!((a.model.beta()[0] - b.model.beta()[0]).abs() <= 1e-9 * a.model.beta()[0]);
        for (ca, cb) in a.model.stacked_constants().iter().zip(b.model.stacked_constants()) {
            prop_assert!((ca - cb).abs() <= 1e-9);
        }
    }

    #[test]
    fn fitted_displacement_vanishes_at_supports(mode in 1usize..=3, seed in 0u64..1000, noise in 0.0f64..0.2) {
        let layout = default_layout();
        let sms = noisy_sms(&layout, mode, noise, seed);
        let opts = FitOptions { mode_index: mode, ..FitOptions::default() };
        if let Ok(fit) = fit_sms_with(&sms, &layout, &opts) {
            // The 1 m channel grid contains every support.
            let dms = eval_dms(&fit.model, sms.positions_m()).unwrap();
            for s in layout.supports_m() {
                let k = sms.positions_m().iter().position(|&x| x == s).unwrap();
                prop_assert!(dms.values()[k].abs() < 1e-6);
            }
        }
    }
}
