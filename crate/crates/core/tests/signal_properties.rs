use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use strainmodal::signal::{detrend, high_pass, load_record, save_record, FilterSpec, RecordFormat, StrainRecord};

fn random_record(seed: u64, channels: usize, n: usize, fs: f64) -> StrainRecord<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = DMatrix::from_fn(channels, n, |_, _| rng.random_range(-1.0..1.0));
    let positions = (0..channels).map(|c| c as f64 * 1.5).collect();
    StrainRecord::new(samples, fs, positions).unwrap()
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn high_pass_is_linear(seed in 0u64..10_000, a in -3.0f64..3.0, b in -3.0f64..3.0, zero_phase in any::<bool>()) {
        let x = random_record(seed, 3, 400, 100.0);
        let y = random_record(seed + 1, 3, 400, 100.0);
        let spec = FilterSpec { zero_phase, ..FilterSpec::default() };
        let combo = StrainRecord::new(x.samples() * a + y.samples() * b, 100.0, x.positions_m().to_vec()).unwrap();
        let lhs = high_pass(&combo, &spec).unwrap();
        let rhs = high_pass(&x, &spec).unwrap().samples() * a + high_pass(&y, &spec).unwrap().samples() * b;
        let err = max_abs(&(lhs.samples() - &rhs));
        prop_assert!(err <= 1e-9 * max_abs(&rhs).max(1e-300), "err {}", err);
    }

    #[test]
    fn zero_phase_commutes_with_reversal(seed in 0u64..10_000) {
        let x = random_record(seed, 2, 500, 250.0);
        let spec = FilterSpec::default();
        let a = high_pass(&x.time_reversed(), &spec).unwrap();
        let b = high_pass(&x, &spec).unwrap().time_reversed();
        let err = max_abs(&(a.samples() - b.samples()));
        prop_assert!(err <= 1e-9 * max_abs(b.samples()), "err {}", err);
    }

    #[test]
    fn detrend_is_idempotent(seed in 0u64..10_000, slope in -5.0f64..5.0, offset in -100.0f64..100.0) {
        let x = random_record(seed, 3, 257, 50.0);
        let trended = DMatrix::from_fn(3, 257, |c, t| x.samples()[(c, t)] + offset + slope * t as f64);
        let x = StrainRecord::new(trended, 50.0, x.positions_m().to_vec()).unwrap();
        let once = detrend(&x);
        let twice = detrend(&once);
        prop_assert!(max_abs(&(twice.samples() - once.samples())) <= 1e-12);
    }

    #[test]
    fn binary_round_trip_is_exact(seed in 0u64..10_000, channels in 1usize..5, n in 1usize..64) {
        let x = random_record(seed, channels, n, 123.456);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.bin");
        save_record(&x, &path, RecordFormat::BinaryF64).unwrap();
        let y: StrainRecord<f64> = load_record(&path, RecordFormat::BinaryF64).unwrap();
        prop_assert_eq!(x, y);
    }
}

#[test]
fn dc_channel_is_removed() {
    let x = StrainRecord::new(DMatrix::from_element(1, 2500, 5.0), 250.0, vec![0.0]).unwrap();
    let y = high_pass(&x, &FilterSpec::default()).unwrap();
    assert!(max_abs(y.samples()) < 1e-6);
}

#[test]
fn detrend_of_white_noise_removes_only_a_line() {
    let x = random_record(7, 1, 1000, 10.0);
    let y = detrend(&x);
    let d: Vec<f64> = (0..1000).map(|t| x.samples()[(0, t)] - y.samples()[(0, t)]).collect();
    // The removed part is affine with a small slope.
    let slope = d[999] - d[998];
    for t in 1..1000 {
        assert!((d[t] - d[t - 1] - slope).abs() < 1e-12);
    }
    assert!(slope.abs() < 1e-3);
}
