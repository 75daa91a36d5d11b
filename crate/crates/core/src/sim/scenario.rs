use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{calibrate_first_frequency, solve_modes, BeamSpec, SimError, TrueMode};
use crate::beam::SpanLayout;
use crate::scalar::Real;
use crate::signal::{AccelRecord, StrainRecord};

/// Strain samples are written in microstrain.
const MICROSTRAIN: f64 = 1.0e6;

/// Simulation settings. Missing JSON fields take the values of
/// [`SimScenario::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct SimScenario<T: Real> {
    pub beam: BeamSpec<T>,
    pub duration_s: T,
    pub fs_hz: T,
    pub channel_spacing_m: T,
    pub accel_positions_m: Vec<T>,
    /// Per-channel signal-to-noise ratio; `None` means noise-free.
    pub snr_db: Option<T>,
    pub seed: u64,
    /// Two-sided spectral intensity of the modal white-noise forcing.
    pub excitation_intensity: T,
}

impl<T: Real> Default for SimScenario<T> {
    /// Three spans of 16/18/16 m, first mode at 4.61 Hz, ζ = 0.02 for three
    /// modes, 250 Hz for 480 s with 1 m channel spacing, four
    /// accelerometers and 10 dB SNR.
    fn default() -> Self {
        let layout = SpanLayout::simply_supported(vec![T::lit(16.0), T::lit(18.0), T::lit(16.0)], T::lit(0.6))
            .expect("default layout is valid");
        let ratio = calibrate_first_frequency(&layout, T::lit(4.61)).expect("default layout has a first root");
        Self {
            beam: BeamSpec::from_ratio(layout, ratio, vec![T::lit(0.02)], 3),
            duration_s: T::lit(480.0),
            fs_hz: T::lit(250.0),
            channel_spacing_m: T::one(),
            accel_positions_m: vec![T::lit(8.0), T::lit(25.0), T::lit(29.5), T::lit(42.0)],
            snr_db: Some(T::lit(10.0)),
            seed: 0,
            excitation_intensity: T::lit(1.0e-3),
        }
    }
}

impl<T: Real> SimScenario<T> {
    pub fn n_samples(&self) -> usize {
        (self.duration_s * self.fs_hz).round().to_usize().unwrap_or(0)
    }

    /// Strain channel positions: multiples of the spacing up to the beam end.
    pub fn channel_positions_m(&self) -> Vec<T> {
        let total = self.beam.layout.total_length_m();
        let tol = total * T::lit(1e-9);
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let x = self.channel_spacing_m * T::from_count(k);
            if x > total + tol {
                break;
            }
            out.push(if x > total { total } else { x });
            k += 1;
        }
        out
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidScenario(m.into()));
        self.beam.validate()?;
        if !(self.fs_hz > T::zero()) || !self.fs_hz.is_finite_value() {
            return bad("sampling rate must be positive");
        }
        if !(self.duration_s > T::zero()) || self.n_samples() < 2 {
            return bad("duration must cover at least two samples");
        }
        if !(self.channel_spacing_m > T::zero()) {
            return bad("channel spacing must be positive");
        }
        if !(self.excitation_intensity > T::zero()) {
            return bad("excitation intensity must be positive");
        }
        if self.snr_db.is_some_and(|s| !s.is_finite_value()) {
            return bad("snr_db must be finite or null");
        }
        for &x in &self.accel_positions_m {
            self.beam.layout.locate(x)?;
        }
        if self.accel_positions_m.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("accelerometer positions must be increasing");
        }
        Ok(())
    }
}

/// Exact zero-order-hold discretization of `q̈ + 2ζω q̇ + ω² q = u`,
/// state `[q, q̇]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdofDiscrete<T> {
    pub phi: [[T; 2]; 2],
    pub gamma: [T; 2],
    pub omega: T,
    pub zeta: T,
}

impl<T: Real> SdofDiscrete<T> {
    /// Requires `0 ≤ ζ < 1`.
    pub fn new(frequency_hz: T, zeta: T, fs_hz: T) -> Self {
        let w = T::two_pi() * frequency_hz;
        let dt = T::one() / fs_hz;
        let wd = w * (T::one() - zeta * zeta).sqrt();
        let e = (-zeta * w * dt).exp();
        let (s, c) = ((wd * dt).sin(), (wd * dt).cos());
        let r = zeta * w / wd;
        let phi = [
            [e * (c + r * s), e * s / wd],
            [-e * w * w * s / wd, e * (c - r * s)],
        ];
        let gamma = [(T::one() - phi[1][1] - T::lit(2.0) * zeta * w * phi[0][1]) / (w * w), phi[0][1]];
        Self {
            phi,
            gamma,
            omega: w,
            zeta,
        }
    }

    #[inline]
    pub fn step(&self, x: [T; 2], u: T) -> [T; 2] {
        [
            self.phi[0][0] * x[0] + self.phi[0][1] * x[1] + self.gamma[0] * u,
            self.phi[1][0] * x[0] + self.phi[1][1] * x[1] + self.gamma[1] * u,
        ]
    }

    /// `q̈` from the state equation.
    #[inline]
    pub fn acceleration(&self, x: [T; 2], u: T) -> T {
        u - self.omega * self.omega * x[0] - T::lit(2.0) * self.zeta * self.omega * x[1]
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput<T: Real> {
    /// Strain array in microstrain.
    pub strain: StrainRecord<T>,
    /// Accelerations in m/s², absent when no accelerometer positions are set.
    pub accel: Option<AccelRecord<T>>,
    pub truth: Vec<TrueMode<T>>,
    /// Modal displacements `q_i(t)`, modes × time.
    pub modal_coordinates: DMatrix<T>,
}

fn normal<T: Real>(rng: &mut ChaCha8Rng) -> T {
    let v: f64 = StandardNormal.sample(rng);
    T::lit(v)
}

fn add_noise<T: Real>(y: &mut DMatrix<T>, snr_db: T, rng: &mut ChaCha8Rng) {
    let n = T::from_count(y.ncols());
    let ratio = T::lit(10.0).powf(snr_db / T::lit(10.0));
    for mut row in y.row_iter_mut() {
        let mean = row.sum() / n;
        let var = row.iter().fold(T::zero(), |a, v| a + (*v - mean) * (*v - mean)) / n;
        let sd = (var / ratio).sqrt();
        for v in row.iter_mut() {
            *v += sd * normal::<T>(rng);
        }
    }
}

/// Run a scenario. Identical scenarios (seed included) give bit-identical
/// output.
///
/// Each modal coordinate starts after a burn-in of ten decay time constants
/// (at most 60 s) so the record is stationary from its first sample.
pub fn simulate<T: Real>(scenario: &SimScenario<T>) -> Result<SimOutput<T>, SimError> {
    scenario.validate()?;
    let truth = solve_modes(&scenario.beam)?;
    let nyquist = scenario.fs_hz / T::lit(2.0);
    if let Some(m) = truth.iter().find(|m| m.frequency_hz >= nyquist) {
        return Err(SimError::NyquistViolation {
            frequency_hz: m.frequency_hz.to_f64_lossy(),
            nyquist_hz: nyquist.to_f64_lossy(),
        });
    }

    let n = scenario.n_samples();
    let n_modes = truth.len();
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let input_sd = (scenario.excitation_intensity * scenario.fs_hz).sqrt();
    let mut q = DMatrix::zeros(n_modes, n);
    let mut qdd = DMatrix::zeros(n_modes, n);
    for (i, mode) in truth.iter().enumerate() {
        let sdof = SdofDiscrete::new(mode.frequency_hz, mode.damping_ratio, scenario.fs_hz);
        let burn_s = if mode.damping_ratio > T::zero() {
            (T::lit(10.0) / (mode.damping_ratio * sdof.omega)).min(T::lit(60.0))
        } else {
            T::lit(60.0)
        };
        let burn = (burn_s * scenario.fs_hz).ceil().to_usize().unwrap_or(0);
        let mut x = [T::zero(); 2];
        for _ in 0..burn {
            x = sdof.step(x, input_sd * normal::<T>(&mut rng));
        }
        for t in 0..n {
            let u = input_sd * normal::<T>(&mut rng);
            q[(i, t)] = x[0];
            qdd[(i, t)] = sdof.acceleration(x, u);
            x = sdof.step(x, u);
        }
    }

    let positions = scenario.channel_positions_m();
    let micro = T::lit(MICROSTRAIN);
    let strain_gain = DMatrix::from_fn(positions.len(), n_modes, |c, i| {
        truth[i].model.strain(positions[c]).expect("channel on beam") * micro
    });
    let mut strain = &strain_gain * &q;
    if let Some(snr) = scenario.snr_db {
        add_noise(&mut strain, snr, &mut rng);
    }
    let strain = StrainRecord::new(strain, scenario.fs_hz, positions)?;

    let accel = if scenario.accel_positions_m.is_empty() {
        None
    } else {
        let ap = &scenario.accel_positions_m;
        let gain = DMatrix::from_fn(ap.len(), n_modes, |c, i| {
            truth[i].model.displacement(ap[c]).expect("validated position")
        });
        let mut a = &gain * &qdd;
        if let Some(snr) = scenario.snr_db {
            add_noise(&mut a, snr, &mut rng);
        }
        Some(AccelRecord::new(a, scenario.fs_hz, ap.clone())?)
    };

    Ok(SimOutput {
        strain,
        accel,
        truth,
        modal_coordinates: q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(duration: f64, snr: Option<f64>, n_modes: usize) -> SimScenario<f64> {
        let mut s = SimScenario {
            duration_s: duration,
            snr_db: snr,
            ..SimScenario::default()
        };
        s.beam.n_modes = n_modes;
        s
    }

    #[test]
    fn zoh_matches_matrix_exponential() {
        let (f, z, fs) = (4.61, 0.02, 250.0);
        let d = SdofDiscrete::new(f, z, fs);
        let w = 2.0 * std::f64::consts::PI * f;
        // augmented [A B; 0 0] exponential gives Φ and Γ together
        let m = nalgebra::Matrix3::new(0.0, 1.0, 0.0, -w * w, -2.0 * z * w, 1.0, 0.0, 0.0, 0.0) / fs;
        let e = m.exp();
        assert!((e[(0, 0)] - d.phi[0][0]).abs() < 1e-12);
        assert!((e[(0, 1)] - d.phi[0][1]).abs() < 1e-12);
        assert!((e[(1, 0)] - d.phi[1][0]).abs() < 1e-12);
        assert!((e[(1, 1)] - d.phi[1][1]).abs() < 1e-12);
        assert!((e[(0, 2)] - d.gamma[0]).abs() < 1e-12);
        assert!((e[(1, 2)] - d.gamma[1]).abs() < 1e-12);
    }

    #[test]
    fn default_geometry() {
        let s = SimScenario::<f64>::default();
        assert_eq!(s.channel_positions_m().len(), 51);
        assert_eq!(s.n_samples(), 120_000);
        assert_eq!(s.fs_hz, 250.0);
    }

    #[test]
    fn single_mode_is_rank_one() {
        let out = simulate(&short(20.0, None, 1)).unwrap();
        let sv = out.strain.samples().clone().svd(false, false).singular_values;
        let mut v: Vec<f64> = sv.iter().copied().collect();
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!(v[1] / v[0] < 1e-10);
    }

    #[test]
    fn deterministic_for_seed() {
        let s = short(10.0, Some(5.0), 3);
        let a = simulate(&s).unwrap();
        let b = simulate(&s).unwrap();
        assert_eq!(a.strain.samples(), b.strain.samples());
        assert_eq!(a.accel.unwrap().samples(), b.accel.unwrap().samples());
        let mut s2 = s.clone();
        s2.seed = 1;
        assert_ne!(simulate(&s2).unwrap().strain.samples(), a.strain.samples());
    }

    #[test]
    fn snr_sets_noise_variance() {
        let clean = simulate(&short(60.0, None, 3)).unwrap();
        let noisy = simulate(&short(60.0, Some(0.0), 3)).unwrap();
        let c = 25;
        let sig = clean.strain.channel(c);
        let noise: Vec<f64> = noisy.strain.channel(c).iter().zip(&sig).map(|(a, b)| a - b).collect();
        let var = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
        };
        let r = var(&sig) / var(&noise);
        assert!((r - 1.0).abs() < 0.05, "ratio {r}");
    }

    #[test]
    fn variance_scales_with_intensity() {
        let mut s = short(400.0, None, 1);
        let a = simulate(&s).unwrap();
        s.excitation_intensity *= 2.0;
        let b = simulate(&s).unwrap();
        let var = |m: &DMatrix<f64>| m.row(0).iter().map(|x| x * x).sum::<f64>() / m.ncols() as f64;
        let r = var(&b.modal_coordinates) / var(&a.modal_coordinates);
        assert!((r - 2.0).abs() < 0.1, "ratio {r}");
        // stationary variance of the continuous oscillator, S / (4ζω³)
        let w = 2.0 * std::f64::consts::PI * a.truth[0].frequency_hz;
        let expected = 1.0e-3 / (4.0 * 0.02 * w.powi(3));
        let got = var(&a.modal_coordinates);
        assert!((got / expected - 1.0).abs() < 0.15, "variance {got} vs {expected}");
    }

    #[test]
    fn nyquist_and_validation() {
        let mut s = short(10.0, None, 3);
        s.fs_hz = 15.0;
        assert!(matches!(simulate(&s), Err(SimError::NyquistViolation { .. })));
        let mut s = short(10.0, None, 3);
        s.accel_positions_m = vec![60.0];
        assert!(simulate(&s).is_err());
        let mut s = short(10.0, None, 3);
        s.duration_s = 0.0;
        assert!(matches!(simulate(&s), Err(SimError::InvalidScenario(_))));
    }

    #[test]
    fn json_defaults_fill_missing_fields() {
        let s: SimScenario<f64> = serde_json::from_str(r#"{"seed": 7, "snr_db": null}"#).unwrap();
        assert_eq!(s.seed, 7);
        assert_eq!(s.snr_db, None);
        assert_eq!(s.fs_hz, 250.0);
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<SimScenario<f64>>(&text).unwrap(), s);
    }
}
