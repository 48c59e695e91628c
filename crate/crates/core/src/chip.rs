//! Four-mode interferometer model of the preparation and measurement
//! circuits.
//!
//! Each Mach-Zehnder interferometer is two balanced couplers
//! `B = [[1, i], [i, 1]]/√2` around an internal phase on its first arm:
//! `T(φ) = B · diag(e^{iφ}, 1) · B`. The preparation mesh is a binary tree fed
//! at mode 2:
//!
//! ```text
//! U_prep = D(PS4, PS5, PS6) · T_{1,2}(PS2) · T_{3,4}(PS3) · T_{2,3}(PS1)
//! U_proj = T_{2,3}(PS12) · T_{1,2}(PS10) · T_{3,4}(PS11) · D(PS7, PS8, PS9)
//! ```
//!
//! where `D` applies external phases to modes 1..3. With this convention the
//! compiled settings reproduce the ansatz amplitudes exactly (up to a global
//! phase), so the per-MZI calibration offsets are all zero.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ansatz::{MeasSettings, PrepSettings};
use crate::qudit::{StateVector, DIM, ZERO};
use crate::random::RandomStream;

/// Photon coincidences per overlap estimate in sampled mode (about one
/// second at a 4.5 kHz coincidence rate).
pub const DEFAULT_SHOTS: u64 = 4500;

/// Default per-shifter phase noise (radians) for noisy experiments.
pub const DEFAULT_PHASE_SIGMA: f64 = 0.01;

/// Offsets added to the internal phase of the PS1, PS2 and PS3 (and mirrored
/// PS12, PS10, PS11) interferometers so that compiled settings reproduce the
/// ansatz. Zero for the coupler convention above.
pub const MZI_PHASE_OFFSETS: [f64; 3] = [0.0, 0.0, 0.0];

/// Output port read out as the overlap (port 2, zero-based index 1).
pub const READOUT_PORT: usize = 1;
/// Input mode of the heralded photon (mode 2).
pub const INPUT_MODE: usize = 1;

pub type Unitary4 = [[Complex64; DIM]; DIM];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Standard deviation of the Gaussian error added to every one of the 12
    /// shifter values, resampled for each overlap estimate.
    pub phase_sigma: f64,
    pub enabled: bool,
}

impl NoiseModel {
    pub fn off() -> Self {
        Self {
            phase_sigma: 0.0,
            enabled: false,
        }
    }

    pub fn gaussian(phase_sigma: f64) -> Self {
        assert!(phase_sigma >= 0.0, "phase sigma must be non-negative");
        Self {
            phase_sigma,
            enabled: phase_sigma > 0.0,
        }
    }

    pub fn is_active(&self) -> bool {
        self.enabled && self.phase_sigma > 0.0
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::off()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ShotPolicy {
    /// Return the port probability itself.
    #[default]
    Exact,
    /// Sample `shots` photons over the four ports and return the port-2 fraction.
    Sampled { shots: u64 },
}

impl ShotPolicy {
    pub fn sampled(shots: u64) -> Self {
        assert!(shots >= 1, "at least one shot is required");
        ShotPolicy::Sampled { shots }
    }
}

/// Noise and shot settings used for every overlap estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasurementModel {
    pub shots: ShotPolicy,
    pub noise: NoiseModel,
}

impl MeasurementModel {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn new(shots: ShotPolicy, noise: NoiseModel) -> Self {
        Self { shots, noise }
    }

    pub fn is_exact(&self) -> bool {
        self.shots == ShotPolicy::Exact && !self.noise.is_active()
    }
}

fn identity() -> Unitary4 {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                ZERO
            }
        })
    })
}

fn matmul(a: &Unitary4, b: &Unitary4) -> Unitary4 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..DIM).map(|k| a[i][k] * b[k][j]).sum()))
}

/// 2×2 transfer matrix of one MZI.
pub fn mzi(phase: f64) -> [[Complex64; 2]; 2] {
    let e = Complex64::from_polar(1.0, phase);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::i();
    [
        [(e - one) * 0.5, i * (e + one) * 0.5],
        [i * (e + one) * 0.5, (one - e) * 0.5],
    ]
}

/// An MZI on adjacent modes `(m, m + 1)` embedded in the 4-mode identity.
fn mzi_on(m: usize, phase: f64) -> Unitary4 {
    let t = mzi(phase);
    let mut u = identity();
    u[m][m] = t[0][0];
    u[m][m + 1] = t[0][1];
    u[m + 1][m] = t[1][0];
    u[m + 1][m + 1] = t[1][1];
    u
}

fn external_phases(phases: [f64; 3]) -> Unitary4 {
    let mut u = identity();
    for (k, ph) in phases.iter().enumerate() {
        u[k][k] = Complex64::from_polar(1.0, *ph);
    }
    u
}

/// Transfer matrix of the preparation circuit.
pub fn prep_unitary(s: &PrepSettings) -> Unitary4 {
    let [ps1, ps2, ps3, ps4, ps5, ps6] = s.0;
    let split = mzi_on(1, ps1 + MZI_PHASE_OFFSETS[0]);
    let upper = mzi_on(0, ps2 + MZI_PHASE_OFFSETS[1]);
    let lower = mzi_on(2, ps3 + MZI_PHASE_OFFSETS[2]);
    let phases = external_phases([ps4, ps5, ps6]);
    matmul(&phases, &matmul(&upper, &matmul(&lower, &split)))
}

/// Transfer matrix of the measurement circuit.
pub fn proj_unitary(s: &MeasSettings) -> Unitary4 {
    let [ps7, ps8, ps9, ps10, ps11, ps12] = s.0;
    let phases = external_phases([ps7, ps8, ps9]);
    let upper = mzi_on(0, ps10 + MZI_PHASE_OFFSETS[1]);
    let lower = mzi_on(2, ps11 + MZI_PHASE_OFFSETS[2]);
    let merge = mzi_on(1, ps12 + MZI_PHASE_OFFSETS[0]);
    matmul(&merge, &matmul(&upper, &matmul(&lower, &phases)))
}

pub fn apply(u: &Unitary4, v: &StateVector) -> StateVector {
    StateVector(std::array::from_fn(|i| {
        (0..DIM).map(|j| u[i][j] * v[j]).sum()
    }))
}

/// Column `INPUT_MODE` of the preparation circuit: the prepared state.
pub fn prepared_state(s: &PrepSettings) -> StateVector {
    let u = prep_unitary(s);
    StateVector(std::array::from_fn(|i| u[i][INPUT_MODE]))
}

/// max |U†U − I|.
pub fn unitarity_error(u: &Unitary4) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..DIM {
        for j in 0..DIM {
            let x: Complex64 = (0..DIM).map(|k| u[k][i].conj() * u[k][j]).sum();
            let expect = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((x - Complex64::new(expect, 0.0)).norm());
        }
    }
    worst
}

fn perturb(values: [f64; 6], noise: &NoiseModel, rng: &mut RandomStream) -> [f64; 6] {
    if !noise.is_active() {
        return values;
    }
    values.map(|v| v + rng.normal(0.0, noise.phase_sigma))
}

/// Output-port probabilities for a photon injected at mode 2, after the
/// (optionally noisy) preparation and measurement circuits.
pub fn port_probabilities(
    prep: &PrepSettings,
    meas: &MeasSettings,
    noise: &NoiseModel,
    rng: &mut RandomStream,
) -> [f64; DIM] {
    let prep = PrepSettings(perturb(prep.0, noise, rng));
    let meas = MeasSettings(perturb(meas.0, noise, rng));
    let psi = prepared_state(&prep);
    let out = apply(&proj_unitary(&meas), &psi);
    out.0.map(|a| a.norm_sqr())
}

/// Overlap estimate D̂ read from port 2: the probability itself in exact
/// mode, the fraction of `shots` sampled photons otherwise.
pub fn estimate_overlap(
    prep: &PrepSettings,
    meas: &MeasSettings,
    model: &MeasurementModel,
    rng: &mut RandomStream,
) -> f64 {
    let probs = port_probabilities(prep, meas, &model.noise, rng);
    read_port(&probs, model.shots, rng)
}

/// Port-2 reading for the given output distribution.
pub fn read_port(probs: &[f64; DIM], shots: ShotPolicy, rng: &mut RandomStream) -> f64 {
    match shots {
        ShotPolicy::Exact => probs[READOUT_PORT],
        ShotPolicy::Sampled { shots } => {
            let counts = rng.multinomial(shots, probs);
            counts[READOUT_PORT] as f64 / shots as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{
        angles_to_state, compile_meas, compile_prep, state_to_angles, Angles, ParamVector,
    };
    use crate::qudit::{haar_random_state, overlap};
    use std::f64::consts::{PI, TAU};

    fn random_angles(rng: &mut RandomStream) -> Angles {
        Angles::new(
            std::array::from_fn(|_| rng.uniform() * PI),
            std::array::from_fn(|_| rng.uniform() * TAU),
        )
    }

    fn meas_for(s: &StateVector) -> MeasSettings {
        compile_meas(&state_to_angles(s))
    }

    #[test]
    fn mzi_is_unitary_and_balanced_at_half_pi() {
        let t = mzi(PI / 2.0);
        assert!((t[0][0].norm_sqr() - 0.5).abs() < 1e-15);
        let t = mzi(0.0);
        assert!(t[0][0].norm() < 1e-15 && (t[0][1].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn calibration_offsets_are_frozen_at_zero() {
        assert_eq!(MZI_PHASE_OFFSETS, [0.0; 3]);
        // The frozen offsets reproduce the ansatz on the basis states.
        for k in 1..=4 {
            let target = StateVector::basis(k);
            let prepared = prepared_state(&compile_prep(&state_to_angles(&target)));
            assert!(
                (overlap(&prepared, &target) - 1.0).abs() < 1e-12,
                "mode {k}"
            );
        }
    }

    #[test]
    fn initial_settings_prepare_uniform_state() {
        let s = prepared_state(&ParamVector::initial().into());
        assert!((overlap(&s, &StateVector::uniform()) - 1.0).abs() < 1e-12);
        for a in s.0 {
            assert!((a.norm() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn meshes_are_unitary() {
        let mut rng = RandomStream::new(1);
        for _ in 0..100 {
            let prep = PrepSettings(std::array::from_fn(|_| rng.uniform() * TAU));
            let meas = MeasSettings(std::array::from_fn(|_| rng.uniform() * TAU));
            assert!(unitarity_error(&prep_unitary(&prep)) < 1e-12);
            assert!(unitarity_error(&proj_unitary(&meas)) < 1e-12);
        }
    }

    #[test]
    fn prep_matches_ansatz_and_proj_routes_to_port_two() {
        let mut rng = RandomStream::new(2);
        for _ in 0..100 {
            let a = random_angles(&mut rng);
            let target = angles_to_state(&a);
            let prepared = prepared_state(&compile_prep(&a));
            assert!((overlap(&prepared, &target) - 1.0).abs() < 1e-10);

            let u = proj_unitary(&compile_meas(&a));
            let routed = apply(&u, &target);
            assert!((routed[READOUT_PORT].norm_sqr() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn port_two_probability_is_the_overlap() {
        let mut rng = RandomStream::new(3);
        let noise = NoiseModel::off();
        for _ in 0..100 {
            let s = haar_random_state(&mut rng);
            let m = haar_random_state(&mut rng);
            let prep = compile_prep(&state_to_angles(&s));
            let probs = port_probabilities(&prep, &meas_for(&m), &noise, &mut rng);
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((probs[READOUT_PORT] - overlap(&s, &m)).abs() < 1e-10);
        }
    }

    #[test]
    fn identical_and_orthogonal_targets() {
        let mut rng = RandomStream::new(4);
        let noise = NoiseModel::off();
        let u = StateVector::uniform();
        let prep = compile_prep(&state_to_angles(&u));
        let p = port_probabilities(&prep, &meas_for(&u), &noise, &mut rng);
        assert!((p[READOUT_PORT] - 1.0).abs() < 1e-12);
        let orth = StateVector::from_real([0.5, -0.5, 0.5, -0.5]);
        let p = port_probabilities(&prep, &meas_for(&orth), &noise, &mut rng);
        assert!(p[READOUT_PORT].abs() < 1e-12);
    }

    #[test]
    fn noisy_identical_targets_stay_close_to_one() {
        let noise = NoiseModel::gaussian(0.01);
        let mut targets = RandomStream::new(5);
        let mut total = 0.0;
        let n = 1000;
        for seed in 0..n {
            let s = haar_random_state(&mut targets);
            let prep = compile_prep(&state_to_angles(&s));
            let mut rng = RandomStream::new(seed);
            let p = port_probabilities(&prep, &meas_for(&s), &noise, &mut rng);
            assert!(p[READOUT_PORT] <= 1.0 + 1e-12);
            total += p[READOUT_PORT];
        }
        let mean = total / n as f64;
        assert!((0.99..=1.0).contains(&mean), "mean p2 = {mean}");
    }

    #[test]
    fn exact_estimate_of_uniform_against_mode_two() {
        let mut rng = RandomStream::new(6);
        let prep = ParamVector::initial().into();
        let d = estimate_overlap(
            &prep,
            &meas_for(&StateVector::basis(2)),
            &MeasurementModel::exact(),
            &mut rng,
        );
        assert!((d - 0.25).abs() < 1e-12);
    }

    #[test]
    fn single_shot_estimates_are_binary() {
        let prep = ParamVector::initial().into();
        let meas = meas_for(&StateVector::basis(2));
        let model = MeasurementModel::new(ShotPolicy::sampled(1), NoiseModel::off());
        let mut rng = RandomStream::new(7);
        for _ in 0..200 {
            let d = estimate_overlap(&prep, &meas, &model, &mut rng);
            assert!(d == 0.0 || d == 1.0);
        }
    }

    #[test]
    fn sampled_estimates_concentrate() {
        let prep = ParamVector::initial().into();
        let meas = meas_for(&StateVector::basis(2));
        let model = MeasurementModel::new(ShotPolicy::sampled(4500), NoiseModel::off());
        let bound = 5.0 * (0.25f64 * 0.75 / 4500.0).sqrt();
        let inside = (0..1000)
            .filter(|&seed| {
                let mut rng = RandomStream::new(seed);
                (estimate_overlap(&prep, &meas, &model, &mut rng) - 0.25).abs() <= bound
            })
            .count();
        assert!(inside >= 990, "{inside}/1000 within 5σ");
    }

    #[test]
    fn sampling_is_unbiased() {
        let mut rng = RandomStream::new(8);
        let model = MeasurementModel::new(ShotPolicy::sampled(100), NoiseModel::off());
        for _ in 0..3 {
            let s = haar_random_state(&mut rng);
            let m = haar_random_state(&mut rng);
            let prep = compile_prep(&state_to_angles(&s));
            let meas = meas_for(&m);
            let d = overlap(&s, &m);
            let n = 10_000;
            let mean: f64 = (0..n)
                .map(|_| estimate_overlap(&prep, &meas, &model, &mut rng))
                .sum::<f64>()
                / n as f64;
            let se = (d * (1.0 - d) / (100.0 * n as f64)).sqrt();
            assert!((mean - d).abs() <= 3.0 * se + 1e-12, "mean {mean} vs {d}");
        }
    }

    #[test]
    fn exact_mode_is_bit_reproducible() {
        let mut a = RandomStream::new(1);
        let mut b = RandomStream::new(2);
        let prep = PrepSettings([0.3, 1.1, 2.0, 0.4, 5.0, 1.0]);
        let meas = MeasSettings([1.3, 0.1, 2.2, 3.4, 0.5, 0.9]);
        let x = estimate_overlap(&prep, &meas, &MeasurementModel::exact(), &mut a);
        let y = estimate_overlap(&prep, &meas, &MeasurementModel::exact(), &mut b);
        assert_eq!(x.to_bits(), y.to_bits());
    }
}
