//! Property-based invariants across the public API.

use std::f64::consts::TAU;

use natural_vqe::ansatz::{
    angles_to_state, compile_meas, compile_prep, state_from_params, state_to_angles, Angles,
};
use natural_vqe::chip::{port_probabilities, prepared_state, NoiseModel, READOUT_PORT};
use natural_vqe::hamiltonian::{hamiltonian_at, matrix_of, measured_energy, DISTANCES};
use natural_vqe::linalg::{
    frac_power_psd, hermitian_eig, symmetric_eig, HermitianMatrix4, Matrix6,
};
use natural_vqe::optimize::{
    detect_convergence, exact_qfim, smooth_qfim, step, OptimizerConfig, OptimizerKind,
};
use natural_vqe::prelude::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn phases() -> impl Strategy<Value = [f64; 6]> {
    prop::array::uniform6(0.0..TAU)
}

fn amplitudes() -> impl Strategy<Value = StateVector> {
    prop::array::uniform8(-1.0f64..1.0)
        .prop_filter("non-zero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|v| {
            StateVector(std::array::from_fn(|k| {
                Complex64::new(v[2 * k], v[2 * k + 1])
            }))
            .normalize()
            .unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn states_from_params_are_normalized(p in phases()) {
        let s = state_from_params(&ParamVector(p));
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn compile_roundtrip_preserves_the_ray(s in amplitudes()) {
        let back = angles_to_state(&state_to_angles(&s));
        prop_assert!((overlap(&s, &back) - 1.0).abs() < 1e-10);
        let prepared = prepared_state(&compile_prep(&state_to_angles(&s)));
        prop_assert!((overlap(&s, &prepared) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mesh_reads_out_the_overlap(a in amplitudes(), b in amplitudes()) {
        let prep = compile_prep(&state_to_angles(&a));
        let meas = compile_meas(&state_to_angles(&b));
        let probs = port_probabilities(&prep, &meas, &NoiseModel::off(), &mut RandomStream::new(0));
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!((probs[READOUT_PORT] - overlap(&a, &b)).abs() < 1e-10);
    }

    #[test]
    fn meas_settings_route_any_angles(theta in prop::array::uniform3(-3.0f64..3.0), phi in prop::array::uniform4(-6.0f64..6.0)) {
        let a = Angles::new(theta, phi);
        let s = angles_to_state(&a);
        let prep = compile_prep(&a);
        let probs = port_probabilities(&prep, &compile_meas(&a), &NoiseModel::off(), &mut RandomStream::new(0));
        prop_assert!((probs[READOUT_PORT] - 1.0).abs() < 1e-10, "{:?}", s);
    }

    #[test]
    fn measured_energy_equals_expectation(p in phases(), idx in 0usize..9) {
        let h = hamiltonian_at(DISTANCES[idx]).unwrap();
        let p = ParamVector(p);
        let e = measured_energy(&p, &h, &MeasurementModel::exact(), &mut RandomStream::new(0));
        let m = matrix_of(&h).expectation(&state_from_params(&p));
        prop_assert!((e - m).abs() < 1e-9);
    }

    #[test]
    fn energy_is_bounded_by_the_spectrum(p in phases(), idx in 0usize..9) {
        let h = hamiltonian_at(DISTANCES[idx]).unwrap();
        let spec = hermitian_eig(&matrix_of(&h)).unwrap();
        let e = matrix_of(&h).expectation(&state_from_params(&ParamVector(p)));
        prop_assert!(e >= spec.eigenvalues[0] - 1e-12 && e <= spec.eigenvalues[3] + 1e-12);
    }

    #[test]
    fn qfim_is_psd(p in phases()) {
        let (vals, _) = symmetric_eig(&exact_qfim(&ParamVector(p))).unwrap();
        prop_assert!(vals[0] >= -1e-10);
    }

    #[test]
    fn hermitian_eig_reconstructs(entries in prop::array::uniform16(-2.0f64..2.0)) {
        let mut m = HermitianMatrix4::zeros();
        for i in 0..4 {
            for j in i..4 {
                let z = if i == j {
                    Complex64::new(entries[4 * i + j], 0.0)
                } else {
                    Complex64::new(entries[4 * i + j], entries[4 * j + i])
                };
                m.0[i][j] = z;
                m.0[j][i] = z.conj();
            }
        }
        let spec = hermitian_eig(&m).unwrap();
        prop_assert!(spec.reconstruct().max_abs_diff(&m) < 1e-10);
        prop_assert!(spec.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn half_inverse_squares_to_the_inverse(diag in prop::array::uniform6(0.5f64..5.0), seed in any::<u64>()) {
        // Q D Qᵀ with a random orthogonal Q from symmetric_eig of a random matrix.
        let mut rng = RandomStream::new(seed);
        let r: Matrix6 = std::array::from_fn(|_| std::array::from_fn(|_| rng.standard_normal()));
        let sym: Matrix6 = std::array::from_fn(|i| std::array::from_fn(|j| r[i][j] + r[j][i]));
        let (_, q) = symmetric_eig(&sym).unwrap();
        let m: Matrix6 = std::array::from_fn(|i| std::array::from_fn(|j| (0..6).map(|k| q[i][k] * diag[k] * q[j][k]).sum()));
        let half = frac_power_psd(&m, -0.5, 1e-3).unwrap();
        let sq: Matrix6 = std::array::from_fn(|i| std::array::from_fn(|j| (0..6).map(|k| half[i][k] * half[k][j]).sum()));
        let prod: Matrix6 = std::array::from_fn(|i| std::array::from_fn(|j| (0..6).map(|k| sq[i][k] * m[k][j]).sum()));
        for (i, row) in prod.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                let e = if i == j { 1.0 } else { 0.0 };
                prop_assert!((x - e).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn running_mean_of_samples(samples in prop::collection::vec(prop::array::uniform6(-1.0f64..1.0), 1..20)) {
        let mats: Vec<Matrix6> = samples
            .iter()
            .map(|d| std::array::from_fn(|i| std::array::from_fn(|j| d[i] * d[j])))
            .collect();
        let mut est = smooth_qfim(None, &mats[0], 0);
        for (k, m) in mats.iter().enumerate().skip(1) {
            est = smooth_qfim(Some(&est), m, k);
        }
        for i in 0..6 {
            for j in 0..6 {
                let mean = mats.iter().map(|m| m[i][j]).sum::<f64>() / mats.len() as f64;
                prop_assert!((est.smoothed[i][j] - mean).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_gradient_never_moves(p in phases()) {
        let p = ParamVector(p);
        let f = exact_qfim(&p);
        for kind in OptimizerKind::ALL {
            let next = step(&p, &[0.0; 6], Some(&f), &OptimizerConfig::new(kind)).unwrap();
            prop_assert_eq!(next, p);
        }
    }

    #[test]
    fn constant_windows_converge_at_window_end(len in 5usize..30, value in -5.0f64..5.0) {
        let energies = vec![value; len];
        prop_assert_eq!(detect_convergence(&energies, 1e-2, 5), Some(4));
    }
}
