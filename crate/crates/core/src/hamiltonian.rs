//! Two-qubit He-H⁺ Hamiltonians on a fixed grid of bond lengths, and energy
//! estimation from eigenvector overlaps.
//!
//! The ququart path modes |1⟩..|4⟩ stand for the qubit states |00⟩, |01⟩,
//! |10⟩, |11⟩. In a Pauli label the first letter acts on the left qubit.
//!
//! The tabulated weights are in MJ mol⁻¹ and enter the operator as
//! `H = ½ Σ_j w_j σ_a ⊗ σ_b`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ansatz::{compile_meas, state_to_angles, MeasSettings, ParamVector, PrepSettings};
use crate::chip::{
    apply, estimate_overlap, prepared_state, proj_unitary, read_port, MeasurementModel, Unitary4,
};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, HermitianMatrix4, Spectrum4};
use crate::qudit::{StateVector, DIM, ZERO};
use crate::random::RandomStream;

/// MJ mol⁻¹ per Hartree.
pub const MJ_PER_MOL_PER_HARTREE: f64 = 2.6255;

/// Chemical accuracy in Hartree.
pub const CHEMICAL_ACCURACY_HARTREE: f64 = 0.0015;

/// Overall factor applied to the weighted Pauli sum.
pub const WEIGHT_SCALE: f64 = 0.5;

/// Bond length used to calibrate the systematic energy shift.
pub const CALIBRATION_DISTANCE: f64 = 0.9;

/// Tolerance when matching a requested bond length to the grid.
const DISTANCE_TOL: f64 = 1e-9;

/// Bond lengths (Å) with tabulated coefficients.
pub const DISTANCES: [f64; 9] = [0.4, 0.5, 0.7, 0.9, 1.1, 1.5, 2.0, 2.5, 3.0];

/// Column order of [`COEFFICIENTS`].
pub const LABELS: [&str; 9] = ["II", "IX", "IZ", "XI", "XX", "XZ", "ZI", "ZX", "ZZ"];

/// Pauli weights (MJ mol⁻¹), one row per entry of [`DISTANCES`].
#[rustfmt::skip]
pub const COEFFICIENTS: [[f64; 9]; 9] = [
    [-1.3119, -0.1396, -1.7568, -0.1396, 0.3352, 0.1396, -1.7568, 0.1396, 0.0969],
    [-2.3275, -0.157,  -1.5236, -0.157,  0.3309, 0.157,  -1.5236, 0.157,  0.1115],
    [-3.3893, -0.1968, -1.2073, -0.1968, 0.3052, 0.1968, -1.2073, 0.1968, 0.1626],
    [-3.8505, -0.2288, -1.0466, -0.2288, 0.2613, 0.2288, -1.0466, 0.2288, 0.2356],
    [-4.0539, -0.243,  -0.982,  -0.243,  0.2053, 0.243,  -0.982,  0.243,  0.3225],
    [-4.1594, -0.2086, -0.991,  -0.2086, 0.0948, 0.2086, -0.991,  0.2086, 0.4945],
    [-4.1347, -0.1119, -1.0605, -0.1119, 0.0212, 0.1119, -1.0605, 0.1119, 0.6342],
    [-4.0918, -0.0454, -1.1128, -0.0454, 0.0032, 0.0454, -1.1128, 0.0454, 0.701],
    [-4.0578, -0.0159, -1.1482, -0.0159, 0.0004, 0.0159, -1.1482, 0.0159, 0.7385],
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Z,
}

impl Pauli {
    fn matrix(self) -> [[f64; 2]; 2] {
        match self {
            Pauli::I => [[1.0, 0.0], [0.0, 1.0]],
            Pauli::X => [[0.0, 1.0], [1.0, 0.0]],
            Pauli::Z => [[1.0, 0.0], [0.0, -1.0]],
        }
    }

    /// Single-qubit eigenpairs `(eigenvalue, [⟨0|v⟩, ⟨1|v⟩])`.
    fn eigenbasis(self) -> [(f64, [f64; 2]); 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Pauli::I => [(1.0, [1.0, 0.0]), (1.0, [0.0, 1.0])],
            Pauli::Z => [(1.0, [1.0, 0.0]), (-1.0, [0.0, 1.0])],
            Pauli::X => [(1.0, [h, h]), (-1.0, [h, -h])],
        }
    }

    fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Z => 'Z',
        }
    }
}

/// A two-letter Pauli label; `.0[0]` acts on the left qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliString(pub [Pauli; 2]);

impl PauliString {
    pub fn is_identity(&self) -> bool {
        self.0 == [Pauli::I, Pauli::I]
    }

    /// σ_a ⊗ σ_b in the |00⟩, |01⟩, |10⟩, |11⟩ basis.
    pub fn matrix(&self) -> [[f64; DIM]; DIM] {
        let a = self.0[0].matrix();
        let b = self.0[1].matrix();
        std::array::from_fn(|i| std::array::from_fn(|j| a[i / 2][j / 2] * b[i % 2][j % 2]))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.0[0].letter(), self.0[1].letter())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letter = |c| match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Z' => Ok(Pauli::Z),
            _ => Err(Error::config(
                "pauli",
                format!("unknown letter `{c}` in `{s}`"),
            )),
        };
        let chars: Vec<char> = s.chars().collect();
        if chars.len() != 2 {
            return Err(Error::config(
                "pauli",
                format!("`{s}` is not a two-letter label"),
            ));
        }
        Ok(PauliString([letter(chars[0])?, letter(chars[1])?]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub string: PauliString,
    pub weight: f64,
}

/// The weighted Pauli sum at one bond length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliHamiltonian {
    pub r: f64,
    pub terms: Vec<PauliTerm>,
}

impl PauliHamiltonian {
    pub fn weight(&self, label: &str) -> Option<f64> {
        let s: PauliString = label.parse().ok()?;
        self.terms.iter().find(|t| t.string == s).map(|t| t.weight)
    }

    pub fn matrix(&self) -> HermitianMatrix4 {
        matrix_of(self)
    }
}

/// Position of `r` in [`DISTANCES`].
pub fn distance_index(r: f64) -> Result<usize> {
    DISTANCES
        .iter()
        .position(|d| (d - r).abs() < DISTANCE_TOL)
        .ok_or(Error::UnsupportedDistance(r))
}

pub fn hamiltonian_at(r: f64) -> Result<PauliHamiltonian> {
    let row = COEFFICIENTS[distance_index(r)?];
    let terms = LABELS
        .iter()
        .zip(row)
        .map(|(label, weight)| PauliTerm {
            string: label.parse().expect("table labels are valid"),
            weight,
        })
        .collect();
    Ok(PauliHamiltonian {
        r: DISTANCES[distance_index(r)?],
        terms,
    })
}

/// `½ Σ_j w_j σ_a ⊗ σ_b`.
pub fn matrix_of(h: &PauliHamiltonian) -> HermitianMatrix4 {
    let mut m = HermitianMatrix4::zeros();
    for term in &h.terms {
        let p = HermitianMatrix4::from_real(term.string.matrix());
        m.add_scaled(&p, WEIGHT_SCALE * term.weight);
    }
    m
}

/// Eigenpairs of a Pauli string in tensor-product order: the pair at index
/// `2a + b` is the product of the left qubit's `a`-th and the right qubit's
/// `b`-th single-qubit eigenvector.
pub fn pauli_spectrum(s: PauliString) -> Spectrum4 {
    let left = s.0[0].eigenbasis();
    let right = s.0[1].eigenbasis();
    let mut eigenvalues = [0.0; DIM];
    let mut eigenvectors = [StateVector([ZERO; DIM]); DIM];
    for (a, (la, va)) in left.iter().enumerate() {
        for (b, (lb, vb)) in right.iter().enumerate() {
            let k = 2 * a + b;
            eigenvalues[k] = la * lb;
            eigenvectors[k] = StateVector(std::array::from_fn(|i| {
                Complex64::new(va[i / 2] * vb[i % 2], 0.0)
            }));
        }
    }
    Spectrum4 {
        eigenvalues,
        eigenvectors,
    }
}

/// Lowest eigenpair of a Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroundTruth {
    pub energy: f64,
    pub state: StateVector,
}

pub fn ground_truth(h: &PauliHamiltonian) -> Result<GroundTruth> {
    let (energy, state) = hermitian_eig(&matrix_of(h))?.lowest();
    Ok(GroundTruth { energy, state })
}

pub fn mj_to_hartree(x: f64) -> f64 {
    x / MJ_PER_MOL_PER_HARTREE
}

pub fn hartree_to_mj(x: f64) -> f64 {
    x * MJ_PER_MOL_PER_HARTREE
}

pub fn within_chemical_accuracy(error_mj: f64) -> bool {
    mj_to_hartree(error_mj).abs() <= CHEMICAL_ACCURACY_HARTREE
}

#[derive(Clone, Copy, Debug)]
struct Projector {
    eigenvalue: f64,
    settings: MeasSettings,
    /// Noise-free transfer matrix of `settings`.
    unitary: Unitary4,
}

#[derive(Clone, Copy, Debug)]
struct TermPlan {
    weight: f64,
    projectors: [Projector; DIM],
}

/// Measurement settings for every eigenvector of every non-identity term,
/// compiled once per Hamiltonian.
#[derive(Clone, Debug)]
pub struct EnergyEstimator {
    constant: f64,
    terms: Vec<TermPlan>,
}

impl EnergyEstimator {
    pub fn new(h: &PauliHamiltonian) -> Self {
        let mut constant = 0.0;
        let mut terms = Vec::new();
        for term in &h.terms {
            if term.string.is_identity() {
                constant += term.weight;
                continue;
            }
            let spec = pauli_spectrum(term.string);
            let projectors = std::array::from_fn(|k| {
                let settings = compile_meas(&state_to_angles(&spec.eigenvectors[k]));
                Projector {
                    eigenvalue: spec.eigenvalues[k],
                    settings,
                    unitary: proj_unitary(&settings),
                }
            });
            terms.push(TermPlan {
                weight: term.weight,
                projectors,
            });
        }
        Self { constant, terms }
    }

    /// Number of overlap estimates per energy evaluation.
    pub fn overlaps_per_energy(&self) -> usize {
        self.terms.len() * DIM
    }

    /// `½ Σ_j w_j Σ_m m D̂(ψ(p), |m⟩)`. The four overlap estimates of a term
    /// are used as measured, without renormalization.
    pub fn estimate(
        &self,
        p: &ParamVector,
        model: &MeasurementModel,
        rng: &mut RandomStream,
    ) -> f64 {
        let prep = PrepSettings::from(*p);
        // Without phase noise every estimate sees the same circuits, so the
        // prepared state and the projectors are computed once.
        let ideal = (!model.noise.is_active()).then(|| prepared_state(&prep));
        let mut total = self.constant;
        for term in &self.terms {
            let mut expectation = 0.0;
            for proj in &term.projectors {
                let d = match &ideal {
                    Some(psi) => {
                        let probs = apply(&proj.unitary, psi).0.map(|a| a.norm_sqr());
                        read_port(&probs, model.shots, rng)
                    }
                    None => estimate_overlap(&prep, &proj.settings, model, rng),
                };
                expectation += proj.eigenvalue * d;
            }
            total += term.weight * expectation;
        }
        WEIGHT_SCALE * total
    }
}

/// One energy estimate of the state prepared by `p`.
pub fn measured_energy(
    p: &ParamVector,
    h: &PauliHamiltonian,
    model: &MeasurementModel,
    rng: &mut RandomStream,
) -> f64 {
    EnergyEstimator::new(h).estimate(p, model, rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    /// Measured minus exact energy of the compiled ground state, MJ mol⁻¹.
    pub epsilon_c: f64,
}

impl CalibrationResult {
    pub fn correct(&self, raw: f64) -> f64 {
        raw - self.epsilon_c
    }
}

/// Systematic shift from one measurement of the compiled exact ground state
/// at [`CALIBRATION_DISTANCE`].
pub fn calibrate_shift(
    model: &MeasurementModel,
    rng: &mut RandomStream,
) -> Result<CalibrationResult> {
    let h = hamiltonian_at(CALIBRATION_DISTANCE)?;
    let gt = ground_truth(&h)?;
    let p = crate::ansatz::params_for_state(&gt.state);
    let measured = measured_energy(&p, &h, model, rng);
    Ok(CalibrationResult {
        epsilon_c: measured - gt.energy,
    })
}

/// Writes the coefficient table as CSV with columns `R, II, ..., ZZ`.
pub fn write_coefficients_csv<W: Write>(out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["R"];
    header.extend(LABELS);
    w.write_record(&header)?;
    for (r, row) in DISTANCES.iter().zip(COEFFICIENTS.iter()) {
        let mut rec = vec![r.to_string()];
        rec.extend(row.iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
