//! Variational ground-state search for the He-H⁺ cation on a simulated
//! four-mode photonic chip.
//!
//! A single photon path-encoded over four waveguides carries a ququart
//! (equivalently two qubits). Six phase shifters prepare the trial state, six
//! more project it onto a chosen state, and the photon count at output port 2
//! estimates the overlap. Energies of the two-qubit Pauli Hamiltonian are
//! assembled from those overlaps and minimized with one of three optimizers:
//! plain gradient descent, quantum natural gradient with the exact metric, and
//! quantum natural gradient with an SPSA estimate of the metric.
//!
//! ```
//! use natural_vqe::prelude::*;
//!
//! let h = hamiltonian_at(0.9)?;
//! let cfg = OptimizerConfig::new(OptimizerKind::Rqng);
//! let trace = run_vqe(&h, &ParamVector::initial(), &cfg, &MeasurementModel::exact())?;
//! assert!(trace.converged_at.is_some());
//! # Ok::<(), natural_vqe::Error>(())
//! ```

// Fixed-size matrix code reads best with explicit indices; negated
// comparisons double as NaN checks.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod ansatz;
pub mod chip;
pub mod error;
pub mod experiments;
pub mod hamiltonian;
pub mod linalg;
pub mod optimize;
pub mod qudit;
pub mod random;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::ansatz::{
        compile_meas, compile_prep, params_for_state, state_from_params, state_to_angles, Angles,
        Direction, MeasSettings, ParamVector, PrepSettings,
    };
    pub use crate::chip::{estimate_overlap, MeasurementModel, NoiseModel, ShotPolicy};
    pub use crate::error::{Error, Result};
    pub use crate::hamiltonian::{
        calibrate_shift, ground_truth, hamiltonian_at, matrix_of, measured_energy, mj_to_hartree,
        EnergyEstimator, PauliHamiltonian, DISTANCES,
    };
    pub use crate::optimize::{
        exact_qfim, param_shift_gradient, run_vqe, spsa_qfim_sample, OptimizerConfig,
        OptimizerKind, RunTrace,
    };
    pub use crate::qudit::{fidelity, overlap, StateVector};
    pub use crate::random::RandomStream;
}
