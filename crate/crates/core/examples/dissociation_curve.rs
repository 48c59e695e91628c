//! SPSA natural-gradient VQE at every tabulated bond length, ten seeds each,
//! corrected by the calibrated systematic shift.

use natural_vqe::experiments::{run_curve, ExperimentConfig};
use natural_vqe::hamiltonian::CHEMICAL_ACCURACY_HARTREE;

fn main() -> natural_vqe::Result<()> {
    let noisy = std::env::args().any(|a| a == "--shots");
    let cfg = ExperimentConfig {
        shots: noisy.then_some(4500),
        noise_sigma: noisy.then_some(0.01),
        ..Default::default()
    };
    let report = run_curve(&cfg)?;
    println!("epsilon_c = {:.6} MJ/mol", report.epsilon_c);
    println!(
        "{:>5} {:>9} {:>9} {:>9} {:>10} {:>8}",
        "R", "theory", "mean", "std", "|err| Ha", "fidelity"
    );
    for r in &report.rows {
        println!(
            "{:>5} {:>9.4} {:>9.4} {:>9.4} {:>10.5} {:>8.4}",
            r.r, r.e_theory, r.e_corrected, r.e_std, r.abs_err_hartree, r.fidelity_mean
        );
    }
    println!(
        "{}/{} within {CHEMICAL_ACCURACY_HARTREE} Ha",
        report.within_chemical_accuracy(),
        report.rows.len()
    );
    Ok(())
}
