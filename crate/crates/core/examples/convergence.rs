//! Vanilla gradient descent, exact-metric natural gradient and SPSA natural
//! gradient from the uniform state at R = 0.9 Å.
//!
//! Pass `--shots` to use sampled photon counts with phase noise instead of
//! exact overlaps.

use natural_vqe::experiments::{run_converge, ExperimentConfig};
use natural_vqe::prelude::*;

fn main() -> Result<()> {
    let noisy = std::env::args().any(|a| a == "--shots");
    let cfg = ExperimentConfig {
        shots: noisy.then_some(4500),
        noise_sigma: noisy.then_some(0.01),
        ..Default::default()
    };
    let report = run_converge(&cfg)?;
    println!("ground energy {:.4} MJ/mol", report.summary.ground_energy);
    for t in &report.traces {
        println!(
            "{:<9} seed {:<2} converged at {:>4}  final energy {:>8}  fidelity {:>7}",
            t.kind.name(),
            t.seed,
            t.converged_at.map_or("-".into(), |c| c.to_string()),
            t.final_energy.map_or("-".into(), |e| format!("{e:.4}")),
            t.final_fidelity.map_or("-".into(), |f| format!("{f:.4}")),
        );
    }
    for kind in OptimizerKind::ALL {
        if let Some(m) = report.mean_converged_at(kind) {
            println!("{kind}: mean steps {m:.1}");
        }
    }
    Ok(())
}
