//! Fidelity of 1000 prepare-and-measure experiments on random target states
//! with 0.01 rad phase noise, printed as a text histogram.

use natural_vqe::experiments::{run_characterize, ExperimentConfig};

fn main() -> natural_vqe::Result<()> {
    let cfg = ExperimentConfig {
        hist_min: Some(0.999),
        bins: Some(10),
        ..Default::default()
    };
    let report = run_characterize(&cfg)?;
    let peak = report
        .histogram
        .iter()
        .map(|b| b.count)
        .max()
        .unwrap_or(1)
        .max(1);
    for b in &report.histogram {
        println!(
            "{:.4}-{:.4} {:>4} {}",
            b.lo,
            b.hi,
            b.count,
            "#".repeat(60 * b.count / peak)
        );
    }
    let s = &report.stats;
    println!(
        "mean {:.5} std {:.5} min {:.5} (below range: {})",
        s.mean, s.std, s.min, s.underflow
    );
    Ok(())
}
