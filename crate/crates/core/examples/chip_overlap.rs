//! Overlap estimates read from output port 2: exact, shot-limited, and with
//! phase noise on every shifter.

use natural_vqe::prelude::*;

fn stats(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn main() {
    let prep = PrepSettings::from(ParamVector::initial());
    let meas = compile_meas(&state_to_angles(&StateVector::basis(2)));

    let exact = estimate_overlap(
        &prep,
        &meas,
        &MeasurementModel::exact(),
        &mut RandomStream::new(0),
    );
    println!("exact D = {exact:.6}");

    for (label, model) in [
        (
            "4500 shots",
            MeasurementModel::new(ShotPolicy::sampled(4500), NoiseModel::off()),
        ),
        (
            "4500 shots, σ = 0.01",
            MeasurementModel::new(ShotPolicy::sampled(4500), NoiseModel::gaussian(0.01)),
        ),
        (
            "exact, σ = 0.05",
            MeasurementModel::new(ShotPolicy::Exact, NoiseModel::gaussian(0.05)),
        ),
    ] {
        let xs: Vec<f64> = (0..500)
            .map(|seed| estimate_overlap(&prep, &meas, &model, &mut RandomStream::new(seed)))
            .collect();
        let (mean, std) = stats(&xs);
        println!("{label:<22} mean {mean:.5} std {std:.5}");
    }
    println!(
        "binomial prediction std {:.5}",
        (0.25f64 * 0.75 / 4500.0).sqrt()
    );
}
