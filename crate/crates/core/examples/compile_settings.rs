//! Compile a target state into the twelve phase-shifter values and check on
//! the simulated interferometer that the photon exits at port 2.

use natural_vqe::chip::{port_probabilities, prepared_state, READOUT_PORT};
use natural_vqe::prelude::*;

fn main() -> Result<()> {
    let target = StateVector::from_real([0.1, 0.7, -0.5, 0.5]).normalize()?;
    let angles = state_to_angles(&target);
    let prep = compile_prep(&angles);
    let meas = compile_meas(&angles);

    println!(
        "target    {:?}",
        target.0.map(|a| (a.re * 1e4).round() / 1e4)
    );
    println!("PS1..PS6  {:?}", prep.0.map(|x| (x * 1e6).round() / 1e6));
    println!("PS7..PS12 {:?}", meas.0.map(|x| (x * 1e6).round() / 1e6));

    let prepared = prepared_state(&prep);
    println!(
        "overlap(prepared, target) = {:.12}",
        overlap(&prepared, &target)
    );

    let probs = port_probabilities(&prep, &meas, &NoiseModel::off(), &mut RandomStream::new(0));
    println!(
        "port probabilities {probs:.6?}, port 2 = {:.12}",
        probs[READOUT_PORT]
    );

    let uniform = compile_prep(&state_to_angles(&StateVector::uniform()));
    println!("uniform state compiles to {:?}", uniform.0);
    Ok(())
}
