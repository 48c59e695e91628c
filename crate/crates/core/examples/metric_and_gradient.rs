//! Parameter-shift gradient against finite differences, and the SPSA metric
//! estimate converging to the exact Fubini-Study metric.

use natural_vqe::linalg::max_abs_diff6;
use natural_vqe::optimize::smooth_qfim;
use natural_vqe::prelude::*;

fn main() -> Result<()> {
    let h = hamiltonian_at(1.5)?;
    let m = matrix_of(&h);
    let cost = |p: &ParamVector| m.expectation(&state_from_params(p));
    let p = ParamVector([0.4, 2.1, 1.3, 0.2, 5.0, 3.3]);

    let g = param_shift_gradient(cost, &p);
    for (j, gj) in g.iter().enumerate() {
        let fd = (cost(&p.shifted(j, 1e-6)) - cost(&p.shifted(j, -1e-6))) / 2e-6;
        println!("g[{j}] shift {gj:+.9}  fd {fd:+.9}");
    }

    let exact = exact_qfim(&p);
    let overlap_fn =
        |a: &ParamVector, b: &ParamVector| overlap(&state_from_params(a), &state_from_params(b));
    let mut rng = RandomStream::new(3);
    let mut est = None;
    for k in 0..4000 {
        let sample = spsa_qfim_sample(&p, 0.01, overlap_fn, &mut rng);
        est = Some(smooth_qfim(est.as_ref(), &sample, k));
        if [9, 99, 999, 3999].contains(&k) {
            let dev = max_abs_diff6(&est.unwrap().smoothed, &exact);
            println!("{:>5} samples: max |F̄ - F| = {dev:.4}", k + 1);
        }
    }
    Ok(())
}
