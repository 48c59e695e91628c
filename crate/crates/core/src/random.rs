//! Seeded random streams.
//!
//! Every stochastic operation in the crate (perturbation directions, phase
//! noise, photon-count sampling, random target states) takes a
//! [`RandomStream`] explicitly. The stream is a ChaCha8 counter-mode
//! generator, so a `(seed, stream id)` pair produces the same draws on every
//! platform.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

/// A single-owner, seedable random number stream.
#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// An independent stream sharing the seed but using a different ChaCha
    /// stream id. Used to hand separate generators to concurrent runs.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn normal(&mut self, mean: f64, std_dev: f64) -> f64 {
        mean + std_dev * self.standard_normal()
    }

    /// ±1 with equal probability.
    pub fn rademacher(&mut self) -> f64 {
        if self.rng.random::<bool>() {
            1.0
        } else {
            -1.0
        }
    }

    /// Binomial draw; `p` is clamped into `[0, 1]`.
    pub fn binomial(&mut self, trials: u64, p: f64) -> u64 {
        if trials == 0 {
            return 0;
        }
        let p = p.clamp(0.0, 1.0);
        if p == 0.0 {
            return 0;
        }
        if p == 1.0 {
            return trials;
        }
        Binomial::new(trials, p)
            .expect("probability clamped into [0, 1]")
            .sample(&mut self.rng)
    }

    /// Multinomial draw of `trials` events over the categories in `probs`,
    /// realized as a chain of conditional binomials.
    pub fn multinomial<const N: usize>(&mut self, trials: u64, probs: &[f64; N]) -> [u64; N] {
        let mut counts = [0u64; N];
        let mut remaining = trials;
        let mut mass_left: f64 = probs.iter().map(|p| p.max(0.0)).sum();
        for k in 0..N {
            if remaining == 0 {
                break;
            }
            if k == N - 1 {
                counts[k] = remaining;
                break;
            }
            let pk = probs[k].max(0.0);
            let conditional = if mass_left > 0.0 { pk / mass_left } else { 0.0 };
            let drawn = self.binomial(remaining, conditional);
            counts[k] = drawn;
            remaining -= drawn;
            mass_left -= pk;
        }
        counts
    }
}
