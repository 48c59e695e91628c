//! Four-level (ququart) state vectors and their overlaps.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::random::RandomStream;

/// Dimension of the path-encoded ququart.
pub const DIM: usize = 4;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Four complex amplitudes over the path modes |1⟩..|4⟩.
///
/// Mode |k⟩ is stored at index `k - 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateVector(pub [Complex64; DIM]);

impl StateVector {
    pub fn new(amp: [Complex64; DIM]) -> Self {
        Self(amp)
    }

    pub fn from_real(amp: [f64; DIM]) -> Self {
        Self(amp.map(|x| Complex64::new(x, 0.0)))
    }

    /// Computational basis state |k⟩ for `k` in `1..=4`.
    pub fn basis(k: usize) -> Self {
        assert!((1..=DIM).contains(&k), "basis index {k} outside 1..=4");
        let mut amp = [ZERO; DIM];
        amp[k - 1] = Complex64::new(1.0, 0.0);
        Self(amp)
    }

    /// The uniform superposition [0.5, 0.5, 0.5, 0.5].
    pub fn uniform() -> Self {
        Self::from_real([0.5; DIM])
    }

    pub fn amplitudes(&self) -> &[Complex64; DIM] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Rescale to unit norm. Fails on the zero vector.
    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NotNormalized { norm: n });
        }
        Ok(Self(self.0.map(|a| a / n)))
    }

    /// Checks `| ‖ψ‖ - 1 | <= tol`.
    pub fn ensure_normalized(&self, tol: f64) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > tol || !n.is_finite() {
            return Err(Error::NotNormalized { norm: n });
        }
        Ok(())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self(self.0.map(|a| a * factor))
    }
}

impl Index<usize> for StateVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for StateVector {
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.0[i]
    }
}

/// ⟨a|b⟩, conjugate-linear in `a`.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Complex64 {
    a.0.iter().zip(b.0.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// |⟨a|b⟩|².
pub fn overlap(a: &StateVector, b: &StateVector) -> f64 {
    inner_product(a, b).norm_sqr()
}

/// Statistical state fidelity, the square root of the overlap.
pub fn fidelity(a: &StateVector, b: &StateVector) -> f64 {
    overlap(a, b).sqrt()
}

/// Haar-distributed random pure state: eight i.i.d. standard normals form a
/// complex 4-vector which is then normalized.
pub fn haar_random_state(rng: &mut RandomStream) -> StateVector {
    loop {
        let mut amp = [ZERO; DIM];
        for a in amp.iter_mut() {
            let re = rng.standard_normal();
            let im = rng.standard_normal();
            *a = Complex64::new(re, im);
        }
        if let Ok(s) = StateVector(amp).normalize() {
            return s;
        }
    }
}
