//! Small dense linear algebra: cyclic Jacobi eigensolvers for 4×4 Hermitian
//! and 6×6 real symmetric matrices, fractional matrix powers and a pivoted
//! linear solve.

use std::cmp::Ordering;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qudit::{StateVector, DIM, ZERO};

/// Hermitian symmetry tolerance accepted by [`hermitian_eig`].
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Relative off-diagonal tolerance at which Jacobi sweeps stop.
pub const JACOBI_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Number of optimized parameters (the six preparation phase shifters).
pub const NPARAM: usize = 6;

pub type Matrix6 = [[f64; NPARAM]; NPARAM];
pub type Vector6 = [f64; NPARAM];

/// A 4×4 complex matrix, expected to be Hermitian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermitianMatrix4(pub [[Complex64; DIM]; DIM]);

impl HermitianMatrix4 {
    pub fn zeros() -> Self {
        Self([[ZERO; DIM]; DIM])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..DIM {
            m.0[i][i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_real(entries: [[f64; DIM]; DIM]) -> Self {
        Self(entries.map(|row| row.map(|x| Complex64::new(x, 0.0))))
    }

    pub fn diagonal(d: [f64; DIM]) -> Self {
        let mut m = Self::zeros();
        for i in 0..DIM {
            m.0[i][i] = Complex64::new(d[i], 0.0);
        }
        m
    }

    /// max |M_ij − conj(M_ji)|.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..DIM {
            for j in 0..DIM {
                worst = worst.max((self.0[i][j] - self.0[j][i].conj()).norm());
            }
        }
        worst
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        let mut out = [ZERO; DIM];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..DIM).map(|j| self.0[i][j] * v[j]).sum();
        }
        StateVector(out)
    }

    /// ⟨v|M|v⟩ (real part).
    pub fn expectation(&self, v: &StateVector) -> f64 {
        crate::qudit::inner_product(v, &self.apply(v)).re
    }

    pub fn add_scaled(&mut self, other: &HermitianMatrix4, factor: f64) {
        for i in 0..DIM {
            for j in 0..DIM {
                self.0[i][j] += other.0[i][j] * factor;
            }
        }
    }

    pub fn max_abs_diff(&self, other: &HermitianMatrix4) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..DIM {
            for j in 0..DIM {
                worst = worst.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        worst
    }
}

/// Eigen-decomposition of a [`HermitianMatrix4`]: one orthonormal eigenvector
/// per eigenvalue. [`hermitian_eig`] returns them in ascending order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spectrum4 {
    pub eigenvalues: [f64; DIM],
    pub eigenvectors: [StateVector; DIM],
}

impl Spectrum4 {
    /// Σ λ_k |v_k⟩⟨v_k|.
    pub fn reconstruct(&self) -> HermitianMatrix4 {
        let mut m = HermitianMatrix4::zeros();
        for (lambda, v) in self.eigenvalues.iter().zip(self.eigenvectors.iter()) {
            for i in 0..DIM {
                for j in 0..DIM {
                    m.0[i][j] += v[i] * v[j].conj() * *lambda;
                }
            }
        }
        m
    }

    /// The eigenpair with the smallest eigenvalue (first one on ties).
    pub fn lowest(&self) -> (f64, StateVector) {
        let mut k = 0;
        for (i, l) in self.eigenvalues.iter().enumerate() {
            if *l < self.eigenvalues[k] {
                k = i;
            }
        }
        (self.eigenvalues[k], self.eigenvectors[k])
    }
}

/// Eigen-decomposition of a Hermitian 4×4 matrix by cyclic complex Jacobi
/// rotations. Eigenvalues are sorted ascending (ties keep their original
/// diagonal order) and each eigenvector is phased so that its
/// largest-magnitude component is real and positive.
pub fn hermitian_eig(m: &HermitianMatrix4) -> Result<Spectrum4> {
    let asym = m.asymmetry();
    if !(asym <= HERMITIAN_TOL) {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    let (values, vectors) = jacobi_hermitian(m.0)?;

    let mut order: Vec<usize> = (0..DIM).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));

    let mut eigenvalues = [0.0; DIM];
    let mut eigenvectors = [StateVector([ZERO; DIM]); DIM];
    for (slot, &k) in order.iter().enumerate() {
        eigenvalues[slot] = values[k];
        let mut v = StateVector(std::array::from_fn(|i| vectors[i][k]));
        fix_phase(&mut v);
        eigenvectors[slot] = v;
    }
    Ok(Spectrum4 {
        eigenvalues,
        eigenvectors,
    })
}

/// Multiply `v` by the phase that makes its largest-magnitude component real
/// positive (first index wins on exact ties).
pub(crate) fn fix_phase(v: &mut StateVector) {
    let mut best = 0;
    for i in 1..DIM {
        if v[i].norm() > v[best].norm() {
            best = i;
        }
    }
    let a = v[best];
    if a.norm() > 0.0 {
        let phase = a.conj() / a.norm();
        *v = v.scale(phase);
        v[best] = Complex64::new(v[best].norm(), 0.0);
    }
}

fn off_diagonal_norm_c<const N: usize>(a: &[[Complex64; N]; N]) -> (f64, f64) {
    let mut off = 0.0;
    let mut total = 0.0;
    for i in 0..N {
        for j in 0..N {
            let x = a[i][j].norm_sqr();
            total += x;
            if i != j {
                off += x;
            }
        }
    }
    (off.sqrt(), total.sqrt())
}

/// Raw cyclic Jacobi on an N×N Hermitian matrix. Returns the (unsorted)
/// diagonal and the unitary whose columns are the eigenvectors.
fn jacobi_hermitian<const N: usize>(
    mut a: [[Complex64; N]; N],
) -> Result<([f64; N], [[Complex64; N]; N])> {
    let mut v = [[ZERO; N]; N];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0, 0.0);
    }
    // Enforce an exactly Hermitian working copy.
    for i in 0..N {
        a[i][i] = Complex64::new(a[i][i].re, 0.0);
        for j in (i + 1)..N {
            let avg = (a[i][j] + a[j][i].conj()) * 0.5;
            a[i][j] = avg;
            a[j][i] = avg.conj();
        }
    }

    let mut converged = false;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let (off, total) = off_diagonal_norm_c(&a);
        if off <= JACOBI_TOL * total.max(f64::MIN_POSITIVE) || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = a[p][q];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                // Phase step: rotate column/row q so that a[p][q] becomes |a[p][q]|.
                let phase = apq.conj() / mag;
                for k in 0..N {
                    a[k][q] *= phase;
                    v[k][q] *= phase;
                }
                for k in 0..N {
                    a[q][k] *= phase.conj();
                }
                a[p][q] = Complex64::new(mag, 0.0);
                a[q][p] = Complex64::new(mag, 0.0);

                // Real Givens step zeroing the now-real (p, q) entry.
                let theta = 0.5 * (2.0 * mag).atan2(a[q][q].re - a[p][p].re);
                let (s, c) = theta.sin_cos();
                for k in 0..N {
                    let kp = a[k][p];
                    let kq = a[k][q];
                    a[k][p] = kp * c - kq * s;
                    a[k][q] = kp * s + kq * c;
                    let vp = v[k][p];
                    let vq = v[k][q];
                    v[k][p] = vp * c - vq * s;
                    v[k][q] = vp * s + vq * c;
                }
                for k in 0..N {
                    let pk = a[p][k];
                    let qk = a[q][k];
                    a[p][k] = pk * c - qk * s;
                    a[q][k] = pk * s + qk * c;
                }
                a[p][q] = ZERO;
                a[q][p] = ZERO;
            }
        }
    }
    if !converged {
        let (off, total) = off_diagonal_norm_c(&a);
        if off > 1e-9 * total.max(1.0) {
            return Err(Error::Numerical(format!(
                "Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps (off-diagonal {off:.3e})"
            )));
        }
    }
    Ok((std::array::from_fn(|i| a[i][i].re), v))
}

/// Eigen-decomposition of a real symmetric N×N matrix by cyclic Jacobi.
/// Eigenvalues ascending; eigenvectors are the columns of the returned matrix.
pub fn symmetric_eig<const N: usize>(m: &[[f64; N]; N]) -> Result<([f64; N], [[f64; N]; N])> {
    let mut a = *m;
    for i in 0..N {
        for j in (i + 1)..N {
            let avg = 0.5 * (a[i][j] + a[j][i]);
            a[i][j] = avg;
            a[j][i] = avg;
        }
    }
    let mut v = [[0.0; N]; N];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    let off_norm = |a: &[[f64; N]; N]| {
        let mut off = 0.0;
        let mut total = 0.0;
        for (i, row) in a.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                total += x * x;
                if i != j {
                    off += x * x;
                }
            }
        }
        (off.sqrt(), total.sqrt())
    };

    let mut converged = false;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let (off, total) = off_norm(&a);
        if off <= JACOBI_TOL * total.max(f64::MIN_POSITIVE) || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = 0.5 * (2.0 * apq).atan2(a[q][q] - a[p][p]);
                let (s, c) = theta.sin_cos();
                for k in 0..N {
                    let kp = a[k][p];
                    let kq = a[k][q];
                    a[k][p] = c * kp - s * kq;
                    a[k][q] = s * kp + c * kq;
                    let vp = v[k][p];
                    let vq = v[k][q];
                    v[k][p] = c * vp - s * vq;
                    v[k][q] = s * vp + c * vq;
                }
                for k in 0..N {
                    let pk = a[p][k];
                    let qk = a[q][k];
                    a[p][k] = c * pk - s * qk;
                    a[q][k] = s * pk + c * qk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
            }
        }
    }
    if !converged {
        let (off, total) = off_norm(&a);
        if off > 1e-9 * total.max(1.0) {
            return Err(Error::Numerical(format!(
                "symmetric Jacobi did not converge (off-diagonal {off:.3e})"
            )));
        }
    }

    let mut order: Vec<usize> = (0..N).collect();
    order.sort_by(|&x, &y| a[x][x].partial_cmp(&a[y][y]).unwrap_or(Ordering::Equal));
    let values = std::array::from_fn(|i| a[order[i]][order[i]]);
    let vectors = std::array::from_fn(|r| std::array::from_fn(|c| v[r][order[c]]));
    Ok((values, vectors))
}

/// `M^exponent` for a real symmetric 6×6 matrix after symmetrizing and
/// clamping every eigenvalue below `eigenvalue_floor` up to the floor.
pub fn frac_power_psd(m: &Matrix6, exponent: f64, eigenvalue_floor: f64) -> Result<Matrix6> {
    if !(eigenvalue_floor > 0.0) {
        return Err(Error::Numerical(format!(
            "eigenvalue floor must be positive, got {eigenvalue_floor}"
        )));
    }
    let (values, vectors) = symmetric_eig(m)?;
    let powered = values.map(|l| l.max(eigenvalue_floor).powf(exponent));
    let mut out = [[0.0; NPARAM]; NPARAM];
    for i in 0..NPARAM {
        for j in 0..NPARAM {
            out[i][j] = (0..NPARAM)
                .map(|k| vectors[i][k] * powered[k] * vectors[j][k])
                .sum();
        }
    }
    Ok(out)
}

/// Ratio of largest to smallest absolute eigenvalue.
pub fn condition_number(m: &Matrix6) -> Result<f64> {
    let (values, _) = symmetric_eig(m)?;
    let abs: Vec<f64> = values.iter().map(|x| x.abs()).collect();
    let max = abs.iter().cloned().fold(0.0, f64::max);
    let min = abs.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(if min == 0.0 { f64::INFINITY } else { max / min })
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve6(a: &Matrix6, b: &Vector6) -> Result<Vector6> {
    let mut m = *a;
    let mut x = *b;
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    for col in 0..NPARAM {
        let pivot = (col..NPARAM)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .expect("non-empty range");
        if !(m[pivot][col].abs() > 1e-14 * scale.max(f64::MIN_POSITIVE)) {
            return Err(Error::Numerical(format!(
                "singular system at column {col} (pivot {:.3e})",
                m[pivot][col]
            )));
        }
        m.swap(col, pivot);
        x.swap(col, pivot);
        for row in (col + 1)..NPARAM {
            let f = m[row][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..NPARAM {
                m[row][k] -= f * m[col][k];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..NPARAM).rev() {
        let tail: f64 = ((col + 1)..NPARAM).map(|k| m[col][k] * x[k]).sum();
        x[col] = (x[col] - tail) / m[col][col];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite solution".into()));
    }
    Ok(x)
}

pub fn identity6() -> Matrix6 {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 }))
}

pub fn mat_vec6(m: &Matrix6, v: &Vector6) -> Vector6 {
    std::array::from_fn(|i| (0..NPARAM).map(|j| m[i][j] * v[j]).sum())
}

pub fn mat_mul6(a: &Matrix6, b: &Matrix6) -> Matrix6 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..NPARAM).map(|k| a[i][k] * b[k][j]).sum()))
}

pub fn max_abs_diff6(a: &Matrix6, b: &Matrix6) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..NPARAM {
        for j in 0..NPARAM {
            worst = worst.max((a[i][j] - b[i][j]).abs());
        }
    }
    worst
}

pub fn norm6(v: &Vector6) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
