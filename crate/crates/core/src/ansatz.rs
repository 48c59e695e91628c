//! The ququart ansatz and the map between abstract angles and the physical
//! phase-shifter settings of the preparation and measurement circuits.
//!
//! A state is written as
//!
//! ```text
//! ψ = e^{iφ1} sinθ1 sinθ2 |1⟩ + e^{iφ2} sinθ1 cosθ2 |2⟩
//!   + e^{iφ3} cosθ1 sinθ3 |3⟩ + e^{iφ4} cosθ1 cosθ3 |4⟩
//! ```
//!
//! The optimizers move the six preparation phases PS1..PS6 directly. With
//! those as variables the global phase drops out (φ4 is fixed to 0) and the
//! cost is a first-order trigonometric polynomial in every variable, which
//! makes the π/4 parameter-shift rule exact.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{Vector6, NPARAM};
use crate::qudit::{StateVector, DIM, ZERO};

/// Amplitudes below this magnitude are treated as exactly zero when
/// inverting a state into angles.
pub const ZERO_AMPLITUDE: f64 = 1e-12;

/// The seven abstract angles of the ququart parametrization.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Angles {
    pub theta: [f64; 3],
    pub phi: [f64; 4],
}

impl Angles {
    pub fn new(theta: [f64; 3], phi: [f64; 4]) -> Self {
        Self { theta, phi }
    }

    /// All angles reduced into `[0, 2π)`.
    pub fn canonical(&self) -> Self {
        Self {
            theta: self.theta.map(wrap_angle),
            phi: self.phi.map(wrap_angle),
        }
    }
}

/// Reduce an angle into `[0, 2π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Distance between two angles on the circle.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    d.min(TAU - d)
}

/// The six preparation phases PS1..PS6, in radians. These are the
/// optimization variables; they are kept unwrapped during a run.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamVector(pub Vector6);

impl ParamVector {
    /// The phases that prepare the uniform superposition [0.5, 0.5, 0.5, 0.5].
    pub fn initial() -> Self {
        Self([
            FRAC_PI_2,
            3.0 * FRAC_PI_2,
            FRAC_PI_2,
            FRAC_PI_2,
            FRAC_PI_2,
            0.0,
        ])
    }

    pub fn as_array(&self) -> &Vector6 {
        &self.0
    }

    /// Copy with every phase reduced into `[0, 2π)`, for display.
    pub fn wrapped(&self) -> Self {
        Self(self.0.map(wrap_angle))
    }

    /// `self + t·e_j`.
    pub fn shifted(&self, j: usize, t: f64) -> Self {
        let mut out = *self;
        out.0[j] += t;
        out
    }

    /// `self + s·d`.
    pub fn displaced(&self, d: &Vector6, s: f64) -> Self {
        Self(std::array::from_fn(|i| self.0[i] + s * d[i]))
    }
}

impl Index<usize> for ParamVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for ParamVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Phase settings for PS1..PS6 of the preparation circuit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrepSettings(pub [f64; 6]);

/// Phase settings for PS7..PS12 of the measurement circuit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasSettings(pub [f64; 6]);

impl PrepSettings {
    /// Values to send to hardware: π added to PS4..PS6 to cancel the fixed π
    /// shifters that sit in series with them on the chip.
    pub fn with_hardware_offset(&self) -> [f64; 6] {
        let mut out = self.0;
        for v in out.iter_mut().skip(3) {
            *v += PI;
        }
        out
    }
}

impl From<ParamVector> for PrepSettings {
    fn from(p: ParamVector) -> Self {
        PrepSettings(p.0)
    }
}

impl From<PrepSettings> for ParamVector {
    fn from(s: PrepSettings) -> Self {
        ParamVector(s.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Prep,
    Meas,
}

/// Builds the state from its seven angles. Normalized by construction.
pub fn angles_to_state(a: &Angles) -> StateVector {
    let [t1, t2, t3] = a.theta;
    let (s1, c1) = t1.sin_cos();
    let (s2, c2) = t2.sin_cos();
    let (s3, c3) = t3.sin_cos();
    let mags = [s1 * s2, s1 * c2, c1 * s3, c1 * c3];
    StateVector(std::array::from_fn(|k| {
        Complex64::from_polar(mags[k], a.phi[k])
    }))
}

/// Inverts the preparation settings: PS values → angles, with φ4 fixed to 0.
pub fn params_to_angles(p: &ParamVector) -> Angles {
    let t1 = p[0] / 2.0;
    let t2 = (p[1] - PI) / 2.0;
    let t3 = p[2] / 2.0;
    let chi = t2 - t3;
    Angles {
        theta: [t1, t2, t3],
        phi: [p[3] - FRAC_PI_2 + chi, p[4] - FRAC_PI_2 + chi, p[5], 0.0],
    }
}

/// The trial state prepared by the phases `p`.
pub fn state_from_params(p: &ParamVector) -> StateVector {
    angles_to_state(&params_to_angles(p))
}

/// Preparation phases for the angles `a` (PS1..PS6).
pub fn compile_prep(a: &Angles) -> PrepSettings {
    let [t1, t2, t3] = a.theta;
    let [f1, f2, f3, f4] = a.phi;
    PrepSettings([
        2.0 * t1,
        PI + 2.0 * t2,
        2.0 * t3,
        f1 - f4 - t2 + t3 + FRAC_PI_2,
        f2 - f4 - t2 + t3 + FRAC_PI_2,
        f3 - f4,
    ])
}

/// Measurement phases PS7..PS12 that route the state `a` to output port 2.
pub fn compile_meas(a: &Angles) -> MeasSettings {
    let [t1, t2, t3] = a.theta;
    let [f1, f2, f3, f4] = a.phi;
    MeasSettings([
        -f1 + f4 - t2 + t3 + FRAC_PI_2,
        -f2 + f4 - t2 + t3 + FRAC_PI_2,
        -f3 + f4,
        PI + 2.0 * t2,
        2.0 * t3,
        2.0 * t1,
    ])
}

/// The six phase values for either circuit. With `hardware_offset`, π is
/// added to PS4..PS6 of the preparation circuit.
pub fn compile_settings(a: &Angles, direction: Direction, hardware_offset: bool) -> [f64; 6] {
    match direction {
        Direction::Prep => {
            let s = compile_prep(a);
            if hardware_offset {
                s.with_hardware_offset()
            } else {
                s.0
            }
        }
        Direction::Meas => compile_meas(a).0,
    }
}

/// Recovers angles from a normalized state, up to a global phase.
///
/// Degenerate branches are resolved deterministically: if the {1,2} arm is
/// empty θ2 and φ1, φ2 are 0; if the {3,4} arm is empty θ3 and φ3, φ4 are 0;
/// the phase of any vanishing amplitude is 0.
pub fn state_to_angles(s: &StateVector) -> Angles {
    let mag: [f64; DIM] = std::array::from_fn(|k| s[k].norm());
    let arg: [f64; DIM] = std::array::from_fn(|k| {
        if mag[k] < ZERO_AMPLITUDE {
            0.0
        } else {
            s[k].arg()
        }
    });
    let upper = (mag[0] * mag[0] + mag[1] * mag[1]).sqrt();
    let lower = (mag[2] * mag[2] + mag[3] * mag[3]).sqrt();

    let t1 = upper.atan2(lower);
    let (t2, f1, f2) = if upper < ZERO_AMPLITUDE {
        (0.0, 0.0, 0.0)
    } else {
        (mag[0].atan2(mag[1]), arg[0], arg[1])
    };
    let (t3, f3, f4) = if lower < ZERO_AMPLITUDE {
        (0.0, 0.0, 0.0)
    } else {
        (mag[2].atan2(mag[3]), arg[2], arg[3])
    };
    Angles {
        theta: [t1, t2, t3],
        phi: [f1, f2, f3, f4],
    }
}

/// Preparation phases that produce `s` (up to global phase).
pub fn params_for_state(s: &StateVector) -> ParamVector {
    compile_prep(&state_to_angles(s)).into()
}

/// Analytic ∂ψ/∂p_j of [`state_from_params`], `j` in `0..6`.
pub fn dstate_dparam(p: &ParamVector, j: usize) -> StateVector {
    assert!(j < NPARAM, "parameter index {j} out of range");
    let a = params_to_angles(p);
    let psi = angles_to_state(&a);
    let [t1, t2, t3] = a.theta;
    let (s1, c1) = t1.sin_cos();
    let (s2, c2) = t2.sin_cos();
    let (s3, c3) = t3.sin_cos();
    let e = a.phi.map(|f| Complex64::from_polar(1.0, f));
    let i = Complex64::i();
    let half = 0.5;

    let mut d = [ZERO; DIM];
    match j {
        0 => {
            d[0] = e[0] * (half * c1 * s2);
            d[1] = e[1] * (half * c1 * c2);
            d[2] = e[2] * (-half * s1 * s3);
            d[3] = e[3] * (-half * s1 * c3);
        }
        1 => {
            // θ2 and the shared phase offset both advance at rate 1/2.
            d[0] = i * half * psi[0] + e[0] * (half * s1 * c2);
            d[1] = i * half * psi[1] - e[1] * (half * s1 * s2);
        }
        2 => {
            d[0] = -i * half * psi[0];
            d[1] = -i * half * psi[1];
            d[2] = e[2] * (half * c1 * c3);
            d[3] = e[3] * (-half * c1 * s3);
        }
        3 => d[0] = i * psi[0],
        4 => d[1] = i * psi[1],
        5 => d[2] = i * psi[2],
        _ => unreachable!(),
    }
    StateVector(d)
}
