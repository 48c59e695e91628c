//! Gradient, metric and update rules for the three optimizers, and the VQE
//! loop that drives them.
//!
//! * `vanilla`: `p ← p − η g`
//! * `rqng`: `p ← p − η (F + λI)⁻¹ g` with the exact Fubini-Study metric `F`
//! * `spsa_qng`: `p ← p − η F̄^{−α} g` with `F̄` the running mean of
//!   four-overlap SPSA samples of the metric, eigenvalues clamped at a floor

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ansatz::{
    compile_meas, dstate_dparam, params_to_angles, state_from_params, ParamVector, PrepSettings,
};
use crate::chip::{estimate_overlap, MeasurementModel};
use crate::error::{Error, Result};
use crate::hamiltonian::{ground_truth, EnergyEstimator, PauliHamiltonian};
use crate::linalg::{
    condition_number, frac_power_psd, identity6, mat_vec6, norm6, solve6, Matrix6, Vector6, NPARAM,
};
use crate::qudit::{fidelity, inner_product};
use crate::random::RandomStream;

pub const DEFAULT_ETA: f64 = 0.05 * PI;
pub const DEFAULT_EPSILON: f64 = 0.05 * PI;
pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_EIGENVALUE_FLOOR: f64 = 0.1;
pub const DEFAULT_TIKHONOV_LAMBDA: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 200;
/// Energy fluctuation (MJ mol⁻¹) below which a run counts as converged.
pub const DEFAULT_CONVERGENCE_THRESHOLD: f64 = 1e-2;
pub const DEFAULT_CONVERGENCE_WINDOW: usize = 5;
/// Records averaged into the final energy, starting at the convergence step.
pub const FINAL_AVERAGE_STEPS: usize = 5;

/// Parameter shift used by the gradient rule.
pub const PARAM_SHIFT: f64 = FRAC_PI_4;

/// ChaCha stream ids of the two generators owned by a run.
const MEASUREMENT_STREAM: u64 = 0;
const DIRECTION_STREAM: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Vanilla,
    Rqng,
    SpsaQng,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 3] = [
        OptimizerKind::Vanilla,
        OptimizerKind::Rqng,
        OptimizerKind::SpsaQng,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Vanilla => "vanilla",
            OptimizerKind::Rqng => "rqng",
            OptimizerKind::SpsaQng => "spsa_qng",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(OptimizerKind::Vanilla),
            "rqng" => Ok(OptimizerKind::Rqng),
            "spsa_qng" | "spsa-qng" => Ok(OptimizerKind::SpsaQng),
            other => Err(Error::config(
                "optimizer",
                format!("unknown optimizer `{other}` (expected vanilla, rqng or spsa_qng)"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub eta: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub eigenvalue_floor: f64,
    pub tikhonov_lambda: f64,
    pub max_iters: usize,
    pub convergence_threshold: f64,
    pub convergence_window: usize,
    pub seed: u64,
}

impl OptimizerConfig {
    pub fn new(kind: OptimizerKind) -> Self {
        Self {
            kind,
            eta: DEFAULT_ETA,
            epsilon: DEFAULT_EPSILON,
            alpha: DEFAULT_ALPHA,
            eigenvalue_floor: DEFAULT_EIGENVALUE_FLOOR,
            tikhonov_lambda: DEFAULT_TIKHONOV_LAMBDA,
            max_iters: DEFAULT_MAX_ITERS,
            convergence_threshold: DEFAULT_CONVERGENCE_THRESHOLD,
            convergence_window: DEFAULT_CONVERGENCE_WINDOW,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(
                    key,
                    format!("must be a positive number, got {v}"),
                ))
            }
        };
        positive("eta", self.eta)?;
        positive("epsilon", self.epsilon)?;
        positive("eigenvalue_floor", self.eigenvalue_floor)?;
        positive("convergence_threshold", self.convergence_threshold)?;
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config(
                "alpha",
                format!("must lie in (0, 1], got {}", self.alpha),
            ));
        }
        if !(self.tikhonov_lambda.is_finite() && self.tikhonov_lambda >= 0.0) {
            return Err(Error::config("tikhonov_lambda", "must be non-negative"));
        }
        if self.max_iters < 1 {
            return Err(Error::config("max_iters", "must be at least 1"));
        }
        if self.convergence_window < 2 {
            return Err(Error::config("convergence_window", "must be at least 2"));
        }
        Ok(())
    }
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self::new(OptimizerKind::SpsaQng)
    }
}

/// Latest SPSA metric sample and its running mean after `k + 1` samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QfimEstimate {
    pub sample: Matrix6,
    pub smoothed: Matrix6,
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub step: usize,
    pub params: ParamVector,
    /// Measured energy, MJ mol⁻¹.
    pub energy: f64,
    /// √|⟨ψ(p)|ψ_G⟩|² against the exact ground state.
    pub fidelity_to_ground: f64,
    pub grad_norm: f64,
    /// Condition number of the preconditioner; absent for vanilla or when
    /// it is not finite.
    pub qfim_condition: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub kind: OptimizerKind,
    pub seed: u64,
    pub records: Vec<IterationRecord>,
    pub converged_at: Option<usize>,
    /// Mean energy over the records starting at `converged_at`.
    pub final_energy: Option<f64>,
    pub final_fidelity: Option<f64>,
}

impl RunTrace {
    pub fn energies(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.energy).collect()
    }

    pub fn last(&self) -> &IterationRecord {
        self.records
            .last()
            .expect("a trace holds at least one record")
    }
}

/// `g_j = [C(p + π/4 e_j) − C(p − π/4 e_j)] / √2`.
pub fn param_shift_gradient<F>(mut cost: F, p: &ParamVector) -> Vector6
where
    F: FnMut(&ParamVector) -> f64,
{
    std::array::from_fn(|j| {
        let plus = cost(&p.shifted(j, PARAM_SHIFT));
        let minus = cost(&p.shifted(j, -PARAM_SHIFT));
        (plus - minus) * FRAC_1_SQRT_2
    })
}

/// `F_ij = Re(⟨∂iψ|∂jψ⟩ − ⟨∂iψ|ψ⟩⟨ψ|∂jψ⟩)`.
pub fn exact_qfim(p: &ParamVector) -> Matrix6 {
    let psi = state_from_params(p);
    let d: [_; NPARAM] = std::array::from_fn(|j| dstate_dparam(p, j));
    let proj: [_; NPARAM] = std::array::from_fn(|j| inner_product(&psi, &d[j]));
    let mut f = [[0.0; NPARAM]; NPARAM];
    for i in 0..NPARAM {
        for j in i..NPARAM {
            let v = (inner_product(&d[i], &d[j]) - proj[i].conj() * proj[j]).re;
            f[i][j] = v;
            f[j][i] = v;
        }
    }
    f
}

/// Overlap between the prepared state `ψ(p)` and the state `ψ(q)` routed to
/// the readout port, as estimated on the chip.
pub fn chip_overlap(
    p: &ParamVector,
    q: &ParamVector,
    model: &MeasurementModel,
    rng: &mut RandomStream,
) -> f64 {
    let prep = PrepSettings::from(*p);
    let meas = compile_meas(&params_to_angles(q));
    estimate_overlap(&prep, &meas, model, rng)
}

/// One SPSA sample of the metric from four overlaps along two Rademacher
/// directions `Δ1`, `Δ2` drawn from `rng`:
///
/// ```text
/// δF = f(p+εΔ1+εΔ2) − f(p+εΔ1) − f(p−εΔ1+εΔ2) + f(p−εΔ1)
/// F̃  = −½ · δF / (2ε²) · (Δ1Δ2ᵀ + Δ2Δ1ᵀ) / 2
/// ```
///
/// where `f(q) = overlap_fn(p, q)`. The −½ makes `E[F̃]` equal the metric,
/// since `f(p, p+δ) ≈ 1 − δᵀFδ`.
pub fn spsa_qfim_sample<F>(
    p: &ParamVector,
    epsilon: f64,
    mut overlap_fn: F,
    rng: &mut RandomStream,
) -> Matrix6
where
    F: FnMut(&ParamVector, &ParamVector) -> f64,
{
    assert!(epsilon > 0.0, "epsilon must be positive");
    let d1: Vector6 = std::array::from_fn(|_| rng.rademacher());
    let d2: Vector6 = std::array::from_fn(|_| rng.rademacher());
    let at = |s1: f64, s2: f64| -> Vector6 {
        std::array::from_fn(|j| epsilon * (s1 * d1[j] + s2 * d2[j]))
    };

    let f_pp = overlap_fn(p, &p.displaced(&at(1.0, 1.0), 1.0));
    let f_p0 = overlap_fn(p, &p.displaced(&at(1.0, 0.0), 1.0));
    let f_mp = overlap_fn(p, &p.displaced(&at(-1.0, 1.0), 1.0));
    let f_m0 = overlap_fn(p, &p.displaced(&at(-1.0, 0.0), 1.0));
    let delta_f = f_pp - f_p0 - f_mp + f_m0;

    let scale = -0.5 * delta_f / (2.0 * epsilon * epsilon) * 0.5;
    std::array::from_fn(|i| std::array::from_fn(|j| scale * (d1[i] * d2[j] + d2[i] * d1[j])))
}

/// Running mean `F̄_k = k/(k+1) F̄_{k−1} + F̃/(k+1)`; `prev` is ignored at
/// `k = 0`.
pub fn smooth_qfim(prev: Option<&QfimEstimate>, sample: &Matrix6, k: usize) -> QfimEstimate {
    let smoothed = match prev {
        Some(prev) if k > 0 => {
            let a = k as f64 / (k + 1) as f64;
            let b = 1.0 / (k + 1) as f64;
            std::array::from_fn(|i| {
                std::array::from_fn(|j| a * prev.smoothed[i][j] + b * sample[i][j])
            })
        }
        _ => *sample,
    };
    QfimEstimate {
        sample: *sample,
        smoothed,
        k,
    }
}

fn regularized(f: &Matrix6, lambda: f64) -> Matrix6 {
    let mut m = *f;
    for (i, row) in m.iter_mut().enumerate() {
        row[i] += lambda;
    }
    m
}

/// The preconditioned descent direction for `cfg.kind`. `metric` is the exact
/// metric for rqng and the smoothed estimate for spsa_qng; vanilla ignores it.
pub fn descent_direction(
    gradient: &Vector6,
    metric: Option<&Matrix6>,
    cfg: &OptimizerConfig,
) -> Result<Vector6> {
    if gradient.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numerical(format!(
            "non-finite gradient {gradient:?}"
        )));
    }
    let need_metric =
        || metric.ok_or_else(|| Error::Numerical(format!("{} step requires a metric", cfg.kind)));
    match cfg.kind {
        OptimizerKind::Vanilla => Ok(*gradient),
        OptimizerKind::Rqng => solve6(&regularized(need_metric()?, cfg.tikhonov_lambda), gradient),
        OptimizerKind::SpsaQng => {
            let m = frac_power_psd(need_metric()?, -cfg.alpha, cfg.eigenvalue_floor)?;
            Ok(mat_vec6(&m, gradient))
        }
    }
}

/// One update `p − η · direction`.
pub fn step(
    p: &ParamVector,
    gradient: &Vector6,
    metric: Option<&Matrix6>,
    cfg: &OptimizerConfig,
) -> Result<ParamVector> {
    let d = descent_direction(gradient, metric, cfg)?;
    Ok(p.displaced(&d, -cfg.eta))
}

/// First step `k` with `max − min` of `energies[k−window+1..=k]` below
/// `threshold`.
pub fn detect_convergence(energies: &[f64], threshold: f64, window: usize) -> Option<usize> {
    assert!(window >= 2, "convergence window must be at least 2");
    energies
        .windows(window)
        .position(|w| {
            let max = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = w.iter().cloned().fold(f64::INFINITY, f64::min);
            max - min < threshold
        })
        .map(|start| start + window - 1)
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn finite(x: Result<f64>) -> Option<f64> {
    x.ok().filter(|c| c.is_finite())
}

/// Runs one optimization from `p0` until convergence (plus the records needed
/// for the final average) or `cfg.max_iters` records.
///
/// A run owns two streams derived from `cfg.seed`: one for measurement noise
/// and shot sampling, one for SPSA directions.
pub fn run_vqe(
    h: &PauliHamiltonian,
    p0: &ParamVector,
    cfg: &OptimizerConfig,
    model: &MeasurementModel,
) -> Result<RunTrace> {
    cfg.validate()?;
    let estimator = EnergyEstimator::new(h);
    let ground = ground_truth(h)?;
    let mut meas_rng = RandomStream::with_stream(cfg.seed, MEASUREMENT_STREAM);
    let mut dir_rng = RandomStream::with_stream(cfg.seed, DIRECTION_STREAM);

    let mut p = *p0;
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut energies: Vec<f64> = Vec::new();
    let mut qfim: Option<QfimEstimate> = None;
    let mut converged_at = None;

    for k in 0..cfg.max_iters {
        let energy = estimator.estimate(&p, model, &mut meas_rng);
        energies.push(energy);
        if converged_at.is_none() {
            converged_at =
                detect_convergence(&energies, cfg.convergence_threshold, cfg.convergence_window);
        }
        let gradient = param_shift_gradient(|q| estimator.estimate(q, model, &mut meas_rng), &p);

        let (metric, condition) = match cfg.kind {
            OptimizerKind::Vanilla => (None, None),
            OptimizerKind::Rqng => {
                let f = exact_qfim(&p);
                let cond = finite(condition_number(&regularized(&f, cfg.tikhonov_lambda)));
                (Some(f), cond)
            }
            OptimizerKind::SpsaQng => {
                let sample = spsa_qfim_sample(
                    &p,
                    cfg.epsilon,
                    |a, b| chip_overlap(a, b, model, &mut meas_rng),
                    &mut dir_rng,
                );
                let est = smooth_qfim(qfim.as_ref(), &sample, k);
                qfim = Some(est);
                let cond = frac_power_psd(&est.smoothed, 1.0, cfg.eigenvalue_floor)
                    .and_then(|m| condition_number(&m));
                (Some(est.smoothed), finite(cond))
            }
        };

        records.push(IterationRecord {
            step: k,
            params: p,
            energy,
            fidelity_to_ground: fidelity(&state_from_params(&p), &ground.state),
            grad_norm: norm6(&gradient),
            qfim_condition: condition,
        });

        if let Some(c) = converged_at {
            if records.len() >= c + FINAL_AVERAGE_STEPS {
                break;
            }
        }
        p = step(&p, &gradient, metric.as_ref(), cfg).map_err(|e| {
            Error::Numerical(format!("{} seed {} step {k}: {e}", cfg.kind, cfg.seed))
        })?;
    }

    let tail = |c: usize| records.iter().skip(c).take(FINAL_AVERAGE_STEPS);
    let final_energy = converged_at.and_then(|c| mean(tail(c).map(|r| r.energy)));
    let final_fidelity = converged_at.and_then(|c| mean(tail(c).map(|r| r.fidelity_to_ground)));
    Ok(RunTrace {
        kind: cfg.kind,
        seed: cfg.seed,
        records,
        converged_at,
        final_energy,
        final_fidelity,
    })
}

/// Identity metric, for tests and for comparing update rules.
pub fn flat_metric() -> Matrix6 {
    identity6()
}
