//! Batch experiments: convergence comparison, dissociation curve, state
//! characterization and the settings compiler.
//!
//! Each command has a `run_*` function returning an in-memory report and a
//! `cmd_*` wrapper that also writes the report under `out_dir`. Files are
//! written once, atomically, after every run has finished.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::ansatz::{
    compile_meas, compile_prep, compile_settings, state_from_params, state_to_angles, Direction,
    ParamVector,
};
use crate::chip::{
    estimate_overlap, port_probabilities, MeasurementModel, NoiseModel, ShotPolicy,
    DEFAULT_PHASE_SIGMA, READOUT_PORT,
};
use crate::error::{Error, Result};
use crate::hamiltonian::{calibrate_shift, ground_truth, hamiltonian_at, mj_to_hartree, DISTANCES};
use crate::optimize::{run_vqe, OptimizerConfig, OptimizerKind, RunTrace, FINAL_AVERAGE_STEPS};
use crate::qudit::{haar_random_state, StateVector};
use crate::random::RandomStream;

pub const SEED_ENV: &str = "NATURAL_VQE_SEED";
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_REPEATS: usize = 10;
pub const DEFAULT_CONVERGE_R: f64 = 0.9;
pub const DEFAULT_SAMPLES: usize = 1000;
pub const DEFAULT_BINS: usize = 100;
pub const DEFAULT_HIST_MIN: f64 = 0.9;
pub const DEFAULT_OUT_DIR: &str = "out";

/// Significant digits of every real number written to CSV.
const CSV_DIGITS: usize = 12;
/// Significant digits of compiled phase settings.
const SETTINGS_DIGITS: usize = 12;
/// Accepted deviation from unit norm for a state passed to `compile`.
const STATE_NORM_TOL: f64 = 1e-6;
/// Stream id offset separating calibration draws from optimizer runs.
const CALIBRATION_STREAM: u64 = 1 << 32;

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

fn one_or_many<'de, D, T>(d: D) -> std::result::Result<Option<Vec<T>>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    Ok(Option::<OneOrMany<T>>::deserialize(d)?.map(|v| match v {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(xs) => xs,
    }))
}

/// Flat experiment parameters. Every field is optional; unset fields take the
/// command's default. Config files use the same keys as the CLI flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, deserialize_with = "one_or_many")]
    pub r: Option<Vec<f64>>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub optimizer: Option<Vec<OptimizerKind>>,
    pub eta: Option<f64>,
    pub epsilon: Option<f64>,
    pub alpha: Option<f64>,
    #[serde(alias = "eigenvalue-floor")]
    pub eigenvalue_floor: Option<f64>,
    #[serde(alias = "max-iters")]
    pub max_iters: Option<usize>,
    pub repeats: Option<usize>,
    pub seed: Option<u64>,
    pub shots: Option<u64>,
    #[serde(alias = "noise-sigma")]
    pub noise_sigma: Option<f64>,
    pub exact: Option<bool>,
    #[serde(alias = "out-dir")]
    pub out_dir: Option<PathBuf>,
    pub samples: Option<usize>,
    pub bins: Option<usize>,
    #[serde(alias = "hist-min")]
    pub hist_min: Option<f64>,
    pub state: Option<String>,
    pub params: Option<Vec<f64>>,
    pub direction: Option<Direction>,
    #[serde(alias = "hardware-offset")]
    pub hardware_offset: Option<bool>,
}

macro_rules! overlay_fields {
    ($top:expr, $base:expr, $($f:ident),*) => {
        ExperimentConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Fields set in `self` win over those in `base`.
    pub fn overlay(self, base: ExperimentConfig) -> ExperimentConfig {
        overlay_fields!(
            self,
            base,
            r,
            optimizer,
            eta,
            epsilon,
            alpha,
            eigenvalue_floor,
            max_iters,
            repeats,
            seed,
            shots,
            noise_sigma,
            exact,
            out_dir,
            samples,
            bins,
            hist_min,
            state,
            params,
            direction,
            hardware_offset
        )
    }

    /// Fills `seed` from `NATURAL_VQE_SEED` when neither flags nor the file set it.
    pub fn with_env_seed(mut self) -> Result<Self> {
        if self.seed.is_none() {
            if let Ok(v) = std::env::var(SEED_ENV) {
                let seed = v.trim().parse().map_err(|_| {
                    Error::config(SEED_ENV, format!("`{v}` is not an unsigned integer"))
                })?;
                self.seed = Some(seed);
            }
        }
        Ok(self)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    fn repeats(&self) -> Result<usize> {
        let n = self.repeats.unwrap_or(DEFAULT_REPEATS);
        if n == 0 {
            return Err(Error::config("repeats", "must be at least 1"));
        }
        Ok(n)
    }

    /// Shot policy and noise. `exact` and `shots` are mutually exclusive; with
    /// neither set, overlaps are exact.
    pub fn measurement_model(&self, default_sigma: f64) -> Result<MeasurementModel> {
        let shots = match (self.exact, self.shots) {
            (Some(true), Some(_)) => {
                return Err(Error::config("exact", "cannot be combined with `shots`"));
            }
            (_, Some(0)) => return Err(Error::config("shots", "must be at least 1")),
            (Some(true), None) | (_, None) => ShotPolicy::Exact,
            (_, Some(n)) => ShotPolicy::sampled(n),
        };
        let sigma = self.noise_sigma.unwrap_or(default_sigma);
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::config(
                "noise_sigma",
                format!("must be non-negative, got {sigma}"),
            ));
        }
        Ok(MeasurementModel::new(shots, NoiseModel::gaussian(sigma)))
    }

    /// Optimizer settings for `kind`, checked before any run.
    pub fn optimizer_config(&self, kind: OptimizerKind) -> Result<OptimizerConfig> {
        let base = OptimizerConfig::new(kind);
        let cfg = OptimizerConfig {
            eta: self.eta.unwrap_or(base.eta),
            epsilon: self.epsilon.unwrap_or(base.epsilon),
            alpha: self.alpha.unwrap_or(base.alpha),
            eigenvalue_floor: self.eigenvalue_floor.unwrap_or(base.eigenvalue_floor),
            max_iters: self.max_iters.unwrap_or(base.max_iters),
            seed: self.seed(),
            ..base
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn distances(&self, default: &[f64]) -> Result<Vec<f64>> {
        let rs = self.r.clone().unwrap_or_else(|| default.to_vec());
        if rs.is_empty() {
            return Err(Error::config("r", "at least one distance is required"));
        }
        for r in &rs {
            hamiltonian_at(*r).map_err(|_| {
                Error::config(
                    "r",
                    format!("{r} is not tabulated (expected one of {DISTANCES:?})"),
                )
            })?;
        }
        Ok(rs)
    }
}

fn significant(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.*e}", digits - 1).parse().unwrap_or(x)
}

/// Fixed-point decimal with [`CSV_DIGITS`] significant digits.
pub fn decimal(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return format!("{:.*}", CSV_DIGITS - 1, 0.0);
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (CSV_DIGITS as i64 - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Writes `bytes` to `path` through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

/// Final energy of a run; an unconverged run falls back to the mean of its
/// last records.
fn settled_energy(t: &RunTrace) -> f64 {
    t.final_energy.unwrap_or_else(|| {
        let tail: Vec<f64> = t
            .records
            .iter()
            .rev()
            .take(FINAL_AVERAGE_STEPS)
            .map(|r| r.energy)
            .collect();
        mean_std(&tail).0
    })
}

fn settled_fidelity(t: &RunTrace) -> f64 {
    t.final_fidelity.unwrap_or_else(|| {
        let tail: Vec<f64> = t
            .records
            .iter()
            .rev()
            .take(FINAL_AVERAGE_STEPS)
            .map(|r| r.fidelity_to_ground)
            .collect();
        mean_std(&tail).0
    })
}

// ---------------------------------------------------------------- converge

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub converged_at: Option<usize>,
    pub final_energy: Option<f64>,
    pub final_fidelity: Option<f64>,
    pub steps: usize,
}

impl RunSummary {
    fn of(t: &RunTrace) -> Self {
        Self {
            optimizer: t.kind,
            seed: t.seed,
            converged_at: t.converged_at,
            final_energy: t.final_energy,
            final_fidelity: t.final_fidelity,
            steps: t.records.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub step: usize,
    /// Runs still recording at this step.
    pub n: usize,
    pub energy_mean: f64,
    pub energy_std: f64,
    pub fidelity_mean: f64,
    pub fidelity_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergeSummary {
    pub r: f64,
    pub ground_energy: f64,
    pub optimizer_settings: Vec<OptimizerConfig>,
    pub model: MeasurementModel,
    pub runs: Vec<RunSummary>,
    /// Mean convergence step per optimizer over its converged runs.
    pub mean_converged_at: Vec<(OptimizerKind, Option<f64>)>,
    pub spsa_per_step: Vec<StepStats>,
}

#[derive(Clone, Debug)]
pub struct ConvergeReport {
    pub traces: Vec<RunTrace>,
    pub summary: ConvergeSummary,
}

impl ConvergeReport {
    pub fn traces_of(&self, kind: OptimizerKind) -> impl Iterator<Item = &RunTrace> {
        self.traces.iter().filter(move |t| t.kind == kind)
    }

    pub fn mean_converged_at(&self, kind: OptimizerKind) -> Option<f64> {
        self.summary
            .mean_converged_at
            .iter()
            .find(|(k, _)| *k == kind)
            .and_then(|(_, m)| *m)
    }
}

fn step_stats(traces: &[&RunTrace]) -> Vec<StepStats> {
    let longest = traces.iter().map(|t| t.records.len()).max().unwrap_or(0);
    (0..longest)
        .map(|step| {
            let rows: Vec<_> = traces.iter().filter_map(|t| t.records.get(step)).collect();
            let e: Vec<f64> = rows.iter().map(|r| r.energy).collect();
            let f: Vec<f64> = rows.iter().map(|r| r.fidelity_to_ground).collect();
            let (energy_mean, energy_std) = mean_std(&e);
            let (fidelity_mean, fidelity_std) = mean_std(&f);
            StepStats {
                step,
                n: rows.len(),
                energy_mean,
                energy_std,
                fidelity_mean,
                fidelity_std,
            }
        })
        .collect()
}

/// Runs each requested optimizer from the uniform state at one distance.
/// Vanilla and rqng run once with the base seed; spsa_qng runs `repeats`
/// times with seeds `seed, seed + 1, ...`.
pub fn run_converge(cfg: &ExperimentConfig) -> Result<ConvergeReport> {
    let rs = cfg.distances(&[DEFAULT_CONVERGE_R])?;
    if rs.len() != 1 {
        return Err(Error::config("r", "converge takes a single distance"));
    }
    let r = rs[0];
    let kinds = cfg
        .optimizer
        .clone()
        .unwrap_or_else(|| OptimizerKind::ALL.to_vec());
    let model = cfg.measurement_model(0.0)?;
    let repeats = cfg.repeats()?;
    let settings = kinds
        .iter()
        .map(|k| cfg.optimizer_config(*k))
        .collect::<Result<Vec<_>>>()?;

    let mut jobs = Vec::new();
    for s in &settings {
        let n = if s.kind == OptimizerKind::SpsaQng {
            repeats
        } else {
            1
        };
        for i in 0..n {
            jobs.push(s.with_seed(s.seed.wrapping_add(i as u64)));
        }
    }
    let h = hamiltonian_at(r)?;
    let p0 = ParamVector::initial();
    let traces = jobs
        .par_iter()
        .map(|c| run_vqe(&h, &p0, c, &model))
        .collect::<Result<Vec<_>>>()?;

    let mean_converged_at = kinds
        .iter()
        .map(|k| {
            let steps: Vec<f64> = traces
                .iter()
                .filter(|t| t.kind == *k)
                .filter_map(|t| t.converged_at.map(|c| c as f64))
                .collect();
            (*k, (!steps.is_empty()).then(|| mean_std(&steps).0))
        })
        .collect();
    let spsa: Vec<&RunTrace> = traces
        .iter()
        .filter(|t| t.kind == OptimizerKind::SpsaQng)
        .collect();
    let summary = ConvergeSummary {
        r,
        ground_energy: ground_truth(&h)?.energy,
        optimizer_settings: settings,
        model,
        runs: traces.iter().map(RunSummary::of).collect(),
        mean_converged_at,
        spsa_per_step: step_stats(&spsa),
    };
    Ok(ConvergeReport { traces, summary })
}

pub const TRACE_HEADER: [&str; 12] = [
    "optimizer",
    "seed",
    "step",
    "energy_mj_mol",
    "fidelity",
    "grad_norm",
    "p1",
    "p2",
    "p3",
    "p4",
    "p5",
    "p6",
];

pub fn trace_csv<'a>(traces: impl IntoIterator<Item = &'a RunTrace>) -> Result<Vec<u8>> {
    let rows = traces.into_iter().flat_map(|t| {
        t.records.iter().map(move |r| {
            let mut row = vec![
                t.kind.to_string(),
                t.seed.to_string(),
                r.step.to_string(),
                decimal(r.energy),
                decimal(r.fidelity_to_ground),
                decimal(r.grad_norm),
            ];
            row.extend(r.params.0.iter().map(|x| decimal(*x)));
            row
        })
    });
    csv_bytes(&TRACE_HEADER, rows)
}

/// Runs [`run_converge`] and writes `converge_<optimizer>.csv` per optimizer
/// and `converge_summary.json`. Returns the written paths.
pub fn cmd_converge(cfg: &ExperimentConfig) -> Result<(ConvergeReport, Vec<PathBuf>)> {
    let report = run_converge(cfg)?;
    let dir = cfg.out_dir();
    let mut written = Vec::new();
    for kind in OptimizerKind::ALL {
        if report.traces_of(kind).next().is_none() {
            continue;
        }
        let path = dir.join(format!("converge_{kind}.csv"));
        write_atomic(&path, &trace_csv(report.traces_of(kind))?)?;
        written.push(path);
    }
    let path = dir.join("converge_summary.json");
    write_atomic(&path, &json_bytes(&report.summary)?)?;
    written.push(path);
    Ok((report, written))
}

// ------------------------------------------------------------------- curve

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSummaryRow {
    pub r: f64,
    pub e_theory: f64,
    pub e_mean: f64,
    pub e_std: f64,
    pub epsilon_c: f64,
    pub e_corrected: f64,
    pub abs_err_hartree: f64,
    pub fidelity_mean: f64,
    pub fidelity_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRun {
    pub r: f64,
    pub seed: u64,
    pub converged_at: Option<usize>,
    /// Five-step post-convergence mean, or the mean of the last records if
    /// the run never converged.
    pub final_energy: f64,
    pub final_fidelity: f64,
    pub steps: usize,
}

#[derive(Clone, Debug)]
pub struct CurveReport {
    pub epsilon_c: f64,
    pub rows: Vec<CurveSummaryRow>,
    pub runs: Vec<CurveRun>,
}

impl CurveReport {
    pub fn within_chemical_accuracy(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.abs_err_hartree <= crate::hamiltonian::CHEMICAL_ACCURACY_HARTREE)
            .count()
    }
}

/// Systematic shift averaged over `repeats` calibration measurements.
pub fn averaged_shift(model: &MeasurementModel, seed: u64, repeats: usize) -> Result<f64> {
    let shifts = (0..repeats as u64)
        .map(|i| {
            let mut rng = RandomStream::with_stream(seed.wrapping_add(i), CALIBRATION_STREAM);
            calibrate_shift(model, &mut rng).map(|c| c.epsilon_c)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_std(&shifts).0)
}

/// `repeats` runs of one optimizer (default spsa_qng) at every distance,
/// corrected by the calibrated shift.
pub fn run_curve(cfg: &ExperimentConfig) -> Result<CurveReport> {
    let rs = cfg.distances(&DISTANCES)?;
    let kind = match cfg.optimizer.as_deref() {
        None => OptimizerKind::SpsaQng,
        Some([k]) => *k,
        Some(_) => return Err(Error::config("optimizer", "curve takes a single optimizer")),
    };
    let opt = cfg.optimizer_config(kind)?;
    let model = cfg.measurement_model(0.0)?;
    let repeats = cfg.repeats()?;
    let epsilon_c = averaged_shift(&model, opt.seed, repeats)?;

    let jobs: Vec<(f64, u64)> = rs
        .iter()
        .flat_map(|r| (0..repeats as u64).map(move |i| (*r, opt.seed.wrapping_add(i))))
        .collect();
    let p0 = ParamVector::initial();
    let runs = jobs
        .par_iter()
        .map(|(r, seed)| {
            let h = hamiltonian_at(*r)?;
            let t = run_vqe(&h, &p0, &opt.with_seed(*seed), &model)?;
            Ok(CurveRun {
                r: *r,
                seed: *seed,
                converged_at: t.converged_at,
                final_energy: settled_energy(&t),
                final_fidelity: settled_fidelity(&t),
                steps: t.records.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let rows = rs
        .iter()
        .map(|r| {
            let e_theory = ground_truth(&hamiltonian_at(*r)?)?.energy;
            let mine: Vec<&CurveRun> = runs.iter().filter(|x| x.r == *r).collect();
            let e: Vec<f64> = mine.iter().map(|x| x.final_energy).collect();
            let f: Vec<f64> = mine.iter().map(|x| x.final_fidelity).collect();
            let (e_mean, e_std) = mean_std(&e);
            let (fidelity_mean, fidelity_std) = mean_std(&f);
            let e_corrected = e_mean - epsilon_c;
            Ok(CurveSummaryRow {
                r: *r,
                e_theory,
                e_mean,
                e_std,
                epsilon_c,
                e_corrected,
                abs_err_hartree: mj_to_hartree(e_corrected - e_theory).abs(),
                fidelity_mean,
                fidelity_std,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CurveReport {
        epsilon_c,
        rows,
        runs,
    })
}

pub const CURVE_HEADER: [&str; 9] = [
    "R",
    "E_theory",
    "E_mean",
    "E_std",
    "epsilon_c",
    "E_corrected",
    "abs_err_hartree",
    "fidelity_mean",
    "fidelity_std",
];

pub const CURVE_RUN_HEADER: [&str; 6] = [
    "R",
    "seed",
    "converged_at",
    "final_energy",
    "final_fidelity",
    "steps",
];

/// Runs [`run_curve`] and writes `curve_summary.csv` and `curve_runs.csv`.
pub fn cmd_curve(cfg: &ExperimentConfig) -> Result<(CurveReport, Vec<PathBuf>)> {
    let report = run_curve(cfg)?;
    let dir = cfg.out_dir();
    let summary = csv_bytes(
        &CURVE_HEADER,
        report.rows.iter().map(|r| {
            vec![
                r.r.to_string(),
                decimal(r.e_theory),
                decimal(r.e_mean),
                decimal(r.e_std),
                decimal(r.epsilon_c),
                decimal(r.e_corrected),
                decimal(r.abs_err_hartree),
                decimal(r.fidelity_mean),
                decimal(r.fidelity_std),
            ]
        }),
    )?;
    let runs = csv_bytes(
        &CURVE_RUN_HEADER,
        report.runs.iter().map(|x| {
            vec![
                x.r.to_string(),
                x.seed.to_string(),
                x.converged_at.map(|c| c.to_string()).unwrap_or_default(),
                decimal(x.final_energy),
                decimal(x.final_fidelity),
                x.steps.to_string(),
            ]
        }),
    )?;
    let a = dir.join("curve_summary.csv");
    let b = dir.join("curve_runs.csv");
    write_atomic(&a, &summary)?;
    write_atomic(&b, &runs)?;
    Ok((report, vec![a, b]))
}

// ------------------------------------------------------------ characterize

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacterizeStats {
    pub samples: usize,
    pub seed: u64,
    pub model: MeasurementModel,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    /// Fidelities below the first histogram bin.
    pub underflow: usize,
}

#[derive(Clone, Debug)]
pub struct CharacterizeReport {
    pub fidelities: Vec<f64>,
    pub histogram: Vec<HistogramBin>,
    pub stats: CharacterizeStats,
}

/// Fidelity √D̂ of one prepare-and-measure experiment on a Haar-random
/// target, sample `i` of the stream seeded by `seed`.
pub fn characterize_sample(seed: u64, i: u64, model: &MeasurementModel) -> f64 {
    let mut rng = RandomStream::with_stream(seed, i);
    let target = haar_random_state(&mut rng);
    let a = state_to_angles(&target);
    let d = estimate_overlap(&compile_prep(&a), &compile_meas(&a), model, &mut rng);
    d.max(0.0).sqrt()
}

pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> (Vec<HistogramBin>, usize) {
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    let mut underflow = 0;
    for v in values {
        if *v < lo {
            underflow += 1;
            continue;
        }
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let out = counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            lo: lo + k as f64 * width,
            hi: lo + (k + 1) as f64 * width,
            count,
        })
        .collect();
    (out, underflow)
}

/// `samples` noisy prepare-and-measure experiments (default σ = 0.01 rad,
/// exact overlaps).
pub fn run_characterize(cfg: &ExperimentConfig) -> Result<CharacterizeReport> {
    let samples = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
    if samples == 0 {
        return Err(Error::config("samples", "must be at least 1"));
    }
    let bins = cfg.bins.unwrap_or(DEFAULT_BINS);
    if bins == 0 {
        return Err(Error::config("bins", "must be at least 1"));
    }
    let hist_min = cfg.hist_min.unwrap_or(DEFAULT_HIST_MIN);
    if !(hist_min.is_finite() && hist_min < 1.0) {
        return Err(Error::config("hist_min", "must be below 1"));
    }
    let model = cfg.measurement_model(DEFAULT_PHASE_SIGMA)?;
    let seed = cfg.seed();
    let fidelities: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| characterize_sample(seed, i, &model))
        .collect();
    let (mean, std) = mean_std(&fidelities);
    let (histogram, underflow) = histogram(&fidelities, hist_min, 1.0, bins);
    let stats = CharacterizeStats {
        samples,
        seed,
        model,
        mean,
        std,
        min: fidelities.iter().cloned().fold(f64::INFINITY, f64::min),
        max: fidelities.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        underflow,
    };
    Ok(CharacterizeReport {
        fidelities,
        histogram,
        stats,
    })
}

/// Runs [`run_characterize`] and writes `characterize_histogram.csv` and
/// `characterize_stats.json`.
pub fn cmd_characterize(cfg: &ExperimentConfig) -> Result<(CharacterizeReport, Vec<PathBuf>)> {
    let report = run_characterize(cfg)?;
    let dir = cfg.out_dir();
    let hist = csv_bytes(
        &["bin_lo", "bin_hi", "count"],
        report
            .histogram
            .iter()
            .map(|b| vec![decimal(b.lo), decimal(b.hi), b.count.to_string()]),
    )?;
    let a = dir.join("characterize_histogram.csv");
    let b = dir.join("characterize_stats.json");
    write_atomic(&a, &hist)?;
    write_atomic(&b, &json_bytes(&report.stats)?)?;
    Ok((report, vec![a, b]))
}

// ----------------------------------------------------------------- compile

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompiledSettings {
    pub direction: Direction,
    pub hardware_offset: bool,
    /// PS1..PS6 for `prep`, PS7..PS12 for `meas`, in radians.
    pub settings: [f64; 6],
    /// Port-2 probability when the compiled circuit is paired with the
    /// ideal circuit for the same state.
    pub verified_overlap: f64,
}

/// Parses `a1,a2,a3,a4` where each amplitude is a real or complex literal
/// such as `0.5`, `-0.5i` or `0.3+0.4i`.
pub fn parse_state(text: &str) -> Result<StateVector> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(Error::config(
            "state",
            format!("expected 4 amplitudes, got {}", parts.len()),
        ));
    }
    let mut amp = [Complex64::new(0.0, 0.0); 4];
    for (a, p) in amp.iter_mut().zip(&parts) {
        *a = p
            .replace(' ', "")
            .parse()
            .map_err(|_| Error::config("state", format!("`{p}` is not a complex number")))?;
    }
    Ok(StateVector(amp))
}

fn target_state(cfg: &ExperimentConfig) -> Result<StateVector> {
    match (&cfg.state, &cfg.params) {
        (Some(_), Some(_)) => Err(Error::config(
            "state",
            "give either `state` or `params`, not both",
        )),
        (Some(s), None) => {
            let s = parse_state(s)?;
            s.ensure_normalized(STATE_NORM_TOL)?;
            Ok(s)
        }
        (None, Some(p)) => {
            let p: [f64; 6] = p.as_slice().try_into().map_err(|_| {
                Error::config("params", format!("expected 6 phases, got {}", p.len()))
            })?;
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::config("params", "phases must be finite"));
            }
            Ok(state_from_params(&ParamVector(p)))
        }
        (None, None) => Err(Error::config(
            "state",
            "one of `state` or `params` is required",
        )),
    }
}

/// Phase settings that prepare (or project onto) the requested state.
pub fn run_compile(cfg: &ExperimentConfig) -> Result<CompiledSettings> {
    let target = target_state(cfg)?;
    let direction = cfg.direction.unwrap_or(Direction::Prep);
    let hardware_offset = cfg.hardware_offset.unwrap_or(false);
    if hardware_offset && direction == Direction::Meas {
        return Err(Error::config(
            "hardware_offset",
            "applies to the prep circuit only",
        ));
    }
    let a = state_to_angles(&target);
    let raw = compile_settings(&a, direction, false);
    let (prep, meas) = match direction {
        Direction::Prep => (crate::ansatz::PrepSettings(raw), compile_meas(&a)),
        Direction::Meas => (compile_prep(&a), crate::ansatz::MeasSettings(raw)),
    };
    let probs = port_probabilities(&prep, &meas, &NoiseModel::off(), &mut RandomStream::new(0));
    let settings =
        compile_settings(&a, direction, hardware_offset).map(|x| significant(x, SETTINGS_DIGITS));
    Ok(CompiledSettings {
        direction,
        hardware_offset,
        settings,
        verified_overlap: probs[READOUT_PORT],
    })
}

/// Runs [`run_compile`] and writes `compile_<direction>.json`.
pub fn cmd_compile(cfg: &ExperimentConfig) -> Result<(CompiledSettings, Vec<PathBuf>)> {
    let compiled = run_compile(cfg)?;
    let name = match compiled.direction {
        Direction::Prep => "compile_prep.json",
        Direction::Meas => "compile_meas.json",
    };
    let path = cfg.out_dir().join(name);
    write_atomic(&path, &json_bytes(&compiled)?)?;
    Ok((compiled, vec![path]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn quick() -> ExperimentConfig {
        ExperimentConfig {
            repeats: Some(2),
            max_iters: Some(40),
            ..Default::default()
        }
    }

    #[test]
    fn config_parses_flat_json_and_names_unknown_keys() {
        let c = ExperimentConfig::from_json_str(
            r#"{"r": 0.9, "optimizer": ["rqng", "vanilla"], "noise_sigma": 0.02}"#,
        )
        .unwrap();
        assert_eq!(c.r, Some(vec![0.9]));
        assert_eq!(
            c.optimizer,
            Some(vec![OptimizerKind::Rqng, OptimizerKind::Vanilla])
        );
        assert_eq!(c.noise_sigma, Some(0.02));
        let c =
            ExperimentConfig::from_json_str(r#"{"r": [0.4, 3], "optimizer": "spsa_qng"}"#).unwrap();
        assert_eq!(c.r, Some(vec![0.4, 3.0]));
        let err = ExperimentConfig::from_json_str(r#"{"learning_rate": 1}"#).unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("learning_rate"));
    }

    #[test]
    fn flags_override_file() {
        let file = ExperimentConfig {
            eta: Some(0.1),
            seed: Some(5),
            ..Default::default()
        };
        let flags = ExperimentConfig {
            eta: Some(0.2),
            ..Default::default()
        };
        let merged = flags.overlay(file);
        assert_eq!(merged.eta, Some(0.2));
        assert_eq!(merged.seed, Some(5));
    }

    #[test]
    fn invalid_values_name_their_key() {
        let cases = [
            (
                ExperimentConfig {
                    eta: Some(-1.0),
                    ..Default::default()
                },
                "eta",
            ),
            (
                ExperimentConfig {
                    alpha: Some(2.0),
                    ..Default::default()
                },
                "alpha",
            ),
            (
                ExperimentConfig {
                    repeats: Some(0),
                    ..Default::default()
                },
                "repeats",
            ),
            (
                ExperimentConfig {
                    shots: Some(0),
                    ..Default::default()
                },
                "shots",
            ),
            (
                ExperimentConfig {
                    noise_sigma: Some(-0.1),
                    ..Default::default()
                },
                "noise_sigma",
            ),
            (
                ExperimentConfig {
                    r: Some(vec![0.6]),
                    ..Default::default()
                },
                "r",
            ),
            (
                ExperimentConfig {
                    exact: Some(true),
                    shots: Some(10),
                    ..Default::default()
                },
                "exact",
            ),
        ];
        for (cfg, key) in cases {
            let err = run_converge(&cfg).unwrap_err();
            match err {
                Error::Config { key: k, .. } => assert_eq!(k, key),
                other => panic!("{key}: unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn measurement_model_defaults() {
        let c = ExperimentConfig::default();
        assert!(c.measurement_model(0.0).unwrap().is_exact());
        let m = c.measurement_model(DEFAULT_PHASE_SIGMA).unwrap();
        assert_eq!(m.shots, ShotPolicy::Exact);
        assert!(m.noise.is_active());
        let c = ExperimentConfig {
            shots: Some(4500),
            ..Default::default()
        };
        assert_eq!(
            c.measurement_model(0.0).unwrap().shots,
            ShotPolicy::Sampled { shots: 4500 }
        );
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn decimal_formatting() {
        assert_eq!(decimal(0.5), "0.500000000000");
        assert_eq!(decimal(-2.8626), "-2.86260000000");
        assert_eq!(decimal(1234.5), "1234.50000000");
        assert_eq!(decimal(0.0), "0.00000000000");
        let d = decimal(1.234567e-5);
        assert!(!d.contains('e'));
        assert_eq!(d.parse::<f64>().unwrap(), 1.234567e-5);
        assert_eq!(significant(PI, 12), 3.14159265359);
    }

    #[test]
    fn converge_reports_every_optimizer() {
        let report = run_converge(&quick()).unwrap();
        assert_eq!(report.traces_of(OptimizerKind::Vanilla).count(), 1);
        assert_eq!(report.traces_of(OptimizerKind::Rqng).count(), 1);
        let seeds: Vec<u64> = report
            .traces_of(OptimizerKind::SpsaQng)
            .map(|t| t.seed)
            .collect();
        assert_eq!(seeds, vec![0, 1]);
        let s0 = &report.summary.spsa_per_step[0];
        assert!((s0.energy_mean - (-2.0234)).abs() < 1e-4);
        assert_eq!(s0.energy_std, 0.0);
    }

    #[test]
    fn converge_output_is_byte_identical_across_runs() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let base = ExperimentConfig {
            repeats: Some(1),
            seed: Some(3),
            shots: Some(4500),
            max_iters: Some(10),
            ..Default::default()
        };
        let (_, pa) = cmd_converge(&ExperimentConfig {
            out_dir: Some(a.path().into()),
            ..base.clone()
        })
        .unwrap();
        let (_, pb) = cmd_converge(&ExperimentConfig {
            out_dir: Some(b.path().into()),
            ..base
        })
        .unwrap();
        assert_eq!(pa.len(), 4);
        for (x, y) in pa.iter().zip(&pb) {
            assert_eq!(x.file_name(), y.file_name());
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
        }
        let text = fs::read_to_string(&pa[0]).unwrap();
        assert!(text.starts_with(
            "optimizer,seed,step,energy_mj_mol,fidelity,grad_norm,p1,p2,p3,p4,p5,p6\n"
        ));
        assert!(!a.path().join("converge_vanilla.csv.tmp").exists());
    }

    #[test]
    fn curve_rows_cover_requested_distances() {
        let cfg = ExperimentConfig {
            r: Some(vec![0.4, 2.0]),
            ..quick()
        };
        let report = run_curve(&cfg).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.runs.len(), 4);
        assert!(report.epsilon_c.abs() < 1e-9);
        for row in &report.rows {
            let expect = mj_to_hartree(row.e_corrected - row.e_theory).abs();
            assert_eq!(row.abs_err_hartree, expect);
        }
    }

    #[test]
    fn noiseless_characterization_is_perfect() {
        let cfg = ExperimentConfig {
            samples: Some(50),
            noise_sigma: Some(0.0),
            ..Default::default()
        };
        let r = run_characterize(&cfg).unwrap();
        assert!((r.stats.mean - 1.0).abs() < 1e-9);
        assert!(r.stats.std < 1e-9);
        assert_eq!(r.histogram.last().unwrap().count, 50);
    }

    #[test]
    fn characterization_is_reproducible() {
        let cfg = ExperimentConfig {
            samples: Some(200),
            seed: Some(4),
            ..Default::default()
        };
        let a = run_characterize(&cfg).unwrap();
        let b = run_characterize(&cfg).unwrap();
        assert_eq!(a.fidelities, b.fidelities);
        assert_eq!(a.histogram, b.histogram);
        let total: usize = a.histogram.iter().map(|h| h.count).sum();
        assert_eq!(total + a.stats.underflow, 200);
    }

    #[test]
    fn compile_uniform_state() {
        let cfg = ExperimentConfig {
            state: Some("0.5,0.5,0.5,0.5".into()),
            ..Default::default()
        };
        let c = run_compile(&cfg).unwrap();
        let expect = [PI / 2.0, 3.0 * PI / 2.0, PI / 2.0, PI / 2.0, PI / 2.0, 0.0];
        for (x, e) in c.settings.iter().zip(expect) {
            assert!((x - e).abs() < 1e-11);
        }
        assert!((c.verified_overlap - 1.0).abs() < 1e-12);

        let off = run_compile(&ExperimentConfig {
            hardware_offset: Some(true),
            ..cfg
        })
        .unwrap();
        assert!((off.settings[3] - 1.5 * PI).abs() < 1e-11);
        assert!((off.settings[0] - PI / 2.0).abs() < 1e-11);
    }

    #[test]
    fn compile_meas_for_basis_two() {
        let cfg = ExperimentConfig {
            state: Some("0, 1, 0, 0".into()),
            direction: Some(Direction::Meas),
            ..Default::default()
        };
        let c = run_compile(&cfg).unwrap();
        let mut rng = RandomStream::new(0);
        let prep = compile_prep(&state_to_angles(&StateVector::basis(2)));
        let p = port_probabilities(
            &prep,
            &crate::ansatz::MeasSettings(c.settings),
            &NoiseModel::off(),
            &mut rng,
        );
        assert!((p[READOUT_PORT] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn compile_rejects_bad_states() {
        let cfg = ExperimentConfig {
            state: Some("1,1,0,0".into()),
            ..Default::default()
        };
        assert!(matches!(
            run_compile(&cfg),
            Err(Error::NotNormalized { .. })
        ));
        let cfg = ExperimentConfig {
            state: Some("1,0,0".into()),
            ..Default::default()
        };
        assert!(run_compile(&cfg).unwrap_err().is_config());
        let s = parse_state("0.5i, -0.5, 0.5-0i, 0.3+0.4i").unwrap();
        assert_eq!(s[0], Complex64::new(0.0, 0.5));
        assert_eq!(s[3], Complex64::new(0.3, 0.4));
    }

    #[test]
    fn compile_from_params() {
        let cfg = ExperimentConfig {
            params: Some(ParamVector::initial().0.to_vec()),
            ..Default::default()
        };
        let c = run_compile(&cfg).unwrap();
        for (x, e) in c.settings.iter().zip(ParamVector::initial().0) {
            assert!((x - e).abs() < 1e-11);
        }
    }
}
