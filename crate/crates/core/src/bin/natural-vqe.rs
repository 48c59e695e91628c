use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use natural_vqe::ansatz::Direction;
use natural_vqe::experiments::{self, ExperimentConfig};
use natural_vqe::optimize::OptimizerKind;
use natural_vqe::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_IO: u8 = 1;

#[derive(Parser)]
#[command(
    name = "natural-vqe",
    version,
    about = "Photonic ququart VQE for He-H⁺"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare vanilla, rqng and spsa_qng convergence at one bond length.
    Converge(Common),
    /// Dissociation curve over the tabulated bond lengths.
    Curve(Common),
    /// Fidelity histogram of noisy prepare-and-measure experiments.
    Characterize(Characterize),
    /// Phase settings for a state or parameter vector.
    Compile(Compile),
}

#[derive(Args)]
struct Common {
    /// Bond length(s) in Å, comma separated.
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<f64>>,
    /// Optimizer(s): vanilla, rqng, spsa_qng.
    #[arg(long, value_delimiter = ',')]
    optimizer: Option<Vec<OptimizerKind>>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eigenvalue_floor: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Args)]
struct Shared {
    /// Base seed; falls back to NATURAL_VQE_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Photons per overlap estimate.
    #[arg(long, conflicts_with = "exact")]
    shots: Option<u64>,
    /// Gaussian phase noise per shifter, radians.
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Use exact port probabilities instead of sampled photon counts.
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Flat JSON file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct Characterize {
    /// Number of random target states.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    /// Lower edge of the histogram.
    #[arg(long)]
    hist_min: Option<f64>,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Args)]
struct Compile {
    /// Four comma-separated amplitudes, e.g. `0.5,0.5i,-0.5,0.5`.
    #[arg(long, allow_hyphen_values = true)]
    state: Option<String>,
    /// Six preparation phases instead of a state.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    params: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_direction)]
    direction: Option<Direction>,
    /// Add π to PS4..PS6 of the preparation circuit.
    #[arg(long)]
    hardware_offset: bool,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    match s {
        "prep" => Ok(Direction::Prep),
        "meas" => Ok(Direction::Meas),
        _ => Err(format!("expected `prep` or `meas`, got `{s}`")),
    }
}

impl Shared {
    fn into_config(self, base: ExperimentConfig) -> (ExperimentConfig, Option<PathBuf>) {
        let cfg = ExperimentConfig {
            seed: self.seed,
            shots: self.shots,
            noise_sigma: self.noise_sigma,
            exact: self.exact.then_some(true),
            out_dir: self.out_dir,
            ..base
        };
        (cfg, self.config)
    }
}

fn flags(command: Command) -> (&'static str, ExperimentConfig, Option<PathBuf>) {
    match command {
        Command::Converge(c) => {
            let (cfg, file) = common(c);
            ("converge", cfg, file)
        }
        Command::Curve(c) => {
            let (cfg, file) = common(c);
            ("curve", cfg, file)
        }
        Command::Characterize(c) => {
            let (cfg, file) = c.shared.into_config(ExperimentConfig {
                samples: c.samples,
                bins: c.bins,
                hist_min: c.hist_min,
                ..Default::default()
            });
            ("characterize", cfg, file)
        }
        Command::Compile(c) => {
            let cfg = ExperimentConfig {
                state: c.state,
                params: c.params,
                direction: c.direction,
                hardware_offset: c.hardware_offset.then_some(true),
                out_dir: c.out_dir,
                ..Default::default()
            };
            ("compile", cfg, c.config)
        }
    }
}

fn common(c: Common) -> (ExperimentConfig, Option<PathBuf>) {
    c.shared.into_config(ExperimentConfig {
        r: c.r,
        optimizer: c.optimizer,
        eta: c.eta,
        epsilon: c.epsilon,
        alpha: c.alpha,
        eigenvalue_floor: c.eigenvalue_floor,
        max_iters: c.max_iters,
        repeats: c.repeats,
        ..Default::default()
    })
}

fn run(command: Command) -> natural_vqe::Result<()> {
    let (name, cfg, file) = flags(command);
    let base = match file {
        Some(path) => ExperimentConfig::from_file(&path)?,
        None => ExperimentConfig::default(),
    };
    let cfg = cfg.overlay(base).with_env_seed()?;
    let written = match name {
        "converge" => {
            let (report, paths) = experiments::cmd_converge(&cfg)?;
            for (kind, mean) in &report.summary.mean_converged_at {
                match mean {
                    Some(m) => println!("{kind}: converged at step {m:.1}"),
                    None => println!("{kind}: did not converge"),
                }
            }
            paths
        }
        "curve" => {
            let (report, paths) = experiments::cmd_curve(&cfg)?;
            for row in &report.rows {
                println!(
                    "R={:<4} E_theory={:.4} E_corrected={:.4} |err|={:.5} Ha",
                    row.r, row.e_theory, row.e_corrected, row.abs_err_hartree
                );
            }
            paths
        }
        "characterize" => {
            let (report, paths) = experiments::cmd_characterize(&cfg)?;
            println!(
                "fidelity {:.5} ± {:.5} over {} samples",
                report.stats.mean, report.stats.std, report.stats.samples
            );
            paths
        }
        _ => {
            let (compiled, paths) = experiments::cmd_compile(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&compiled)?);
            paths
        }
    };
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match &e {
                e if e.is_config() => EXIT_CONFIG,
                Error::Numerical(_) => EXIT_NUMERICAL,
                _ => EXIT_IO,
            })
        }
    }
}
