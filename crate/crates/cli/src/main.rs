use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dqho_cli::config::ScenarioConfig;
use dqho_cli::runner::{self, RunError};
use dqho_cli::{output, presets};
use dqho_core::fock_oracle::DEFAULT_DIM;

#[derive(Parser)]
#[command(name = "dqho", version, about = "Driven quantum harmonic oscillator thermal machines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Overrides {
    /// Fraction of the maximal stable time step, in (0, 1].
    #[arg(long)]
    dt_factor: Option<f64>,
    /// Relative limit-cycle convergence tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write its time series.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Evaluate every grid point of the scenario's sweep axes.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Regenerate the data behind a figure.
    Reproduce {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(presets::FIGURES))]
        figure: String,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Compare the truncated Fock-space integrator with the Gaussian one (single oscillator).
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of driving periods to integrate.
        #[arg(long, default_value_t = 5.0)]
        periods: f64,
        /// Initial Fock-space truncation.
        #[arg(long, default_value_t = DEFAULT_DIM)]
        dim: usize,
    },
    /// Check a scenario file and print it in normalised form.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &Path, overrides: Option<&Overrides>) -> Result<ScenarioConfig, RunError> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(o) = overrides {
        apply(&mut cfg, o)?;
    }
    Ok(cfg)
}

fn apply(cfg: &mut ScenarioConfig, o: &Overrides) -> Result<(), RunError> {
    if let Some(f) = o.dt_factor {
        cfg.run.dt_factor = f;
    }
    if let Some(t) = o.tol {
        cfg.run.rel_tol = t;
    }
    cfg.validate()?;
    Ok(())
}

fn write(path: &Path, text: &str) -> Result<(), RunError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

fn meta_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

/// Writes the CSV to `out` (or stdout) and, for files, the sidecar metadata next to it.
fn emit(out: Option<PathBuf>, cfg: &ScenarioConfig, csv: &str, meta: &str) -> Result<(), RunError> {
    match out.or_else(|| cfg.output.as_ref().map(PathBuf::from)) {
        Some(path) => {
            write(&path, csv)?;
            write(&meta_path(&path), meta)
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn sweep_to(cfg: &ScenarioConfig, workers: usize, out: Option<PathBuf>) -> Result<(), RunError> {
    let results = runner::sweep(cfg, workers)?;
    emit(out, cfg, &output::sweep_csv(cfg, &results), &output::sweep_meta(cfg, &results))?;
    let Some(e) = runner::first_failure(&results) else {
        return Ok(());
    };
    let msg = format!("sweep point failed: {e}");
    Err(match e {
        RunError::Physicality(_) => RunError::Physicality(msg),
        RunError::Config(_) => RunError::Config(dqho_cli::ConfigError::Invalid(msg)),
        RunError::Io(_) => RunError::Io(msg),
        RunError::NotConverged(_) => RunError::NotConverged(msg),
    })
}

fn run_to(cfg: &ScenarioConfig, out: Option<PathBuf>) -> Result<(), RunError> {
    let res = runner::run(cfg)?;
    emit(out, cfg, &output::run_csv(&res), &output::run_meta(cfg, &res))
}

fn execute(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Run { config, out, overrides } => run_to(&load(&config, Some(&overrides))?, out),
        Command::Sweep { config, out, workers, overrides } => {
            let cfg = load(&config, Some(&overrides))?;
            if cfg.sweep.is_empty() {
                return Err(dqho_cli::ConfigError::Invalid("scenario has no [[sweep]] axes".into()).into());
            }
            sweep_to(&cfg, workers, out)
        }
        Command::Reproduce { figure, out, workers, overrides } => {
            let scenarios = presets::preset(&figure).expect("figure names are checked by the parser");
            for (stem, mut cfg) in scenarios {
                apply(&mut cfg, &overrides)?;
                let path = out.join(format!("{stem}.csv"));
                if cfg.sweep.is_empty() {
                    run_to(&cfg, Some(path.clone()))?;
                } else {
                    sweep_to(&cfg, workers, Some(path.clone()))?;
                }
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Oracle { config, out, periods, dim } => {
            let cfg = load(&config, None)?;
            let cmp = runner::oracle(&cfg, periods, dim)?;
            emit(out, &cfg, &output::oracle_csv(&cmp), &output::oracle_meta(&cfg, periods))
        }
        Command::Validate { config } => {
            let cfg = load(&config, None)?;
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
