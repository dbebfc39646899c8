//! `qdot` — sweeps, figure reproduction, exceptional-point search and
//! fixed-point solutions for double-quantum-dot transmission.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 when a sweep
//! finished but more cells failed than `--fail-threshold` allows.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use qdot_core::branchpoints::{find_ep_numeric, EpSearch};
use qdot_core::model::DoubleDotSpec;
use qdot_core::presets::{reproduce_figure, FIGURE_IDS};
use qdot_core::spectral::solve_fixed_points;
use qdot_core::sweep::{export, run_sweep, SweepConfig};

#[derive(Parser)]
#[command(name = "qdot", version, about = "Double-quantum-dot transmission and exceptional points")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a parameter sweep described by a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Maximum number of failed grid cells before exiting with code 3.
        #[arg(long, default_value_t = 0)]
        fail_threshold: usize,
    },
    /// Write the data files for a built-in figure preset (fig1 ... fig14).
    Figure {
        id: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Locate an eigenvalue coalescence over two parameters.
    FindEp {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve the resonance fixed-point equations.
    FixedPoints {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Deserialize)]
struct FixedPointsConfig {
    spec: DoubleDotSpec,
    /// Eigenvalue branch to solve; all branches when omitted.
    #[serde(default)]
    label: Option<usize>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Sweep {
            config,
            out,
            fail_threshold,
        } => {
            let mut cfg = SweepConfig::from_json_file(&config).map_err(|e| e.to_string())?;
            if let Some(dir) = out {
                cfg.output = Some(dir);
            }
            let dir = cfg
                .output
                .clone()
                .ok_or("no output directory: set `output` in the config or pass --out")?;
            let result = run_sweep(&cfg).map_err(|e| e.to_string())?;
            let files = export(&result, &dir).map_err(|e| e.to_string())?;
            for f in &files {
                println!("wrote {}", f.display());
            }
            if !result.errors.is_empty() {
                eprintln!("{} grid cell(s) failed", result.errors.len());
            }
            if result.errors.len() > fail_threshold {
                return Ok(ExitCode::from(EXIT_PARTIAL));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Figure { id, out } => {
            if !FIGURE_IDS.contains(&id.as_str()) {
                return Err(format!(
                    "unknown figure id `{id}` (known: {})",
                    FIGURE_IDS.join(", ")
                ));
            }
            let files = reproduce_figure(&id, &out).map_err(|e| e.to_string())?;
            for f in &files {
                println!("wrote {}", f.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::FindEp { config } => {
            let text = std::fs::read_to_string(&config).map_err(|e| e.to_string())?;
            let search: EpSearch = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            let bp = find_ep_numeric(&search).map_err(|e| e.to_string())?;
            println!(
                "{}",
                serde_json::to_string_pretty(&bp).map_err(|e| e.to_string())?
            );
            if !bp.converged {
                eprintln!(
                    "warning: Newton did not converge; best candidate with residual {:e}",
                    bp.residual
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::FixedPoints { config } => {
            let text = std::fs::read_to_string(&config).map_err(|e| e.to_string())?;
            let cfg: FixedPointsConfig = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            cfg.spec.validate().map_err(|e| e.to_string())?;
            let labels: Vec<usize> = match cfg.label {
                Some(l) => vec![l],
                None => (0..cfg.spec.dim()).collect(),
            };
            let mut all = Vec::new();
            for label in labels {
                match solve_fixed_points(&cfg.spec, label) {
                    Ok(mut roots) => all.append(&mut roots),
                    Err(qdot_core::Error::NoRootInBand(_)) => {}
                    Err(e) => return Err(e.to_string()),
                }
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&all).map_err(|e| e.to_string())?
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}
