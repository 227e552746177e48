use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use projcons_cli::compare::{compare, write_report, GridSpec};
use projcons_cli::config::{load_config, ExperimentConfig};
use projcons_cli::experiment::{run_experiment, RunError};
use projcons_cli::preset::preset;

#[derive(Parser)]
#[command(name = "projcons", version, about = "Approximate projected consensus experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: the config's output_dir, else runs/NAME).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in experiment, or print its config.
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the preset's JSON config instead of running it.
        #[arg(long)]
        emit_config: bool,
    },
    /// Compare two configs on h at the final step.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Sweep shared starting points START:STEP:COUNT on both axes.
        #[arg(long)]
        grid: Option<GridSpec>,
        #[arg(long, default_value = "runs/compare")]
        out: PathBuf,
    },
}

fn out_dir(config: &ExperimentConfig, out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| config.output_dir.clone()).unwrap_or_else(|| Path::new("runs").join(&config.name))
}

fn run_and_report(config: &ExperimentConfig, out: Option<PathBuf>) -> ExitCode {
    let dir = out_dir(config, out);
    match run_experiment(config, &dir) {
        Ok(s) => {
            println!(
                "{}: {} steps, final h {}, final diameter {}, diverged {} -> {}",
                s.name,
                s.steps,
                s.final_h,
                s.final_diameter,
                s.diverged,
                dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e, e.exit_code()),
    }
}

fn fail(e: &dyn std::fmt::Display, code: i32) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed, out } => match load_config(&config) {
            Ok(mut c) => {
                if let Some(seed) = seed {
                    c.seed = seed;
                }
                run_and_report(&c, out)
            }
            Err(e) => {
                let e = RunError::from(e);
                fail(&e, e.exit_code())
            }
        },
        Command::Preset { name, out, emit_config } => match preset(&name) {
            Ok(c) if emit_config => {
                print!("{}", c.to_pretty_json());
                ExitCode::SUCCESS
            }
            Ok(c) => run_and_report(&c, out),
            Err(e) => fail(&e, 2),
        },
        Command::Compare { a, b, grid, out } => {
            let load = |p: &Path| load_config(p).with_context(|| format!("loading {}", p.display()));
            let (ca, cb) = match (load(&a), load(&b)) {
                (Ok(ca), Ok(cb)) => (ca, cb),
                (Err(e), _) | (_, Err(e)) => return fail(&format!("{e:#}"), 2),
            };
            match compare(&ca, &cb, grid) {
                Ok(report) => {
                    if let Err(e) = write_report(&report, &out) {
                        return fail(&e, e.exit_code());
                    }
                    println!(
                        "{} wins {}, {} wins {}, ties {} ({} starting points) -> {}",
                        report.a,
                        report.wins_a,
                        report.b,
                        report.wins_b,
                        report.ties,
                        report.cells.len(),
                        out.display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e, e.exit_code()),
            }
        }
    }
}
