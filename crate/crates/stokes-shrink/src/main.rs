//! Thin command-line front end: parse the config, dispatch one command
//! through the harness, print the audit summary, exit 0 iff all audits pass.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use stokes_shrink::harness::{run, ExperimentConfig};

#[derive(Parser, Debug)]
#[command(
    name = "stokes-shrink",
    about = "Stokes/Navier-Stokes spectral toolkit on a disk with a shrinking concentric hole",
    after_help = "Commands: eigens | sweep | harmonic-audit | semigroup-gap | ns-run | ns-sweep | audit-all"
)]
struct Cli {
    /// Command to run.
    command: String,
    /// Path to the TOML configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides of the form section.key=value (repeatable).
    #[arg(trailing_var_arg = true)]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match ExperimentConfig::load(&cli.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = cfg.apply_overrides(&cli.overrides) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(&cfg, &cli.command) {
        Ok(record) => {
            println!(
                "{}: id {} | {} passes, {} failures | {} ms",
                record.command, record.id, record.passes, record.failures, record.wall_ms
            );
            for name in record.payloads.keys() {
                println!("  wrote {}/{name}", cfg.output.directory);
            }
            if record.failures == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
