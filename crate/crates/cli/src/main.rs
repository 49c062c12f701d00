//! `cuga`: experiment driver for continuous utility game analysis.
//!
//! Subcommands:
//!   cuga bounds   --config F            price-of-anarchy bound sweep
//!   cuga maximize --config F            Frank-Wolfe / D-noRegret comparison
//!   cuga verify   --config F [--seed N] [--out DIR]   property verification
//!
//! Exit codes: 0 success, 1 property failure (verify), 2 config error.

mod bounds;
mod config;
mod maximize;
mod runner;
mod svg;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ExperimentConfig, Kind};

#[derive(Parser)]
#[command(name = "cuga", version, about = "continuous utility game analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Path to a `cuga-config v1` file.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep random markets and write curvature-based PoA bounds.
    Bounds(ConfigArg),
    /// Compare maximization methods on sensor coverage instances.
    Maximize(ConfigArg),
    /// Check game-theoretic properties of one instance.
    Verify {
        #[command(flatten)]
        config: ConfigArg,
        /// Override the config's seed list with a single seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &PathBuf, expected: Kind) -> Result<ExperimentConfig, config::ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| config::ConfigError {
        field: "config".into(),
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let cfg = ExperimentConfig::parse(&text)?;
    if cfg.kind != expected {
        return Err(config::ConfigError {
            field: "kind".into(),
            message: "config kind does not match the subcommand".into(),
        });
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<ExitCode, config::ConfigError> = match cli.command {
        Command::Bounds(arg) => load(&arg.config, Kind::BoundsSweep).map(|cfg| {
            let out = cfg.out.clone();
            match bounds::run(&cfg, &out) {
                Ok(rows) => {
                    println!("wrote {} rows to {}", rows.len(), out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("i/o error: {e}");
                    ExitCode::FAILURE
                }
            }
        }),
        Command::Maximize(arg) => load(&arg.config, Kind::MaximizeCompare).map(|cfg| {
            let out = cfg.out.clone();
            match maximize::run(&cfg, &out) {
                Ok(rows) => {
                    println!("wrote {} rows to {}", rows.len(), out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("i/o error: {e}");
                    ExitCode::FAILURE
                }
            }
        }),
        Command::Verify { config, seed, out } => {
            load(&config.config, Kind::Verify).map(|mut cfg| {
                if let Some(s) = seed {
                    cfg.seeds = vec![s];
                }
                let out_dir = out.unwrap_or_else(|| cfg.out.clone());
                match verify::run(&cfg, Some(&out_dir)) {
                    Ok(true) => {
                        println!("verify: all properties hold");
                        ExitCode::SUCCESS
                    }
                    Ok(false) => {
                        println!("verify: property failure");
                        ExitCode::FAILURE
                    }
                    Err(e) => {
                        eprintln!("i/o error: {e}");
                        ExitCode::FAILURE
                    }
                }
            })
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}
