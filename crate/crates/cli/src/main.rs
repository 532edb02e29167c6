//! `cmab` command-line runner.
//!
//! Every verb writes CSV or JSON to files or stdout. On failure the process
//! exits with status 1 and prints one JSON object on stderr:
//! `{"error": "<kind>", "message": "<text>"}`.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cmab::harness::{self, ExperimentConfig};
use cmab::robustlab::{random_corpus, run_corpus, write_margin_csv, RobustnessConfig};
use cmab::{Error, Result};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "cmab",
    version,
    about = "Combinatorial bandit experiments with full-bandit feedback"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory; defaults to `./out`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the offline algorithms against perturbed oracles on a random corpus.
    Robustness {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Comma-separated perturbation levels.
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.05")]
        epsilons: Vec<f64>,
        /// Accuracy parameter of ThresholdGreedy.
        #[arg(long, default_value_t = 0.1)]
        eps_prime: f64,
        #[arg(long, default_value_t = 4)]
        trials: usize,
        /// Runs averaged per surrogate for RandomizedUSM.
        #[arg(long, default_value_t = 1000)]
        randomized_runs: usize,
        /// Margin CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit log-log regret slopes from a CSV table such as `summary.csv`.
    Slope {
        csv: PathBuf,
        #[arg(long, default_value = "horizon")]
        horizon_column: String,
        #[arg(long, default_value = "mean_regret")]
        regret_column: String,
        /// Column to group rows by; pass an empty string for one group.
        #[arg(long, default_value = "algorithm")]
        group_column: String,
    },
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
}

fn run(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    match cli.command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let dir = out.unwrap_or_else(|| PathBuf::from("out"));
            let outcome = harness::run_experiment(&cfg, Some(&dir))?;
            let slopes: serde_json::Map<String, serde_json::Value> =
                outcome.slopes.iter().map(|(a, s)| (a.to_string(), json!(s))).collect();
            let report = json!({
                "out_dir": dir.display().to_string(),
                "reference": outcome.reference.value,
                "reference_std_error": outcome.reference.std_error,
                "cells": outcome.cells.len(),
                "slopes": slopes,
            });
            writeln!(stdout.lock(), "{report}")?;
        }
        Command::Robustness {
            instances,
            seed,
            epsilons,
            eps_prime,
            trials,
            randomized_runs,
            out,
        } => {
            if trials == 0 || randomized_runs == 0 {
                return Err(Error::Config {
                    field: "trials".into(),
                    message: "trials and randomized runs must be positive".into(),
                });
            }
            let corpus = random_corpus(instances, seed);
            let cfg = RobustnessConfig {
                trials,
                randomized_runs,
            };
            let reports = run_corpus(&corpus, &epsilons, eps_prime, &cfg, seed)?;
            match &out {
                Some(p) => {
                    if let Some(parent) = p.parent() {
                        fs::create_dir_all(parent)?;
                    }
                    write_margin_csv(&reports, BufWriter::new(File::create(p)?))?;
                }
                None => write_margin_csv(&reports, stdout.lock())?,
            }
            let failures = reports.iter().filter(|r| !r.pass).count();
            log::info!("{} cells, {} failures", reports.len(), failures);
            if failures > 0 {
                return Err(Error::ModelInvariant(format!(
                    "{failures} of {} robustness cells failed",
                    reports.len()
                )));
            }
        }
        Command::Slope {
            csv,
            horizon_column,
            regret_column,
            group_column,
        } => {
            let group = (!group_column.is_empty()).then_some(group_column.as_str());
            let slopes = harness::slopes_from_csv(File::open(&csv)?, &horizon_column, &regret_column, group)?;
            let mut w = stdout.lock();
            writeln!(w, "group,slope")?;
            for (g, s) in slopes {
                writeln!(w, "{g},{s}")?;
            }
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            cfg.validate()?;
            cfg.horizons.resolve()?;
            cfg.algorithm_specs()?;
            let env = cfg.build_environment()?;
            cfg.build_constraint(env.as_ref())?;
            writeln!(stdout.lock(), "{}", json!({ "valid": true }))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}
