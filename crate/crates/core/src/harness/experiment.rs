//! Sweeps over (algorithm, horizon, replication) cells.
//!
//! Every cell draws from its own random substream keyed by the master seed,
//! the algorithm name, the horizon and the replication index, so outputs do
//! not depend on scheduling and reruns are byte-identical.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{AlgorithmSpec, ExperimentConfig};
use super::{loglog_slope, reference_value, ReferenceValue, RegretTrace};
use crate::cetc::{check_accounting, run_cetc, CetcSchedule};
use crate::constraint::{subset_cost, Constraint};
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::ogo::run_ogo;
use crate::rng::RngStream;
use crate::subset::Subset;
use crate::trace::RunTrace;

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub algorithm: AlgorithmSpec,
    pub horizon: u64,
    pub replication: usize,
    pub total_reward: f64,
    /// `T·ref − Σ rewards`.
    pub regret: f64,
    pub exploration_rounds: u64,
    /// The C-ETC commitment; `None` for OG^o.
    pub committed: Option<Subset>,
    /// Rounds whose action broke the hard constraint (only OG^o can).
    pub infeasible_rounds: u64,
    /// Mean cost per round under a knapsack constraint.
    pub mean_cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: AlgorithmSpec,
    pub horizon: u64,
    pub replications: usize,
    pub reference: f64,
    pub mean_reward: f64,
    pub se_reward: f64,
    pub mean_regret: f64,
    pub se_regret: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub reference: ReferenceValue,
    pub horizons: Vec<u64>,
    pub cells: Vec<CellResult>,
    pub summary: Vec<SummaryRow>,
    /// Log-log slope of mean regret per algorithm, when it could be fitted.
    pub slopes: Vec<(AlgorithmSpec, Option<f64>)>,
}

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Runs one cell and returns its trace.
pub fn run_cell(
    env: &dyn Environment,
    constraint: &Constraint,
    alg: &AlgorithmSpec,
    cfg: &ExperimentConfig,
    horizon: u64,
    replication: usize,
) -> Result<RunTrace> {
    let mut rng = RngStream::new(cfg.seed)
        .child(&alg.to_string(), horizon)
        .substream("replication", replication as u64);
    match alg {
        AlgorithmSpec::Cetc(a) => {
            let trace = run_cetc(env, a, constraint, horizon, &mut rng)?;
            check_accounting(&trace, &CetcSchedule::plan(a, constraint, horizon)?, constraint)?;
            Ok(trace)
        }
        AlgorithmSpec::Ogo => match constraint {
            Constraint::Knapsack { costs, budget } => run_ogo(env, costs, *budget, horizon, &cfg.ogo, &mut rng),
            _ => Err(Error::config("algorithms", "ogo needs a knapsack constraint")),
        },
    }
}

fn atomic_write(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        write(&mut w)?;
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Runs every cell of `cfg`. With `out_dir`, writes `reference.csv`,
/// `cells.csv`, `summary.csv`, `slopes.csv` and, when traces are enabled,
/// per-cell `cells/<algorithm>_T<horizon>_r<replication>_{trace,regret}.csv`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let horizons = cfg.horizons.resolve()?;
    let algs = cfg.algorithm_specs()?;
    let env = cfg.build_environment()?;
    let constraint = cfg.build_constraint(env.as_ref())?;
    let mut ref_rng = RngStream::new(cfg.seed).substream("reference", 0);
    let reference = reference_value(env.as_ref(), &constraint, &cfg.reference, &mut ref_rng)?;
    log::info!(
        "reference set {} value {} (se {})",
        reference.set,
        reference.value,
        reference.std_error
    );

    let cell_dir = match out_dir {
        Some(d) => {
            fs::create_dir_all(d)?;
            if cfg.output.traces {
                fs::create_dir_all(d.join("cells"))?;
            }
            Some(d.join("cells"))
        }
        None => None,
    };

    let keys: Vec<(AlgorithmSpec, u64, usize)> = algs
        .iter()
        .flat_map(|a| {
            horizons
                .iter()
                .flat_map(move |&h| (0..cfg.replications).map(move |r| (*a, h, r)))
        })
        .collect();
    let env_ref = env.as_ref();
    let cells: Vec<CellResult> = keys
        .par_iter()
        .map(|&(alg, horizon, replication)| {
            let trace = run_cell(env_ref, &constraint, &alg, cfg, horizon, replication)?;
            let total_reward = trace.total_reward();
            let mut infeasible_rounds = 0;
            let mut mean_cost = None;
            let feasible: Vec<bool> = trace
                .actions()
                .iter()
                .map(|a| constraint.is_feasible(a))
                .collect::<Result<_>>()?;
            if let Constraint::Knapsack { costs, .. } = &constraint {
                let action_cost: Vec<f64> = trace
                    .actions()
                    .iter()
                    .map(|a| subset_cost(costs, a))
                    .collect::<Result<_>>()?;
                let spent: f64 = trace.rounds.iter().map(|r| action_cost[r.action as usize]).sum();
                mean_cost = Some(spent / trace.len() as f64);
            }
            for r in &trace.rounds {
                if !feasible[r.action as usize] {
                    infeasible_rounds += 1;
                }
            }
            if let (true, Some(dir)) = (cfg.output.traces, &cell_dir) {
                let stem = format!("{}_T{}_r{}", alg.file_stem(), horizon, replication);
                atomic_write(&dir.join(format!("{stem}_trace.csv")), |w| trace.write_csv(w))?;
                let rt = RegretTrace::new(&trace, reference.value, cfg.output.smoothing_window);
                atomic_write(&dir.join(format!("{stem}_regret.csv")), |w| rt.write_csv(w))?;
            }
            Ok(CellResult {
                algorithm: alg,
                horizon,
                replication,
                total_reward,
                regret: horizon as f64 * reference.value - total_reward,
                exploration_rounds: trace.exploration_rounds,
                committed: trace.committed.clone(),
                infeasible_rounds,
                mean_cost,
            })
        })
        .collect::<Result<_>>()?;

    let mut summary = Vec::new();
    let mut slopes = Vec::new();
    for alg in &algs {
        let mut mean_regrets = Vec::new();
        for &h in &horizons {
            let group: Vec<&CellResult> = cells.iter().filter(|c| c.algorithm == *alg && c.horizon == h).collect();
            let rewards: Vec<f64> = group.iter().map(|c| c.total_reward).collect();
            let regrets: Vec<f64> = group.iter().map(|c| c.regret).collect();
            let (mean_reward, se_reward) = mean_se(&rewards);
            let (mean_regret, se_regret) = mean_se(&regrets);
            mean_regrets.push(mean_regret);
            summary.push(SummaryRow {
                algorithm: *alg,
                horizon: h,
                replications: group.len(),
                reference: reference.value,
                mean_reward,
                se_reward,
                mean_regret,
                se_regret,
            });
        }
        let hs: Vec<f64> = horizons.iter().map(|&h| h as f64).collect();
        let slope = match loglog_slope(&hs, &mean_regrets) {
            Ok(s) => Some(s),
            Err(e) => {
                log::warn!("no slope for {alg}: {e}");
                None
            }
        };
        slopes.push((*alg, slope));
    }

    let outcome = ExperimentOutcome {
        reference,
        horizons,
        cells,
        summary,
        slopes,
    };
    if let Some(d) = out_dir {
        write_outputs(&outcome, d)?;
    }
    Ok(outcome)
}

fn opt_string<T: ToString>(x: &Option<T>) -> String {
    x.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn write_outputs(o: &ExperimentOutcome, dir: &Path) -> Result<()> {
    let path = |name: &str| -> PathBuf { dir.join(name) };
    atomic_write(&path("reference.csv"), |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["set", "value", "std_error"])?;
        c.write_record([
            o.reference.set.to_csv_field(),
            o.reference.value.to_string(),
            o.reference.std_error.to_string(),
        ])?;
        c.flush()?;
        Ok(())
    })?;
    atomic_write(&path("cells.csv"), |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record([
            "algorithm",
            "label",
            "horizon",
            "replication",
            "total_reward",
            "regret",
            "exploration_rounds",
            "committed",
            "infeasible_rounds",
            "mean_cost",
        ])?;
        for r in &o.cells {
            c.write_record([
                r.algorithm.to_string(),
                r.algorithm.label().to_string(),
                r.horizon.to_string(),
                r.replication.to_string(),
                r.total_reward.to_string(),
                r.regret.to_string(),
                r.exploration_rounds.to_string(),
                r.committed.as_ref().map(Subset::to_csv_field).unwrap_or_default(),
                r.infeasible_rounds.to_string(),
                opt_string(&r.mean_cost),
            ])?;
        }
        c.flush()?;
        Ok(())
    })?;
    atomic_write(&path("summary.csv"), |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record([
            "algorithm",
            "label",
            "horizon",
            "replications",
            "reference",
            "mean_reward",
            "se_reward",
            "mean_regret",
            "se_regret",
        ])?;
        for r in &o.summary {
            c.write_record([
                r.algorithm.to_string(),
                r.algorithm.label().to_string(),
                r.horizon.to_string(),
                r.replications.to_string(),
                r.reference.to_string(),
                r.mean_reward.to_string(),
                r.se_reward.to_string(),
                r.mean_regret.to_string(),
                r.se_regret.to_string(),
            ])?;
        }
        c.flush()?;
        Ok(())
    })?;
    atomic_write(&path("slopes.csv"), |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["algorithm", "label", "slope"])?;
        for (a, s) in &o.slopes {
            c.write_record([a.to_string(), a.label().to_string(), opt_string(s)])?;
        }
        c.flush()?;
        Ok(())
    })?;
    Ok(())
}
