//! Regret bookkeeping, slope fitting and config-driven experiment sweeps.

pub mod config;
pub mod experiment;

use std::io::Write;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::constraint::Constraint;
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::offline::OfflineAlgorithm;
use crate::oracle::MemoOracle;
use crate::rng::StreamRng;
use crate::robustlab::brute_force_with;
use crate::subset::Subset;
use crate::trace::RunTrace;

pub use config::{AlgorithmSpec, ConstraintSpec, EnvironmentSpec, ExperimentConfig, HorizonGrid};
pub use experiment::{mean_se, run_experiment, CellResult, ExperimentOutcome, SummaryRow};

/// Trailing window used for smoothed reward curves.
pub const DEFAULT_SMOOTHING_WINDOW: usize = 100;

/// `R(t) = Σ_{s≤t} ref_s − Σ_{s≤t} reward_s`.
pub fn cumulative_regret(rewards: &[f64], reference: &[f64]) -> Result<Vec<f64>> {
    if rewards.len() != reference.len() {
        return Err(Error::LengthMismatch {
            expected: reference.len(),
            actual: rewards.len(),
        });
    }
    let mut acc_ref = 0.0;
    let mut acc_reward = 0.0;
    Ok(rewards
        .iter()
        .zip(reference)
        .map(|(r, f)| {
            acc_ref += f;
            acc_reward += r;
            acc_ref - acc_reward
        })
        .collect())
}

/// Least-squares slope of `ln(regret)` against `ln(horizon)`. Points with a
/// nonpositive regret are dropped with a warning.
pub fn loglog_slope(horizons: &[f64], regrets: &[f64]) -> Result<f64> {
    if horizons.len() != regrets.len() {
        return Err(Error::LengthMismatch {
            expected: horizons.len(),
            actual: regrets.len(),
        });
    }
    let mut pts = Vec::with_capacity(horizons.len());
    for (&t, &r) in horizons.iter().zip(regrets) {
        if r > 0.0 && t > 0.0 {
            pts.push((t.ln(), r.ln()));
        } else {
            log::warn!("dropping point T={t}, regret={r} from slope fit");
        }
    }
    if pts.len() < 3 {
        return Err(Error::InsufficientPoints(pts.len()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Fits [`loglog_slope`] per group of a CSV table such as `summary.csv`.
/// Rows are grouped by `group_column` when given (first-appearance order),
/// otherwise the whole table is one group named `all`.
pub fn slopes_from_csv<R: std::io::Read>(
    input: R,
    horizon_column: &str,
    regret_column: &str,
    group_column: Option<&str>,
) -> Result<Vec<(String, f64)>> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::config(name, "column not found in CSV header"))
    };
    let hcol = find(horizon_column)?;
    let rcol = find(regret_column)?;
    let gcol = group_column.map(find).transpose()?;
    let mut groups: Vec<(String, Vec<f64>, Vec<f64>)> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let num = |col: usize| -> Result<f64> {
            rec[col].trim().parse().map_err(|_| Error::Range {
                path: "<csv>".into(),
                row: i + 2,
                column: col + 1,
                message: format!("`{}` is not a number", &rec[col]),
            })
        };
        let (h, r) = (num(hcol)?, num(rcol)?);
        let key = gcol.map(|c| rec[c].to_string()).unwrap_or_else(|| "all".into());
        match groups.iter_mut().find(|g| g.0 == key) {
            Some(g) => {
                g.1.push(h);
                g.2.push(r);
            }
            None => groups.push((key, vec![h], vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|(k, h, r)| Ok((k, loglog_slope(&h, &r)?)))
        .collect()
}

/// Trailing mean over `window` values; the first `window − 1` entries
/// average what is available.
pub fn moving_average(series: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    // Each window is summed afresh so that a running subtraction does not
    // accumulate rounding drift over long traces.
    (0..series.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            series[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64
        })
        .collect()
}

/// Per-round regret of one run against a constant reference.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub reference: f64,
    pub rewards: Vec<f64>,
    pub cumulative_reward: Vec<f64>,
    pub regret: Vec<f64>,
    pub smoothed_reward: Vec<f64>,
}

impl RegretTrace {
    pub fn new(trace: &RunTrace, reference: f64, window: usize) -> Self {
        let rewards = trace.rewards();
        let mut acc = 0.0;
        let cumulative_reward: Vec<f64> = rewards
            .iter()
            .map(|r| {
                acc += r;
                acc
            })
            .collect();
        let regret = cumulative_reward
            .iter()
            .enumerate()
            .map(|(i, c)| (i + 1) as f64 * reference - c)
            .collect();
        let smoothed_reward = moving_average(&rewards, window);
        RegretTrace {
            reference,
            rewards,
            cumulative_reward,
            regret,
            smoothed_reward,
        }
    }

    /// Writes `t,reward,cumulative_reward,reference,regret,smoothed_reward`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "t",
            "reward",
            "cumulative_reward",
            "reference",
            "regret",
            "smoothed_reward",
        ])?;
        let reference = self.reference.to_string();
        for i in 0..self.rewards.len() {
            w.write_record([
                (i + 1).to_string().as_str(),
                self.rewards[i].to_string().as_str(),
                self.cumulative_reward[i].to_string().as_str(),
                reference.as_str(),
                self.regret[i].to_string().as_str(),
                self.smoothed_reward[i].to_string().as_str(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// What the per-round benchmark is.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReferencePolicy {
    /// `f(S^grd)` for the offline greedy on mean values: Greedy+Max under a
    /// knapsack, greedy under a cardinality constraint.
    #[default]
    Greedy,
    /// `α·f(OPT)` by exhaustive search (`n ≤ 20`).
    Opt { alpha: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceValue {
    /// `S^grd` or `OPT`.
    pub set: Subset,
    /// Per-round reference, already scaled by `α` for the OPT policy.
    pub value: f64,
    pub std_error: f64,
}

/// Per-round reference value for regret. Monte-Carlo environments draw
/// their mean estimates from `rng`.
pub fn reference_value(
    env: &dyn Environment,
    constraint: &Constraint,
    policy: &ReferencePolicy,
    rng: &mut StreamRng,
) -> Result<ReferenceValue> {
    match policy {
        ReferencePolicy::Greedy => {
            let alg = match constraint {
                Constraint::Knapsack { .. } => OfflineAlgorithm::GreedyPlusMax,
                Constraint::Cardinality { .. } => OfflineAlgorithm::Greedy,
                Constraint::Unconstrained { .. } => {
                    return Err(Error::config(
                        "reference.policy",
                        "greedy reference needs a cardinality or knapsack constraint",
                    ))
                }
            };
            let set = {
                let mut oracle = MemoOracle::new(|s: &Subset| Ok(env.mean(s, &mut *rng).value));
                alg.run(&mut oracle, constraint, &mut StreamRng::from_seed([0; 32]))?
            };
            let est = env.mean(&set, rng);
            Ok(ReferenceValue {
                set,
                value: est.value,
                std_error: est.std_error,
            })
        }
        ReferencePolicy::Opt { alpha } => {
            let best = brute_force_with(constraint, |s| env.mean(s, rng).value)?;
            // A fresh estimate avoids the upward bias of a maximum over
            // noisy estimates; exact environments return the same value.
            let est = env.mean(&best.opt, rng);
            Ok(ReferenceValue {
                set: best.opt,
                value: alpha * est.value,
                std_error: alpha * est.std_error,
            })
        }
    }
}
