//! Online greedy with opaque feedback, an adversarial-bandit baseline for
//! knapsack-constrained problems.
//!
//! `⌊β⌋` multiplicative-weights experts each propose one arm per round. With
//! probability `γ` a uniformly chosen expert explores a uniform arm and is
//! the only one updated; otherwise every expert exploits and nothing is
//! learned. Arms are kept with probability `c_min/c(a)`, so the budget holds
//! in expectation only.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::subset::{ElementId, Subset};
use crate::trace::{Phase, RunTrace};

/// `γ = min(1/2, n^{1/3}·β·(ln n / T)^{1/3})` and `η = sqrt(β·ln n / (γT))`.
/// Both are zero when `n < 2`, where there is nothing to learn.
pub fn ogo_params(n: usize, beta: f64, horizon: u64) -> (f64, f64) {
    if n < 2 || horizon == 0 {
        return (0.0, 0.0);
    }
    let ln_n = (n as f64).ln();
    let t = horizon as f64;
    let gamma = ((n as f64).cbrt() * beta * (ln_n / t).cbrt()).min(0.5);
    (gamma, eta_for(gamma, n, beta, horizon))
}

fn eta_for(gamma: f64, n: usize, beta: f64, horizon: u64) -> f64 {
    if gamma <= 0.0 || n < 2 {
        return 0.0;
    }
    (beta * (n as f64).ln() / (gamma * horizon as f64)).sqrt()
}

/// Which weights the exploring expert's feedback `x = c_min·f_t(S_t)/c(a)`
/// moves.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OgoFeedback {
    /// Loss `x` on every arm except the explored one.
    #[default]
    LossToOthers,
    /// Reward `x` on the explored arm. After normalization this gives the
    /// same sampling distribution as [`OgoFeedback::LossToOthers`].
    RewardToPlayed,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OgoConfig {
    /// Replaces the computed exploration probability; `η` is recomputed.
    pub gamma: Option<f64>,
    pub feedback: OgoFeedback,
}

/// Learner state. Weights are stored as logarithms so that long runs
/// cannot underflow them to zero.
#[derive(Debug, Clone)]
pub struct Ogo {
    costs: Vec<f64>,
    c_min: f64,
    beta: f64,
    gamma: f64,
    eta: f64,
    feedback: OgoFeedback,
    log_weights: Vec<Vec<f64>>,
}

impl Ogo {
    pub fn new(costs: Vec<f64>, budget: f64, horizon: u64, config: &OgoConfig) -> Result<Self> {
        if costs.is_empty() {
            return Err(Error::InvalidConstraint("no arms".into()));
        }
        if let Some(c) = costs.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(Error::InvalidConstraint(format!("cost {c} is not positive")));
        }
        let c_min = costs.iter().copied().fold(f64::INFINITY, f64::min);
        if budget.is_nan() || budget < c_min {
            return Err(Error::InvalidConstraint(format!(
                "budget {budget} is below the cheapest arm {c_min}"
            )));
        }
        let n = costs.len();
        let beta = budget / c_min;
        let (mut gamma, mut eta) = ogo_params(n, beta, horizon);
        if let Some(g) = config.gamma {
            if !(0.0..=1.0).contains(&g) {
                return Err(Error::config("ogo.gamma", format!("{g} is outside [0, 1]")));
            }
            gamma = g;
            eta = eta_for(g, n, beta, horizon);
        }
        let experts = beta.floor() as usize;
        Ok(Ogo {
            costs,
            c_min,
            beta,
            gamma,
            eta,
            feedback: config.feedback,
            log_weights: vec![vec![0.0; n]; experts],
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn expert_count(&self) -> usize {
        self.log_weights.len()
    }

    /// `ln ω[i][a]`.
    pub fn log_weights(&self) -> &[Vec<f64>] {
        &self.log_weights
    }

    /// Expert `i`'s arm among those not yet in `s`, drawn proportionally to
    /// its weights. `None` when every arm is taken.
    fn draw_weighted(&self, i: usize, s: &Subset, rng: &mut StreamRng) -> Option<usize> {
        let lw = &self.log_weights[i];
        let free: Vec<usize> = (0..lw.len()).filter(|&a| !s.contains(ElementId::from(a))).collect();
        if free.is_empty() {
            return None;
        }
        let top = free.iter().map(|&a| lw[a]).fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = free.iter().map(|&a| (lw[a] - top).exp()).collect();
        let total: f64 = w.iter().sum();
        let mut x = rng.random::<f64>() * total;
        for (k, &a) in free.iter().enumerate() {
            x -= w[k];
            if x < 0.0 {
                return Some(a);
            }
        }
        free.last().copied()
    }

    /// Expert `i` proposes an arm, kept with probability `c_min/c(a)`.
    fn exploit_expert(&self, i: usize, s: &mut Subset, rng: &mut StreamRng) {
        if let Some(a) = self.draw_weighted(i, s, rng) {
            if rng.random::<f64>() < self.c_min / self.costs[a] {
                s.insert(ElementId::from(a));
            }
        }
    }

    /// Plays one round against `env`.
    pub fn step(&mut self, env: &dyn Environment, rng: &mut StreamRng) -> Result<(Subset, f64, Phase)> {
        let n = self.costs.len();
        let experts = self.expert_count();
        let mut s = Subset::empty();
        let xi = rng.random::<f64>();
        if self.gamma > 0.0 && xi <= self.gamma && experts > 0 {
            let e = rng.random_range(0..experts);
            for i in 0..e {
                self.exploit_expert(i, &mut s, rng);
            }
            let free: Vec<usize> = (0..n).filter(|&a| !s.contains(ElementId::from(a))).collect();
            let explored = if free.is_empty() {
                None
            } else {
                let a = free[rng.random_range(0..free.len())];
                s.insert(ElementId::from(a));
                Some(a)
            };
            let r = sample_checked(env, &s, rng)?;
            if let Some(a) = explored {
                let x = self.c_min * r / self.costs[a];
                let lw = &mut self.log_weights[e];
                match self.feedback {
                    OgoFeedback::LossToOthers => {
                        for (j, w) in lw.iter_mut().enumerate() {
                            if j != a {
                                *w -= self.eta * x;
                            }
                        }
                    }
                    OgoFeedback::RewardToPlayed => lw[a] += self.eta * x,
                }
                // Only differences matter; re-centering keeps magnitudes bounded.
                let top = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                for w in lw.iter_mut() {
                    *w -= top;
                }
            }
            Ok((s, r, Phase::Explore))
        } else {
            for i in 0..experts {
                self.exploit_expert(i, &mut s, rng);
            }
            let r = sample_checked(env, &s, rng)?;
            Ok((s, r, Phase::Exploit))
        }
    }
}

fn sample_checked(env: &dyn Environment, s: &Subset, rng: &mut StreamRng) -> Result<f64> {
    let r = env.sample(s, rng);
    if (0.0..=1.0).contains(&r) {
        Ok(r)
    } else {
        Err(Error::RewardOutOfRange { reward: r })
    }
}

/// Runs the baseline for `horizon` rounds.
pub fn run_ogo(
    env: &dyn Environment,
    costs: &[f64],
    budget: f64,
    horizon: u64,
    config: &OgoConfig,
    rng: &mut StreamRng,
) -> Result<RunTrace> {
    if env.ground_size() != costs.len() {
        return Err(Error::LengthMismatch {
            expected: costs.len(),
            actual: env.ground_size(),
        });
    }
    let mut ogo = Ogo::new(costs.to_vec(), budget, horizon, config)?;
    let mut trace = RunTrace::new();
    for _ in 0..horizon {
        let (s, r, phase) = ogo.step(env, rng)?;
        trace.push(&s, r, phase);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::subset_cost;
    use crate::envs::DeterministicEnv;
    use crate::functions::Modular;
    use crate::rng::RngStream;

    fn rng(i: u64) -> StreamRng {
        RngStream::new(23).substream("ogo", i)
    }

    #[test]
    fn gamma_is_capped_for_short_horizons() {
        let (g, e) = ogo_params(8, 4.0, 100);
        assert_eq!(g, 0.5);
        assert!((e - (4.0 * 8f64.ln() / 50.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn gamma_shrinks_with_horizon() {
        let (g1, _) = ogo_params(8, 4.0, 10_000_000);
        let (g2, _) = ogo_params(8, 4.0, 20_000_000);
        assert!(g1 < 0.5);
        assert!((g1 / g2 - 2f64.cbrt()).abs() < 1e-9);
    }

    #[test]
    fn zero_gamma_never_learns() {
        let env = DeterministicEnv::new(Modular::new(vec![0.2, 0.3, 0.1]));
        let cfg = OgoConfig {
            gamma: Some(0.0),
            ..OgoConfig::default()
        };
        let mut ogo = Ogo::new(vec![1.0; 3], 2.0, 1000, &cfg).unwrap();
        let mut r = rng(0);
        for _ in 0..1000 {
            let (_, _, phase) = ogo.step(&env, &mut r).unwrap();
            assert_eq!(phase, Phase::Exploit);
        }
        assert!(ogo.log_weights().iter().flatten().all(|&w| w == 0.0));
    }

    #[test]
    fn single_arm() {
        let env = DeterministicEnv::new(Modular::new(vec![0.7]));
        let trace = run_ogo(&env, &[1.0], 1.0, 200, &OgoConfig::default(), &mut rng(1)).unwrap();
        assert_eq!(trace.len(), 200);
        for i in 0..trace.len() {
            assert!(trace.action(i).is_subset_of(&Subset::full(1)));
        }
    }

    #[test]
    fn budget_holds_in_expectation() {
        // constant reward 1: unit costs, two experts
        let env = DeterministicEnv::new(Modular::new(vec![0.25; 4]));
        let costs = vec![1.0; 4];
        let trace = run_ogo(&env, &costs, 2.0, 10_000, &OgoConfig::default(), &mut rng(2)).unwrap();
        let spent: Vec<f64> = (0..trace.len())
            .map(|i| subset_cost(&costs, trace.action(i)).unwrap())
            .collect();
        assert!(spent.iter().all(|&c| c <= 2.0));

        // With uneven costs only exploit rounds keep the budget in
        // expectation; the explored arm is added without the c_min/c(a) coin.
        let costs = vec![1.0, 2.0, 4.0, 1.5];
        let trace = run_ogo(&env, &costs, 3.0, 10_000, &OgoConfig::default(), &mut rng(3)).unwrap();
        let spent: Vec<f64> = (0..trace.len())
            .filter(|&i| trace.rounds[i].phase == Phase::Exploit)
            .map(|i| subset_cost(&costs, trace.action(i)).unwrap())
            .collect();
        let mean = spent.iter().sum::<f64>() / spent.len() as f64;
        let sd = (spent.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / spent.len() as f64).sqrt();
        assert!(mean <= 3.0 + 3.0 * sd / (spent.len() as f64).sqrt(), "{mean}");
    }

    #[test]
    fn weights_stay_finite_over_long_runs() {
        let env = DeterministicEnv::new(Modular::new(vec![0.5, 0.5]));
        let cfg = OgoConfig {
            gamma: Some(1.0),
            ..OgoConfig::default()
        };
        let mut ogo = Ogo::new(vec![1.0, 1.0], 1.0, 1000, &cfg).unwrap();
        let mut r = rng(4);
        for _ in 0..1_000_000 {
            ogo.step(&env, &mut r).unwrap();
        }
        assert!(ogo.log_weights().iter().flatten().all(|w| w.is_finite()));
    }

    #[test]
    fn feedback_modes_share_distribution() {
        let env = DeterministicEnv::new(Modular::new(vec![0.1, 0.6, 0.2]));
        let mut a = Ogo::new(vec![1.0; 3], 1.0, 5000, &OgoConfig::default()).unwrap();
        let mut b = Ogo::new(
            vec![1.0; 3],
            1.0,
            5000,
            &OgoConfig {
                feedback: OgoFeedback::RewardToPlayed,
                ..OgoConfig::default()
            },
        )
        .unwrap();
        let (mut ra, mut rb) = (rng(5), rng(5));
        for _ in 0..200 {
            let (sa, _, _) = a.step(&env, &mut ra).unwrap();
            let (sb, _, _) = b.step(&env, &mut rb).unwrap();
            assert_eq!(sa, sb);
        }
        for (x, y) in a.log_weights()[0].iter().zip(&b.log_weights()[0]) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn learns_the_best_arm() {
        let env = DeterministicEnv::new(Modular::new(vec![0.1, 0.9, 0.2]));
        let trace = run_ogo(&env, &[1.0; 3], 1.0, 20_000, &OgoConfig::default(), &mut rng(6)).unwrap();
        let tail = &trace.rounds[15_000..];
        let best = tail
            .iter()
            .filter(|r| r.phase == Phase::Exploit && trace.actions()[r.action as usize] == Subset::from_ids([1]))
            .count();
        let exploit = tail.iter().filter(|r| r.phase == Phase::Exploit).count();
        assert!(best as f64 > 0.8 * exploit as f64, "{best}/{exploit}");
    }
}
