//! Combinatorial explore-then-commit.
//!
//! The adapter hands an offline algorithm a value oracle whose answers come
//! from the bandit environment: the first query of a set `A` plays `A` for
//! `m` rounds and returns the empirical mean, which is memoized. When the
//! offline algorithm returns its solution, that set is played for every
//! remaining round.

use rand::{RngCore, SeedableRng};

use crate::constraint::Constraint;
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::offline::OfflineAlgorithm;
use crate::oracle::{MemoOracle, ValueOracle, ValueSource};
use crate::rng::StreamRng;
use crate::subset::Subset;
use crate::trace::{Phase, RunTrace};

/// `m = ⌈δ^{2/3}·T^{2/3}·ln(T)^{1/3} / (2·N^{2/3})⌉`, at least 1, with no
/// precondition check.
pub fn m_formula(delta: f64, n_queries: u64, horizon: u64) -> u64 {
    let t = horizon as f64;
    let raw = delta.powf(2.0 / 3.0) * t.powf(2.0 / 3.0) * t.ln().cbrt() / (2.0 * (n_queries as f64).powf(2.0 / 3.0));
    (raw.ceil() as u64).max(1)
}

/// `max{N, 2√2·N/δ}`, the smallest horizon the regret bound covers.
pub fn min_horizon(delta: f64, n_queries: u64) -> f64 {
    let n = n_queries as f64;
    n.max(2.0 * std::f64::consts::SQRT_2 * n / delta)
}

/// Plays per queried action; errors when `T < max{N, 2√2·N/δ}`.
pub fn compute_m(delta: f64, n_queries: u64, horizon: u64) -> Result<u64> {
    if delta <= 0.0 || n_queries == 0 || horizon == 0 {
        return Err(Error::Contract(format!(
            "compute_m needs delta > 0, N >= 1, T >= 1 (got {delta}, {n_queries}, {horizon})"
        )));
    }
    let required = min_horizon(delta, n_queries);
    if (horizon as f64) < required {
        return Err(Error::PreconditionViolated { horizon, required });
    }
    Ok(m_formula(delta, n_queries, horizon))
}

/// Short-horizon adjustment for the knapsack greedy family: keeps `m_dagger`
/// when `(n − K̃/2 + 1/2)·K̃·m_dagger < T`, otherwise shrinks `m` to
/// `⌊T / ((n − K̃/2 + 1/2)·K̃)⌋` so exploration fits in the horizon.
pub fn adjust_m_small_t(m_dagger: u64, n: u64, k_tilde: u64, horizon: u64) -> Result<u64> {
    let tight = crate::offline::tight_bound(n, k_tilde);
    if tight.saturating_mul(m_dagger) < horizon {
        return Ok(m_dagger);
    }
    let m = horizon / tight.max(1);
    if m < 1 {
        return Err(Error::HorizonTooSmall {
            horizon,
            reason: format!("fewer rounds than the {tight} candidate queries of the greedy path"),
        });
    }
    Ok(m)
}

/// `sqrt(ln T / (2m))`, the confidence radius of an `m`-sample mean.
pub fn confidence_radius(horizon: u64, m: u64) -> f64 {
    ((horizon as f64).ln() / (2.0 * m as f64)).sqrt()
}

/// Exploration parameters for one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct CetcSchedule {
    pub horizon: u64,
    pub m: u64,
    pub rad: f64,
    /// Query bound `N` of the offline algorithm.
    pub query_bound: u64,
    pub delta: f64,
    pub alpha: f64,
    pub meets_precondition: bool,
    /// Whether the short-horizon adjustment lowered `m`.
    pub adjusted: bool,
}

impl CetcSchedule {
    /// Chooses `m` for `alg` on `constraint`. The knapsack greedy family
    /// always goes through [`adjust_m_small_t`]; every other algorithm needs
    /// the horizon precondition and `N·m ≤ T`.
    pub fn plan(alg: &OfflineAlgorithm, constraint: &Constraint, horizon: u64) -> Result<Self> {
        let spec = alg.spec(constraint)?;
        let n_queries = spec.query_bound;
        let meets_precondition = horizon as f64 >= min_horizon(spec.delta, n_queries);
        let (m, adjusted) = if alg.is_knapsack_greedy_family() {
            let m_dagger = m_formula(spec.delta, n_queries, horizon);
            let k_tilde = constraint.knapsack_params()?.k_tilde as u64;
            let m = adjust_m_small_t(m_dagger, constraint.ground_size() as u64, k_tilde, horizon)?;
            (m, m != m_dagger)
        } else {
            let m = compute_m(spec.delta, n_queries, horizon)?;
            if n_queries.saturating_mul(m) > horizon {
                return Err(Error::HorizonTooSmall {
                    horizon,
                    reason: format!("{} may need N·m = {}·{} exploration rounds", alg.name(), n_queries, m),
                });
            }
            (m, false)
        };
        Ok(CetcSchedule {
            horizon,
            m,
            rad: confidence_radius(horizon, m),
            query_bound: n_queries,
            delta: spec.delta,
            alpha: spec.alpha,
            meets_precondition,
            adjusted,
        })
    }
}

/// Answers oracle queries by playing the queried set `m` times.
struct Exploration<'a> {
    env: &'a dyn Environment,
    rng: &'a mut StreamRng,
    trace: RunTrace,
    m: u64,
    horizon: u64,
}

impl ValueSource for Exploration<'_> {
    fn evaluate(&mut self, s: &Subset) -> Result<f64> {
        let mut sum = 0.0;
        for _ in 0..self.m {
            if self.trace.len() as u64 >= self.horizon {
                return Err(Error::HorizonExhausted {
                    horizon: self.horizon,
                    played: self.trace.len() as u64,
                });
            }
            let r = checked_reward(self.env.sample(s, self.rng))?;
            self.trace.push(s, r, Phase::Explore);
            sum += r;
        }
        Ok(sum / self.m as f64)
    }
}

fn checked_reward(reward: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&reward) {
        Ok(reward)
    } else {
        Err(Error::RewardOutOfRange { reward })
    }
}

fn check_env(env: &dyn Environment, constraint: &Constraint) -> Result<()> {
    if env.ground_size() != constraint.ground_size() {
        return Err(Error::LengthMismatch {
            expected: constraint.ground_size(),
            actual: env.ground_size(),
        });
    }
    Ok(())
}

/// Runs C-ETC for exactly `horizon` rounds.
///
/// Environment rewards are drawn from `rng`; the offline algorithm's own
/// randomness comes from a generator seeded by one draw of `rng` taken
/// before play starts, so play sequences depend only on the queries issued.
pub fn run_cetc(
    env: &dyn Environment,
    alg: &OfflineAlgorithm,
    constraint: &Constraint,
    horizon: u64,
    rng: &mut StreamRng,
) -> Result<RunTrace> {
    run_limited(env, alg, constraint, horizon, horizon, rng)
}

/// Like [`run_cetc`] but stops exploiting after `limit` total rounds.
fn run_limited(
    env: &dyn Environment,
    alg: &OfflineAlgorithm,
    constraint: &Constraint,
    horizon: u64,
    limit: u64,
    rng: &mut StreamRng,
) -> Result<RunTrace> {
    check_env(env, constraint)?;
    let schedule = CetcSchedule::plan(alg, constraint, horizon)?;
    let mut alg_rng = StreamRng::seed_from_u64(rng.next_u64());
    let source = Exploration {
        env,
        rng,
        trace: RunTrace::new(),
        m: schedule.m,
        horizon,
    };
    let mut oracle = MemoOracle::new(source).with_constraint(constraint.clone());
    let committed = alg.run(&mut oracle, constraint, &mut alg_rng)?;
    debug_assert!(oracle.query_count() as u64 <= schedule.query_bound);
    let explored: Vec<(Subset, f64)> = oracle
        .queried()
        .iter()
        .map(|s| (s.clone(), oracle.value_of(s).unwrap_or_default()))
        .collect();
    let Exploration { rng, mut trace, .. } = oracle.into_source();
    trace.exploration_rounds = trace.len() as u64;
    trace.explored = explored;
    while (trace.len() as u64) < limit.min(horizon) {
        let r = checked_reward(env.sample(&committed, rng))?;
        trace.push(&committed, r, Phase::Exploit);
    }
    trace.truncate(limit as usize);
    trace.committed = Some(committed);
    Ok(trace)
}

/// Doubling-trick C-ETC for an unknown horizon: epochs of length
/// `T0, 2·T0, 4·T0, ..` each run a fresh C-ETC instance, until `stop`
/// rounds have been played in total. The last epoch is cut short.
///
/// In the returned trace, `exploration_rounds` counts explore rounds across
/// all epochs, `explored` concatenates every epoch's queries, and
/// `committed` is the last epoch's set.
pub fn anytime_cetc(
    env: &dyn Environment,
    alg: &OfflineAlgorithm,
    constraint: &Constraint,
    initial_horizon: u64,
    stop: u64,
    rng: &mut StreamRng,
) -> Result<RunTrace> {
    if initial_horizon == 0 {
        return Err(Error::Contract("initial horizon must be positive".into()));
    }
    // Validates T0 up front even when `stop` is smaller.
    CetcSchedule::plan(alg, constraint, initial_horizon)?;
    let mut out = RunTrace::new();
    let mut horizon = initial_horizon;
    while (out.len() as u64) < stop {
        let remaining = stop - out.len() as u64;
        let epoch = run_limited(env, alg, constraint, horizon, remaining.min(horizon), rng)?;
        out.extend_from(&epoch);
        out.exploration_rounds += epoch.exploration_rounds;
        out.explored.extend(epoch.explored);
        out.committed = epoch.committed;
        horizon = horizon.saturating_mul(2);
    }
    Ok(out)
}

/// Checks a finished C-ETC trace against its schedule: exactly `T` rounds,
/// at most `N` explored sets each played exactly `m` times in one leading
/// exploration block, and every played set feasible.
pub fn check_accounting(trace: &RunTrace, schedule: &CetcSchedule, constraint: &Constraint) -> Result<()> {
    let fail = |msg: String| Err(Error::ModelInvariant(msg));
    if trace.len() as u64 != schedule.horizon {
        return fail(format!("{} rounds for horizon {}", trace.len(), schedule.horizon));
    }
    if trace.explored.len() as u64 > schedule.query_bound {
        return fail(format!(
            "{} explored sets exceed N = {}",
            trace.explored.len(),
            schedule.query_bound
        ));
    }
    if trace.exploration_rounds != trace.explored.len() as u64 * schedule.m {
        return fail(format!(
            "{} exploration rounds for {} sets at m = {}",
            trace.exploration_rounds,
            trace.explored.len(),
            schedule.m
        ));
    }
    let mut plays = vec![0u64; trace.actions().len()];
    for (i, r) in trace.rounds.iter().enumerate() {
        let exploring = (i as u64) < trace.exploration_rounds;
        if exploring != (r.phase == Phase::Explore) {
            return fail(format!("round {} has phase {}", i + 1, r.phase.as_str()));
        }
        if exploring {
            plays[r.action as usize] += 1;
        }
    }
    for (s, _) in &trace.explored {
        let idx = trace.actions().iter().position(|a| a == s);
        let count = idx.map_or(0, |i| plays[i]);
        if count != schedule.m {
            return fail(format!("{s} explored {count} times, expected {}", schedule.m));
        }
    }
    for a in trace.actions() {
        if !constraint.is_feasible(a)? {
            return fail(format!("infeasible action {a}"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{BernoulliEnv, DeterministicEnv, Estimate};
    use crate::functions::{Modular, SetCoverage, SetFunction};
    use crate::oracle::exact_oracle;
    use crate::rng::RngStream;

    fn rng(i: u64) -> StreamRng {
        RngStream::new(17).substream("cetc", i)
    }

    #[test]
    fn m_matches_closed_form() {
        assert_eq!(compute_m(2.0, 1, 21).unwrap(), 9);
        assert_eq!(compute_m(4.0, 10, 100_000).unwrap(), 1321);
        assert_eq!(compute_m(12.5, 48, 3162).unwrap(), 89);
        assert!((confidence_radius(21, 9) - 0.411_266_501_710_361_8).abs() < 1e-12);
    }

    #[test]
    fn m_grows_like_t_two_thirds() {
        let a = m_formula(4.0, 10, 1_000_000) as f64;
        let b = m_formula(4.0, 10, 2_000_000) as f64;
        assert!((b / a / 2f64.powf(2.0 / 3.0) - 1.0).abs() < 0.05);
        assert!(m_formula(0.001, 1000, 2) >= 1);
    }

    #[test]
    fn precondition_is_enforced() {
        // 2√2·10/1 ≈ 28.3
        assert!(matches!(
            compute_m(1.0, 10, 28),
            Err(Error::PreconditionViolated { .. })
        ));
        assert!(compute_m(1.0, 10, 29).is_ok());
    }

    #[test]
    fn short_horizon_adjustment() {
        assert_eq!(adjust_m_small_t(10, 18, 6, 10_000).unwrap(), 10);
        assert_eq!(adjust_m_small_t(200, 18, 6, 10_000).unwrap(), 107);
        assert!(matches!(
            adjust_m_small_t(10, 18, 6, 50),
            Err(Error::HorizonTooSmall { .. })
        ));
    }

    #[test]
    fn noiseless_run_commits_to_exact_greedy() {
        let f = SetCoverage::uniform(vec![vec![0, 1], vec![1, 2], vec![3], vec![0, 3]], 4);
        let c = Constraint::cardinality(4, 2).unwrap();
        let alg = OfflineAlgorithm::Greedy;
        let expected = alg.run(&mut exact_oracle(&f), &c, &mut rng(0)).unwrap();
        let env = DeterministicEnv::new(f);
        let t = 500;
        let trace = run_cetc(&env, &alg, &c, t, &mut rng(1)).unwrap();
        let sched = CetcSchedule::plan(&alg, &c, t).unwrap();
        assert_eq!(trace.len(), t as usize);
        assert_eq!(trace.committed, Some(expected));
        assert_eq!(trace.exploration_rounds, trace.explored.len() as u64 * sched.m);
        assert!(trace.explored.len() as u64 <= sched.query_bound);
        check_accounting(&trace, &sched, &c).unwrap();
        for (i, r) in trace.rounds.iter().enumerate() {
            let explore = (i as u64) < trace.exploration_rounds;
            assert_eq!(r.phase, if explore { Phase::Explore } else { Phase::Exploit });
            assert!(c.is_feasible(trace.action(i)).unwrap());
        }
    }

    #[test]
    fn each_explored_action_is_played_m_times() {
        let env = BernoulliEnv::new(Modular::new(vec![0.1, 0.3, 0.2, 0.25, 0.05]));
        let c = Constraint::cardinality(5, 2).unwrap();
        let alg = OfflineAlgorithm::Greedy;
        let t = 20_000;
        let sched = CetcSchedule::plan(&alg, &c, t).unwrap();
        let trace = run_cetc(&env, &alg, &c, t, &mut rng(2)).unwrap();
        for (a, mean) in &trace.explored {
            let plays: Vec<f64> = (0..trace.exploration_rounds as usize)
                .filter(|&i| trace.action(i) == a)
                .map(|i| trace.rounds[i].reward)
                .collect();
            assert_eq!(plays.len() as u64, sched.m);
            assert!((plays.iter().sum::<f64>() / sched.m as f64 - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn play_sequence_depends_only_on_queries() {
        // With β = 1.5 only singletons fit, so Greedy+ and Greedy+Max issue
        // the same queries and share δ = 4.5 and N = n.
        let env = BernoulliEnv::new(Modular::new(vec![0.1, 0.3, 0.2, 0.25]));
        let c = Constraint::knapsack(vec![1.0, 1.2, 1.4, 1.0], 1.5).unwrap();
        let a = run_cetc(&env, &OfflineAlgorithm::GreedyPlus, &c, 5000, &mut rng(3)).unwrap();
        let b = run_cetc(&env, &OfflineAlgorithm::GreedyPlusMax, &c, 5000, &mut rng(3)).unwrap();
        assert_eq!(a.exploration_rounds, b.exploration_rounds);
        let e = a.exploration_rounds as usize;
        assert_eq!(a.rounds[..e], b.rounds[..e]);
        assert_eq!(a.explored, b.explored);
    }

    struct Broken;
    impl Environment for Broken {
        fn ground_size(&self) -> usize {
            2
        }
        fn sample(&self, _: &Subset, _: &mut StreamRng) -> f64 {
            1.5
        }
        fn mean(&self, _: &Subset, _: &mut StreamRng) -> Estimate {
            Estimate::exact(1.5)
        }
    }

    #[test]
    fn out_of_range_reward_is_an_error() {
        let c = Constraint::cardinality(2, 1).unwrap();
        let r = run_cetc(&Broken, &OfflineAlgorithm::Greedy, &c, 1000, &mut rng(4));
        assert!(matches!(r, Err(Error::RewardOutOfRange { .. })));
    }

    #[test]
    fn mismatched_ground_set_is_an_error() {
        let env = DeterministicEnv::new(Modular::new(vec![0.1; 3]));
        let c = Constraint::cardinality(4, 1).unwrap();
        assert!(run_cetc(&env, &OfflineAlgorithm::Greedy, &c, 1000, &mut rng(5)).is_err());
    }

    #[test]
    fn anytime_epochs() {
        let env = BernoulliEnv::new(Modular::new(vec![0.1, 0.3, 0.2, 0.25, 0.05]));
        let c = Constraint::cardinality(5, 2).unwrap();
        let alg = OfflineAlgorithm::Greedy;
        let t0 = 2000;

        let single = run_cetc(&env, &alg, &c, t0, &mut rng(6)).unwrap();
        let any = anytime_cetc(&env, &alg, &c, t0, t0, &mut rng(6)).unwrap();
        assert_eq!(single.rounds, any.rounds);

        // epochs of 2000 and 4000 complete, then one round of the 8000 epoch
        let stop = t0 + 2 * t0 + 1;
        let any = anytime_cetc(&env, &alg, &c, t0, stop, &mut rng(7)).unwrap();
        assert_eq!(any.len() as u64, stop);
        let m0 = CetcSchedule::plan(&alg, &c, t0).unwrap().m;
        let m1 = CetcSchedule::plan(&alg, &c, 2 * t0).unwrap().m;
        // the first round of each epoch is an exploration of a fresh instance
        for start in [0, t0, 3 * t0] {
            assert_eq!(any.rounds[start as usize].phase, Phase::Explore);
        }
        assert_eq!(any.rounds[(t0 - 1) as usize].phase, Phase::Exploit);
        assert!(m1 > m0);

        assert!(anytime_cetc(&env, &alg, &c, 5, 100, &mut rng(8)).is_err());
    }

    #[test]
    fn noiseless_reward_matches_function() {
        let f = Modular::new(vec![0.2, 0.3]);
        let c = Constraint::cardinality(2, 2).unwrap();
        let env = DeterministicEnv::new(f.clone());
        let trace = run_cetc(&env, &OfflineAlgorithm::Greedy, &c, 1000, &mut rng(9)).unwrap();
        let s = trace.committed.clone().unwrap();
        assert_eq!(s, Subset::full(2));
        assert_eq!(trace.rounds.last().unwrap().reward, f.value(&s));
    }
}
