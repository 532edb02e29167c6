//! Empirical robustness checks for the offline algorithms.
//!
//! An algorithm is `(α, δ)`-robust when, run against any surrogate `f̂` with
//! `|f̂(A) − f(A)| ≤ ε`, its output satisfies `E[f(S)] ≥ α·f(OPT) − δ·ε`.
//! This module builds such surrogates, computes `OPT` exhaustively on small
//! instances and reports the margin by which the inequality holds.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::functions::{Cut, Modular, SetCoverage, SetFunction};
use crate::offline::OfflineAlgorithm;
use crate::oracle::{exact_oracle, MemoOracle, ValueSource};
use crate::rng::{fnv1a, mix, RngStream};
use crate::subset::Subset;

/// Largest ground set [`brute_force_opt`] will enumerate.
pub const BRUTE_FORCE_LIMIT: usize = 20;

/// Slack allowed for floating-point rounding when comparing against a bound.
pub const MARGIN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub opt: Subset,
    pub value: f64,
    /// Feasible sets evaluated, including the empty set.
    pub feasible_count: u64,
}

/// Exhaustive maximization of `f` over the feasible sets of `c`. Ties go to
/// the lexicographically smallest sorted member list.
pub fn brute_force_opt(f: &dyn SetFunction, c: &Constraint) -> Result<BruteForceResult> {
    if f.ground_size() != c.ground_size() {
        return Err(Error::LengthMismatch {
            expected: c.ground_size(),
            actual: f.ground_size(),
        });
    }
    brute_force_with(c, |s| f.value(s))
}

/// [`brute_force_opt`] over an arbitrary value function.
pub fn brute_force_with(c: &Constraint, mut value: impl FnMut(&Subset) -> f64) -> Result<BruteForceResult> {
    let n = c.ground_size();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let costs = c.costs();
    let mut best = BruteForceResult {
        opt: Subset::empty(),
        value: value(&Subset::empty()),
        feasible_count: 1,
    };
    for mask in 1u32..(1u32 << n) {
        let feasible = match c {
            Constraint::Cardinality { k, .. } => mask.count_ones() as usize <= *k,
            Constraint::Knapsack { budget, .. } => {
                let cost: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| costs[i]).sum();
                cost <= *budget
            }
            Constraint::Unconstrained { .. } => true,
        };
        if !feasible {
            continue;
        }
        best.feasible_count += 1;
        let s = Subset::from_ids((0..n).filter(|i| mask >> i & 1 == 1));
        let v = value(&s);
        if v > best.value || (v == best.value && s.members() < best.opt.members()) {
            best.opt = s;
            best.value = v;
        }
    }
    Ok(best)
}

/// How a surrogate deviates from the exact function.
#[derive(Debug, Clone, PartialEq)]
pub enum PerturbationMode {
    /// Independent uniform offset in `[−ε, ε]` per set, derived from a hash
    /// of the seed and the set so the surrogate is one fixed function.
    Uniform,
    /// `+ε` on sets disjoint from `reference`, `−ε` on sets meeting it.
    /// With `reference` the algorithm's exact-oracle output, this pushes the
    /// algorithm away from its unperturbed answer.
    WorstCaseSign { reference: Subset },
    /// `f̂ = f + direction·ε` everywhere, `direction ∈ [−1, 1]`.
    FixedOffset { direction: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec {
    pub epsilon: f64,
    pub mode: PerturbationMode,
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn new(epsilon: f64, mode: PerturbationMode, seed: u64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::Contract(format!("epsilon {epsilon} must be nonnegative")));
        }
        if let PerturbationMode::FixedOffset { direction } = mode {
            if !(-1.0..=1.0).contains(&direction) {
                return Err(Error::Contract(format!("offset direction {direction} outside [-1, 1]")));
            }
        }
        Ok(PerturbationSpec { epsilon, mode, seed })
    }

    /// `f̂(s) − f(s)`; always within `[−ε, ε]`.
    pub fn offset(&self, s: &Subset) -> f64 {
        match &self.mode {
            PerturbationMode::Uniform => {
                let mut h = mix(self.seed ^ 0x5bd1_e995);
                for e in s.iter() {
                    h = mix(h ^ fnv1a(&e.0.to_le_bytes()));
                }
                let u = (h >> 11) as f64 / (1u64 << 53) as f64;
                self.epsilon * (2.0 * u - 1.0)
            }
            PerturbationMode::WorstCaseSign { reference } => {
                if s.is_disjoint(reference) {
                    self.epsilon
                } else {
                    -self.epsilon
                }
            }
            PerturbationMode::FixedOffset { direction } => direction * self.epsilon,
        }
    }
}

/// Value source for a perturbed surrogate.
pub struct Perturbed<'a> {
    f: &'a dyn SetFunction,
    spec: PerturbationSpec,
}

impl ValueSource for Perturbed<'_> {
    fn evaluate(&mut self, s: &Subset) -> Result<f64> {
        Ok(self.f.value(s) + self.spec.offset(s))
    }
}

/// Memoized surrogate `f̂ = f + offset`. The empty set stays at `0`, which
/// is within `ε` of `f(∅) = 0`.
pub fn perturb_oracle<'a>(f: &'a dyn SetFunction, spec: &PerturbationSpec) -> MemoOracle<Perturbed<'a>> {
    MemoOracle::new(Perturbed { f, spec: spec.clone() })
}

/// Outcome of one (algorithm, instance, ε) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginReport {
    pub algorithm: String,
    pub instance_id: u32,
    pub epsilon: f64,
    pub f_opt: f64,
    /// Value (mean value for randomized algorithms) on the worst surrogate.
    pub f_s: f64,
    /// `α·f(OPT) − δ·ε`.
    pub bound: f64,
    /// `f_s − bound`, minimized over surrogates.
    pub margin: f64,
    /// Standard error of `f_s`; zero for deterministic algorithms.
    pub std_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustnessConfig {
    /// Surrogates per cell; modes cycle worst-case-sign, `+ε`, `−ε`, uniform.
    pub trials: usize,
    /// Algorithm runs averaged per surrogate for randomized algorithms.
    pub randomized_runs: usize,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        RobustnessConfig {
            trials: 4,
            randomized_runs: 1000,
        }
    }
}

/// A random instance from [`random_corpus`].
pub struct CorpusInstance {
    pub id: u32,
    pub family: &'static str,
    pub function: Box<dyn SetFunction>,
    pub constraint: Constraint,
}

impl CorpusInstance {
    /// Algorithms whose constraint kind matches; partial enumeration only
    /// up to `n = 8`.
    pub fn algorithms(&self, eps_prime: f64) -> Vec<OfflineAlgorithm> {
        let n = self.constraint.ground_size();
        OfflineAlgorithm::all(eps_prime)
            .into_iter()
            .filter(|a| a.required_kind() == self.constraint.kind_name())
            .filter(|a| *a != OfflineAlgorithm::PartialEnumeration || n <= 8)
            .collect()
    }
}

/// `size` instances with `n ∈ [4, 10]`, cycling through modular, coverage
/// and cut families. Monotone families alternate cardinality (`k ≤ 4`) and
/// knapsack (`β ≤ 6`) constraints; cut functions are unconstrained.
pub fn random_corpus(size: usize, seed: u64) -> Vec<CorpusInstance> {
    let streams = RngStream::new(seed);
    (0..size)
        .map(|i| {
            let mut rng = streams.substream("corpus", i as u64);
            let n = rng.random_range(4..=10);
            let (family, function): (&'static str, Box<dyn SetFunction>) = match i % 3 {
                0 => ("modular", Box::new(Modular::random(n, &mut rng))),
                1 => ("coverage", Box::new(SetCoverage::random(n, 12, &mut rng))),
                _ => ("cut", Box::new(Cut::random(n, &mut rng))),
            };
            let constraint = if family == "cut" {
                Constraint::unconstrained(n)
            } else if (i / 3) % 2 == 0 {
                Constraint::cardinality(n, rng.random_range(1..=n.min(4))).expect("k within [1, n]")
            } else {
                random_knapsack(n, &mut rng)
            };
            CorpusInstance {
                id: i as u32,
                family,
                function,
                constraint,
            }
        })
        .collect()
}

fn random_knapsack(n: usize, rng: &mut crate::rng::StreamRng) -> Constraint {
    let costs: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let c_min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let c_max = costs.iter().copied().fold(0.0, f64::max);
    let total: f64 = costs.iter().sum();
    let beta = rng.random_range(1.5..6.0);
    let budget = (beta * c_min).max(c_max).min(total);
    Constraint::knapsack(costs, budget).expect("budget between max cost and total cost")
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Runs `alg` on `cfg.trials` surrogates of `f` and reports the smallest
/// margin. Deterministic algorithms pass when every margin is at least
/// zero; randomized ones when the mean over `cfg.randomized_runs` runs is
/// at least `−3` standard errors.
pub fn verify_robustness(
    alg: &OfflineAlgorithm,
    f: &dyn SetFunction,
    c: &Constraint,
    instance_id: u32,
    epsilon: f64,
    cfg: &RobustnessConfig,
    streams: &RngStream,
) -> Result<MarginReport> {
    let spec = alg.spec(c)?;
    let opt = brute_force_opt(f, c)?;
    let bound = spec.alpha * opt.value - spec.delta * epsilon;
    let reference = alg.run(&mut exact_oracle(f), c, &mut streams.substream("reference", 0))?;

    let mut worst: Option<MarginReport> = None;
    for trial in 0..cfg.trials.max(1) {
        let mode = match trial % 4 {
            0 => PerturbationMode::WorstCaseSign {
                reference: reference.clone(),
            },
            1 => PerturbationMode::FixedOffset { direction: 1.0 },
            2 => PerturbationMode::FixedOffset { direction: -1.0 },
            _ => PerturbationMode::Uniform,
        };
        let pspec = PerturbationSpec::new(epsilon, mode, streams.substream("surrogate", trial as u64).random())?;
        // One memo per surrogate: every run sees the same fixed f̂.
        let mut oracle = perturb_oracle(f, &pspec).with_constraint(c.clone());
        let runs = if alg.requires_randomness() {
            cfg.randomized_runs.max(1)
        } else {
            1
        };
        let values: Vec<f64> = (0..runs)
            .map(|r| {
                let mut rng = streams.child("trial", trial as u64).substream("run", r as u64);
                alg.run(&mut oracle, c, &mut rng).map(|s| f.value(&s))
            })
            .collect::<Result<_>>()?;
        let (f_s, se) = mean_and_se(&values);
        let margin = f_s - bound;
        let pass = if alg.requires_randomness() {
            margin >= -3.0 * se - MARGIN_TOLERANCE
        } else {
            margin >= -MARGIN_TOLERANCE
        };
        let report = MarginReport {
            algorithm: alg.to_string(),
            instance_id,
            epsilon,
            f_opt: opt.value,
            f_s,
            bound,
            margin,
            std_error: se,
            pass,
        };
        // Keep the failing trial if any, otherwise the smallest margin.
        let replace = match &worst {
            None => true,
            Some(w) => (w.pass && !report.pass) || (w.pass == report.pass && report.margin < w.margin),
        };
        if replace {
            worst = Some(report);
        }
    }
    Ok(worst.expect("at least one trial"))
}

/// Every applicable (instance, algorithm, ε) cell of `corpus`, in corpus
/// order, computed in parallel with per-cell random streams.
pub fn run_corpus(
    corpus: &[CorpusInstance],
    epsilons: &[f64],
    eps_prime: f64,
    cfg: &RobustnessConfig,
    seed: u64,
) -> Result<Vec<MarginReport>> {
    let cells: Vec<(&CorpusInstance, OfflineAlgorithm, usize)> = corpus
        .iter()
        .flat_map(|inst| {
            inst.algorithms(eps_prime)
                .into_iter()
                .flat_map(move |a| (0..epsilons.len()).map(move |j| (inst, a, j)))
        })
        .collect();
    let root = RngStream::new(seed);
    cells
        .par_iter()
        .map(|(inst, alg, j)| {
            let streams = root.child("instance", inst.id as u64).child(alg.name(), *j as u64);
            verify_robustness(
                alg,
                inst.function.as_ref(),
                &inst.constraint,
                inst.id,
                epsilons[*j],
                cfg,
                &streams,
            )
        })
        .collect()
}

/// Writes `algorithm,instance_id,epsilon,f_opt,f_s,bound,margin,pass`.
pub fn write_margin_csv<W: Write>(reports: &[MarginReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "algorithm",
        "instance_id",
        "epsilon",
        "f_opt",
        "f_s",
        "bound",
        "margin",
        "pass",
    ])?;
    for r in reports {
        w.write_record([
            r.algorithm.clone(),
            r.instance_id.to_string(),
            r.epsilon.to_string(),
            r.f_opt.to_string(),
            r.f_s.to_string(),
            r.bound.to_string(),
            r.margin.to_string(),
            r.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::TableFunction;
    use crate::oracle::ValueOracle;

    #[test]
    fn brute_force_examples() {
        let f = Modular::new(vec![0.5, 0.3, 0.2]);
        let r = brute_force_opt(&f, &Constraint::cardinality(3, 2).unwrap()).unwrap();
        assert_eq!(r.opt, Subset::from_ids([0, 1]));
        assert!((r.value - 0.8).abs() < 1e-15);
        assert_eq!(r.feasible_count, 7);

        let cut = TableFunction::new(2, vec![0.0, 1.0, 1.0, 0.0]);
        let r = brute_force_opt(&cut, &Constraint::unconstrained(2)).unwrap();
        assert_eq!((r.opt, r.value), (Subset::from_ids([0]), 1.0));
    }

    #[test]
    fn brute_force_matches_reverse_enumeration() {
        let streams = RngStream::new(8);
        for i in 0..20 {
            let mut rng = streams.substream("cov", i);
            let f = SetCoverage::random(6, 10, &mut rng);
            let c = Constraint::cardinality(6, 3).unwrap();
            let r = brute_force_opt(&f, &c).unwrap();
            // descending mask order, keeping ties that are lexicographically smaller
            let mut best: Option<(f64, Subset)> = None;
            for mask in (0u32..64).rev() {
                if mask.count_ones() > 3 {
                    continue;
                }
                let s = Subset::from_ids((0..6).filter(|b| mask >> b & 1 == 1));
                let v = f.value(&s);
                let better = match &best {
                    None => true,
                    Some((bv, bs)) => v > *bv || (v == *bv && s < *bs),
                };
                if better {
                    best = Some((v, s));
                }
            }
            let (v, s) = best.unwrap();
            assert_eq!(r.value, v);
            assert_eq!(r.opt, s);
        }
    }

    #[test]
    fn brute_force_refuses_large_instances() {
        let f = Modular::new(vec![0.01; 21]);
        assert!(matches!(
            brute_force_opt(&f, &Constraint::unconstrained(21)),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn surrogates_stay_within_epsilon() {
        let f = SetCoverage::random(10, 12, &mut RngStream::new(1).substream("f", 0));
        let zero = PerturbationSpec::new(0.0, PerturbationMode::Uniform, 3).unwrap();
        let plus = PerturbationSpec::new(0.05, PerturbationMode::FixedOffset { direction: 1.0 }, 0).unwrap();
        let unif = PerturbationSpec::new(0.05, PerturbationMode::Uniform, 3).unwrap();
        let (mut o0, mut op, mut ou) = (
            perturb_oracle(&f, &zero),
            perturb_oracle(&f, &plus),
            perturb_oracle(&f, &unif),
        );
        let mut max_dev: f64 = 0.0;
        for mask in 1u32..1024 {
            let s = Subset::from_ids((0..10).filter(|b| mask >> b & 1 == 1));
            let exact = f.value(&s);
            assert_eq!(o0.query(&s).unwrap(), exact);
            assert_eq!(op.query(&s).unwrap(), exact + 0.05);
            let dev = ou.query(&s).unwrap() - exact;
            max_dev = max_dev.max(dev.abs());
        }
        assert!(max_dev <= 0.05);
        assert!(max_dev > 0.04);
        // the uniform surrogate is a fixed function of the set
        let s = Subset::from_ids([1, 4]);
        assert_eq!(unif.offset(&s), unif.offset(&Subset::from_ids([4, 1])));
    }

    #[test]
    fn exact_greedy_meets_classic_bound() {
        let corpus = random_corpus(30, 5);
        let cfg = RobustnessConfig::default();
        for inst in corpus.iter().filter(|i| i.constraint.kind_name() == "cardinality") {
            let r = verify_robustness(
                &OfflineAlgorithm::Greedy,
                inst.function.as_ref(),
                &inst.constraint,
                inst.id,
                0.0,
                &cfg,
                &RngStream::new(2),
            )
            .unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn near_tie_flip_stays_within_bound() {
        // the surrogate can swap element 1 for element 2
        let eps = 0.05;
        let f = Modular::new(vec![0.3, 0.3 - eps / 2.0, 0.3 - eps, 0.05]);
        let c = Constraint::cardinality(4, 2).unwrap();
        let r = verify_robustness(
            &OfflineAlgorithm::Greedy,
            &f,
            &c,
            0,
            eps,
            &RobustnessConfig::default(),
            &RngStream::new(3),
        )
        .unwrap();
        assert!(r.pass && r.margin >= 0.0, "{r:?}");
    }

    #[test]
    fn usm_on_two_node_cut() {
        let f = TableFunction::new(2, vec![0.0, 1.0, 1.0, 0.0]);
        let c = Constraint::unconstrained(2);
        let r = verify_robustness(
            &OfflineAlgorithm::RandomizedUsm,
            &f,
            &c,
            0,
            0.05,
            &RobustnessConfig::default(),
            &RngStream::new(4),
        )
        .unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.bound, 0.5 - 5.0 * 0.05);
    }

    #[test]
    fn corpus_shape() {
        let corpus = random_corpus(200, 11);
        assert_eq!(corpus.len(), 200);
        for inst in &corpus {
            let n = inst.constraint.ground_size();
            assert!((4..=10).contains(&n));
            assert_eq!(inst.function.ground_size(), n);
            match &inst.constraint {
                Constraint::Cardinality { k, .. } => assert!(*k <= 4),
                Constraint::Knapsack { .. } => {
                    assert!(inst.constraint.knapsack_params().unwrap().beta <= 6.0 + 1e-9)
                }
                Constraint::Unconstrained { .. } => assert_eq!(inst.family, "cut"),
            }
        }
    }

    #[test]
    fn margin_csv_header() {
        let mut buf = Vec::new();
        write_margin_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "algorithm,instance_id,epsilon,f_opt,f_s,bound,margin,pass\n"
        );
    }
}
