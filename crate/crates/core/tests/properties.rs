//! Property-based invariants across modules.

use proptest::prelude::*;

use cmab::cetc::{check_accounting, confidence_radius, m_formula};
use cmab::envs::{coverage_mean, BernoulliEnv, CoverageModel};
use cmab::functions::Modular;
use cmab::harness::loglog_slope;
use cmab::ogo::{run_ogo, OgoConfig};
use cmab::oracle::exact_oracle;
use cmab::robustlab::brute_force_opt;
use cmab::{run_cetc, CetcSchedule, Constraint, ElementId, OfflineAlgorithm, RngStream, SetFunction, Subset};

fn coverage_model() -> impl Strategy<Value = CoverageModel> {
    (1usize..7, 1usize..4).prop_flat_map(|(n, g)| {
        (
            prop::collection::vec(prop::collection::vec(0.0f64..=1.0, g), n),
            prop::collection::vec(prop::collection::vec(0.0f64..1.0, g), 0..4),
        )
            .prop_map(move |(probs, users)| {
                let users = users
                    .into_iter()
                    .map(|w| {
                        let s: f64 = w.iter().sum::<f64>().max(1.0);
                        w.into_iter().map(|x| x / s).collect()
                    })
                    .collect();
                CoverageModel::new((0..g).map(|i| format!("g{i}")).collect(), probs, users).unwrap()
            })
    })
}

fn mask_subset(n: usize, mask: u32) -> Subset {
    Subset::from_ids((0..n).filter(|i| mask >> i & 1 == 1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn coverage_is_monotone_submodular_and_bounded(model in coverage_model(), a in any::<u32>(), b in any::<u32>(), e in 0usize..7) {
        let n = model.element_count();
        let big = mask_subset(n, a | b);
        let small = mask_subset(n, a);
        let (fs, fb) = (coverage_mean(&model, &small), coverage_mean(&model, &big));
        prop_assert!((0.0..=1.0 + 1e-12).contains(&fb));
        prop_assert!(fs <= fb + 1e-12);
        let e = ElementId::from(e % n);
        if !big.contains(e) {
            let gs = coverage_mean(&model, &small.with(e)) - fs;
            let gb = coverage_mean(&model, &big.with(e)) - fb;
            prop_assert!(gs >= gb - 1e-12);
        }
    }

    #[test]
    fn schedule_grows_with_horizon(delta in 0.5f64..30.0, n in 1u64..200, t in 100u64..1_000_000) {
        prop_assert!(m_formula(delta, n, t) <= m_formula(delta, n, 2 * t));
        let m = m_formula(delta, n, t);
        prop_assert!(confidence_radius(t, m) > 0.0);
    }

    #[test]
    fn cetc_runs_respect_accounting(weights in prop::collection::vec(0.0f64..0.4, 2..7), k in 1usize..3, t in 2_000u64..20_000, seed in any::<u64>()) {
        let n = weights.len();
        let c = Constraint::cardinality(n, k.min(n)).unwrap();
        let env = BernoulliEnv::new(Modular::new(weights));
        let alg = OfflineAlgorithm::Greedy;
        let plan = CetcSchedule::plan(&alg, &c, t);
        prop_assume!(plan.is_ok());
        let plan = plan.unwrap();
        let mut rng = RngStream::new(seed).substream("run", 0);
        let trace = run_cetc(&env, &alg, &c, t, &mut rng).unwrap();
        prop_assert!(check_accounting(&trace, &plan, &c).is_ok());
        prop_assert_eq!(trace.len() as u64, t);
    }

    #[test]
    fn brute_force_dominates_every_knapsack_algorithm(weights in prop::collection::vec(0.0f64..1.0, 2..8), costs in prop::collection::vec(0.5f64..2.0, 8), beta in 1.5f64..5.0) {
        let n = weights.len();
        let costs = costs[..n].to_vec();
        let c_max = costs.iter().copied().fold(0.0, f64::max);
        let c_min = costs.iter().copied().fold(f64::INFINITY, f64::min);
        let budget = (beta * c_min).max(c_max).min(costs.iter().sum());
        let c = Constraint::knapsack(costs, budget).unwrap();
        let f = Modular::new(weights);
        let opt = brute_force_opt(&f, &c).unwrap().value;
        let mut rng = RngStream::new(1).substream("alg", 0);
        for alg in [OfflineAlgorithm::GreedyPlus, OfflineAlgorithm::GreedyPlusMax, OfflineAlgorithm::PartialEnumeration] {
            let s = alg.run(&mut exact_oracle(&f), &c, &mut rng).unwrap();
            prop_assert!(c.is_feasible(&s).unwrap());
            prop_assert!(f.value(&s) <= opt + 1e-12);
        }
    }

    #[test]
    fn ogo_unit_cost_sets_never_exceed_expert_count(n in 2usize..10, budget in 1.0f64..5.0, seed in any::<u64>()) {
        let env = BernoulliEnv::new(Modular::new(vec![0.1; n]));
        let mut rng = RngStream::new(seed).substream("ogo", 0);
        let trace = run_ogo(&env, &vec![1.0; n], budget, 500, &OgoConfig::default(), &mut rng).unwrap();
        let cap = (budget.floor() as usize).min(n);
        prop_assert!(trace.actions().iter().all(|s| s.len() <= cap));
    }

    #[test]
    fn slope_recovers_power_law_exponents(exp in 0.1f64..1.5, scale in 0.01f64..100.0) {
        let ts = [1e3, 3e3, 1e4, 3e4, 1e5];
        let rs: Vec<f64> = ts.iter().map(|t: &f64| scale * t.powf(exp)).collect();
        prop_assert!((loglog_slope(&ts, &rs).unwrap() - exp).abs() < 1e-9);
    }
}
