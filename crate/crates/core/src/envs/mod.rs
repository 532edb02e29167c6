//! Stochastic reward environments with rewards in `[0, 1]`.

pub mod cascade;
pub mod coverage;

use rand::Rng;

use crate::functions::SetFunction;
use crate::rng::StreamRng;
use crate::subset::Subset;

pub use cascade::{bim_costs, ic_mean, ic_sample, load_edge_list, seed_pool, CascadeEnv, DirectedGraph};
pub use coverage::{coverage_mean, coverage_sample, load_coverage_csv, CoverageEnv, CoverageModel, CoverageNoise};

/// A mean value, possibly Monte-Carlo estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Zero for closed-form means.
    pub std_error: f64,
    /// Zero for closed-form means.
    pub samples: u64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            std_error: 0.0,
            samples: 0,
        }
    }
}

/// Draws i.i.d. rewards `f_t(A) ∈ [0, 1]` for a fixed action `A`.
pub trait Environment: Send + Sync {
    fn ground_size(&self) -> usize;

    fn sample(&self, action: &Subset, rng: &mut StreamRng) -> f64;

    /// `E[f_t(A)]`; Monte-Carlo environments use `rng` and report the error.
    fn mean(&self, action: &Subset, rng: &mut StreamRng) -> Estimate;

    /// Per-arm costs when the environment defines them.
    fn costs(&self) -> Option<&[f64]> {
        None
    }
}

/// Noiseless environment: every reward equals `f(A)`.
pub struct DeterministicEnv<F> {
    pub function: F,
}

impl<F: SetFunction> DeterministicEnv<F> {
    pub fn new(function: F) -> Self {
        DeterministicEnv { function }
    }
}

impl<F: SetFunction> Environment for DeterministicEnv<F> {
    fn ground_size(&self) -> usize {
        self.function.ground_size()
    }
    fn sample(&self, action: &Subset, _rng: &mut StreamRng) -> f64 {
        self.function.value(action)
    }
    fn mean(&self, action: &Subset, _rng: &mut StreamRng) -> Estimate {
        Estimate::exact(self.function.value(action))
    }
}

/// Reward `~ Bernoulli(f(A))`.
pub struct BernoulliEnv<F> {
    pub function: F,
}

impl<F: SetFunction> BernoulliEnv<F> {
    pub fn new(function: F) -> Self {
        BernoulliEnv { function }
    }
}

impl<F: SetFunction> Environment for BernoulliEnv<F> {
    fn ground_size(&self) -> usize {
        self.function.ground_size()
    }
    fn sample(&self, action: &Subset, rng: &mut StreamRng) -> f64 {
        let p = self.function.value(action);
        if rng.random::<f64>() < p {
            1.0
        } else {
            0.0
        }
    }
    fn mean(&self, action: &Subset, _rng: &mut StreamRng) -> Estimate {
        Estimate::exact(self.function.value(action))
    }
}
