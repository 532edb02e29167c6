//! Offline approximation algorithms driven purely through a [`ValueOracle`].
//!
//! Each algorithm carries its certified robustness pair `(α, δ)` and an upper
//! bound `N` on the number of distinct oracle queries it can issue on a given
//! instance. Those three numbers are all the explore-then-commit adapter
//! needs to know about an algorithm.

pub mod cardinality;
pub mod knapsack;
pub mod usm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::oracle::ValueOracle;
use crate::rng::StreamRng;
use crate::subset::Subset;

pub use cardinality::{greedy_cardinality, threshold_greedy};
pub use knapsack::{
    greedy_density_from, greedy_density_sequence, greedy_plus, greedy_plus_max, partial_enumeration, GreedyLevel,
    GreedyTrace,
};
pub use usm::randomized_usm;

const INV_E: f64 = 0.367_879_441_171_442_33;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OfflineAlgorithm {
    Greedy,
    ThresholdGreedy { eps_prime: f64 },
    PartialEnumeration,
    GreedyPlus,
    GreedyPlusMax,
    RandomizedUsm,
}

/// An algorithm together with its certified constants on one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfflineAlgSpec {
    pub algorithm: OfflineAlgorithm,
    pub alpha: f64,
    pub delta: f64,
    /// Loose query bound `N` used to size the exploration phase.
    pub query_bound: u64,
    pub requires_randomness: bool,
}

impl OfflineAlgorithm {
    pub const DEFAULT_EPS_PRIME: f64 = 0.1;

    pub fn all(eps_prime: f64) -> [OfflineAlgorithm; 6] {
        [
            OfflineAlgorithm::Greedy,
            OfflineAlgorithm::ThresholdGreedy { eps_prime },
            OfflineAlgorithm::PartialEnumeration,
            OfflineAlgorithm::GreedyPlus,
            OfflineAlgorithm::GreedyPlusMax,
            OfflineAlgorithm::RandomizedUsm,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            OfflineAlgorithm::Greedy => "greedy",
            OfflineAlgorithm::ThresholdGreedy { .. } => "threshold-greedy",
            OfflineAlgorithm::PartialEnumeration => "partial-enumeration",
            OfflineAlgorithm::GreedyPlus => "greedy-plus",
            OfflineAlgorithm::GreedyPlusMax => "greedy-plus-max",
            OfflineAlgorithm::RandomizedUsm => "randomized-usm",
        }
    }

    /// Name of the explore-then-commit adaptation.
    pub fn cetc_label(&self) -> &'static str {
        match self {
            OfflineAlgorithm::Greedy => "C-ETC-N",
            OfflineAlgorithm::ThresholdGreedy { .. } => "C-ETC-Ba",
            OfflineAlgorithm::PartialEnumeration => "C-ETC-S",
            OfflineAlgorithm::GreedyPlus => "C-ETC-K",
            OfflineAlgorithm::GreedyPlusMax => "C-ETC-Y",
            OfflineAlgorithm::RandomizedUsm => "C-ETC-Bu",
        }
    }

    pub fn required_kind(&self) -> &'static str {
        match self {
            OfflineAlgorithm::Greedy | OfflineAlgorithm::ThresholdGreedy { .. } => "cardinality",
            OfflineAlgorithm::RandomizedUsm => "unconstrained",
            _ => "knapsack",
        }
    }

    pub fn requires_randomness(&self) -> bool {
        matches!(self, OfflineAlgorithm::RandomizedUsm)
    }

    /// Greedy+ and Greedy+Max, whose query count admits the tighter
    /// per-level bound used for short horizons.
    pub fn is_knapsack_greedy_family(&self) -> bool {
        matches!(self, OfflineAlgorithm::GreedyPlus | OfflineAlgorithm::GreedyPlusMax)
    }

    fn check_constraint(&self, c: &Constraint) -> Result<()> {
        if c.kind_name() != self.required_kind() {
            return Err(Error::Contract(format!(
                "{} needs a {} constraint, got {}",
                self.name(),
                self.required_kind(),
                c.kind_name()
            )));
        }
        Ok(())
    }

    /// Certified `(α, δ)` and query bound on `c`.
    pub fn spec(&self, c: &Constraint) -> Result<OfflineAlgSpec> {
        self.check_constraint(c)?;
        let n = c.ground_size() as f64;
        let (alpha, delta) = match (*self, c) {
            (OfflineAlgorithm::Greedy, Constraint::Cardinality { k, .. }) => (1.0 - INV_E, 2.0 * *k as f64),
            (OfflineAlgorithm::ThresholdGreedy { eps_prime }, Constraint::Cardinality { k, .. }) => {
                (1.0 - INV_E - eps_prime, 2.0 * (2.0 - eps_prime) * *k as f64)
            }
            (OfflineAlgorithm::RandomizedUsm, _) => (0.5, 2.5 * n),
            (alg, _) => {
                let p = c.knapsack_params()?;
                let kt = p.k_tilde as f64;
                match alg {
                    OfflineAlgorithm::PartialEnumeration => (1.0 - INV_E, 4.0 + 2.0 * kt + 2.0 * p.beta),
                    OfflineAlgorithm::GreedyPlusMax => (0.5, 0.5 + kt + 2.0 * p.beta),
                    OfflineAlgorithm::GreedyPlus => (0.5 * (1.0 - INV_E), 2.0 + kt + p.beta),
                    _ => unreachable!("kinds checked above"),
                }
            }
        };
        Ok(OfflineAlgSpec {
            algorithm: *self,
            alpha,
            delta,
            query_bound: self.query_bound(c)?,
            requires_randomness: self.requires_randomness(),
        })
    }

    /// `kn`, `⌈(n/ε')·ln(n/ε')⌉`, `K̃n⁴`, `K̃n`, `K̃n`, `4n` respectively.
    pub fn query_bound(&self, c: &Constraint) -> Result<u64> {
        self.check_constraint(c)?;
        let n = c.ground_size() as u64;
        Ok(match (*self, c) {
            (OfflineAlgorithm::Greedy, Constraint::Cardinality { k, .. }) => *k as u64 * n,
            (OfflineAlgorithm::ThresholdGreedy { eps_prime }, _) => {
                let r = n as f64 / eps_prime;
                (r * r.ln()).ceil().max(n as f64) as u64
            }
            (OfflineAlgorithm::RandomizedUsm, _) => 4 * n,
            (OfflineAlgorithm::PartialEnumeration, _) => c.knapsack_params()?.k_tilde as u64 * n.pow(4),
            _ => c.knapsack_params()?.k_tilde as u64 * n,
        })
    }

    /// `(n − K̃/2 + 1/2)·K̃ = n + (n−1) + … + (n−K̃+1)` for the knapsack greedy
    /// family; `None` otherwise.
    pub fn tight_query_bound(&self, c: &Constraint) -> Result<Option<u64>> {
        self.check_constraint(c)?;
        if !self.is_knapsack_greedy_family() {
            return Ok(None);
        }
        let n = c.ground_size() as u64;
        let kt = c.knapsack_params()?.k_tilde as u64;
        Ok(Some(tight_bound(n, kt)))
    }

    /// Runs the algorithm against `oracle` under `c`.
    pub fn run(&self, oracle: &mut dyn ValueOracle, c: &Constraint, rng: &mut StreamRng) -> Result<Subset> {
        self.check_constraint(c)?;
        let n = c.ground_size();
        match (*self, c) {
            (OfflineAlgorithm::Greedy, Constraint::Cardinality { k, .. }) => greedy_cardinality(oracle, n, *k),
            (OfflineAlgorithm::ThresholdGreedy { eps_prime }, Constraint::Cardinality { k, .. }) => {
                let cap = self.query_bound(c)? as usize;
                threshold_greedy(oracle, n, *k, eps_prime, Some(cap))
            }
            (OfflineAlgorithm::PartialEnumeration, Constraint::Knapsack { costs, budget }) => {
                partial_enumeration(oracle, costs, *budget)
            }
            (OfflineAlgorithm::GreedyPlus, Constraint::Knapsack { costs, budget }) => {
                greedy_plus(oracle, costs, *budget)
            }
            (OfflineAlgorithm::GreedyPlusMax, Constraint::Knapsack { costs, budget }) => {
                greedy_plus_max(oracle, costs, *budget)
            }
            (OfflineAlgorithm::RandomizedUsm, _) => randomized_usm(oracle, n, rng),
            _ => unreachable!("kinds checked above"),
        }
    }
}

/// `n + (n−1) + … + (n−k+1)`.
pub fn tight_bound(n: u64, k_tilde: u64) -> u64 {
    // (2n − K̃ + 1)·K̃ is always even.
    (2 * n + 1 - k_tilde) * k_tilde / 2
}

impl fmt::Display for OfflineAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OfflineAlgorithm::ThresholdGreedy { eps_prime } => {
                write!(f, "threshold-greedy:{eps_prime}")
            }
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for OfflineAlgorithm {
    type Err = Error;

    /// Accepts the kebab-case names; `threshold-greedy:<eps>` sets `ε'`.
    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let alg = match head {
            "greedy" => OfflineAlgorithm::Greedy,
            "threshold-greedy" => {
                let eps_prime = match arg {
                    Some(a) => a
                        .parse::<f64>()
                        .map_err(|_| Error::config("algorithm", format!("bad eps' in `{s}`")))?,
                    None => Self::DEFAULT_EPS_PRIME,
                };
                if !(eps_prime > 0.0 && eps_prime < 1.0) {
                    return Err(Error::config("algorithm", "eps' must lie in (0, 1)"));
                }
                return Ok(OfflineAlgorithm::ThresholdGreedy { eps_prime });
            }
            "partial-enumeration" => OfflineAlgorithm::PartialEnumeration,
            "greedy-plus" => OfflineAlgorithm::GreedyPlus,
            "greedy-plus-max" => OfflineAlgorithm::GreedyPlusMax,
            "randomized-usm" => OfflineAlgorithm::RandomizedUsm,
            _ => return Err(Error::config("algorithm", format!("unknown algorithm `{s}`"))),
        };
        if arg.is_some() {
            return Err(Error::config("algorithm", format!("`{head}` takes no parameter")));
        }
        Ok(alg)
    }
}
