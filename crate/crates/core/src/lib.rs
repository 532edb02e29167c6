//! Combinatorial multi-armed bandits with full-bandit feedback.
//!
//! Offline submodular maximization algorithms that tolerate a uniformly
//! perturbed value oracle are turned into online learners by
//! [`cetc::run_cetc`], which answers each oracle query with the empirical
//! mean of repeated plays and then commits to the offline solution. The
//! crate also ships reward environments, an adversarial online-greedy
//! baseline, a robustness checker for the offline algorithms, and an
//! experiment harness.

pub mod cetc;
pub mod constraint;
pub mod envs;
pub mod error;
pub mod functions;
pub mod harness;
pub mod offline;
pub mod ogo;
pub mod oracle;
pub mod rng;
pub mod robustlab;
pub mod subset;
pub mod trace;

pub use cetc::{anytime_cetc, run_cetc, CetcSchedule};
pub use constraint::Constraint;
pub use envs::{Environment, Estimate};
pub use error::{Error, Result};
pub use functions::SetFunction;
pub use harness::{run_experiment, ExperimentConfig};
pub use offline::OfflineAlgorithm;
pub use oracle::{MemoOracle, ValueOracle};
pub use rng::{RngStream, StreamRng};
pub use subset::{ElementId, Subset};
pub use trace::{Phase, RunTrace};
