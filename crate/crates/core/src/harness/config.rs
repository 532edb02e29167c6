//! TOML experiment configuration.
//!
//! ```toml
//! seed = 7
//! replications = 10
//! algorithms = ["cetc:greedy-plus-max", "cetc:greedy-plus", "ogo"]
//!
//! [environment]
//! kind = "coverage"
//! features = "songs.csv"      # relative to this file
//! weights = "users.csv"
//!
//! [constraint]
//! kind = "knapsack"
//! budget = 4.0                # costs come from the environment
//!
//! [horizons]
//! start_exponent = 3.5        # 10^3.5 ..= 10^5.5, 7 points
//! end_exponent = 5.5
//! count = 7
//! ```

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ReferencePolicy;
use crate::constraint::Constraint;
use crate::envs::{load_coverage_csv, load_edge_list, CascadeEnv, CoverageEnv, CoverageNoise, Environment};
use crate::envs::{BernoulliEnv, DeterministicEnv};
use crate::error::{Error, Result};
use crate::functions::Modular;
use crate::offline::OfflineAlgorithm;
use crate::ogo::OgoConfig;

fn default_replications() -> usize {
    10
}

fn default_window() -> usize {
    super::DEFAULT_SMOOTHING_WINDOW
}

fn default_percentile() -> f64 {
    95.0
}

fn default_mean_samples() -> u64 {
    CascadeEnv::DEFAULT_MEAN_SAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    /// `cetc:<offline algorithm>` or `ogo`.
    pub algorithms: Vec<String>,
    pub environment: EnvironmentSpec,
    pub constraint: ConstraintSpec,
    pub horizons: HorizonGrid,
    #[serde(default)]
    pub reference: ReferencePolicy,
    #[serde(default)]
    pub ogo: OgoConfig,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory that relative data paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    Coverage {
        features: PathBuf,
        #[serde(default)]
        weights: Option<PathBuf>,
        #[serde(default)]
        noise: CoverageNoise,
    },
    Cascade {
        edges: PathBuf,
        #[serde(default)]
        symmetrize: bool,
        #[serde(default = "default_percentile")]
        pool_percentile: f64,
        #[serde(default = "default_mean_samples")]
        mean_samples: u64,
    },
    /// Additive rewards; `bernoulli` noise draws a 0/1 reward with the
    /// set's value as success probability.
    Modular {
        weights: Vec<f64>,
        #[serde(default)]
        noise: CoverageNoise,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConstraintSpec {
    Cardinality {
        k: usize,
    },
    Knapsack {
        budget: f64,
        /// Overrides the environment's own costs.
        #[serde(default)]
        costs: Option<Vec<f64>>,
    },
    Unconstrained,
}

/// Either explicit `values` or `count` points log-spaced between
/// `10^start_exponent` and `10^end_exponent`, rounded to integers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonGrid {
    #[serde(default)]
    pub values: Option<Vec<u64>>,
    #[serde(default)]
    pub start_exponent: Option<f64>,
    #[serde(default)]
    pub end_exponent: Option<f64>,
    #[serde(default)]
    pub count: Option<usize>,
}

impl HorizonGrid {
    pub fn log_spaced(start_exponent: f64, end_exponent: f64, count: usize) -> Self {
        HorizonGrid {
            values: None,
            start_exponent: Some(start_exponent),
            end_exponent: Some(end_exponent),
            count: Some(count),
        }
    }

    pub fn resolve(&self) -> Result<Vec<u64>> {
        let hs = match (&self.values, self.start_exponent, self.end_exponent, self.count) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(count)) => {
                if count == 0 {
                    return Err(Error::config("horizons.count", "must be at least 1"));
                }
                if count == 1 {
                    vec![10f64.powf(a).round() as u64]
                } else {
                    (0..count)
                        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64).round() as u64)
                        .collect()
                }
            }
            _ => {
                return Err(Error::config(
                    "horizons",
                    "give either `values` or all of `start_exponent`, `end_exponent`, `count`",
                ))
            }
        };
        if hs.is_empty() {
            return Err(Error::config("horizons", "no horizons"));
        }
        if hs[0] == 0 {
            return Err(Error::config("horizons", "horizons must be positive"));
        }
        if hs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("horizons", format!("not strictly increasing: {hs:?}")));
        }
        Ok(hs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Write per-cell `trace` and `regret` CSVs.
    pub traces: bool,
    pub smoothing_window: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            traces: false,
            smoothing_window: default_window(),
        }
    }
}

/// One learner in a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlgorithmSpec {
    Cetc(OfflineAlgorithm),
    Ogo,
}

impl AlgorithmSpec {
    /// Filesystem-safe form of the name.
    pub fn file_stem(&self) -> String {
        self.to_string().replace([':', '.'], "_")
    }

    /// Display label such as `C-ETC-Y` or `OG-o`.
    pub fn label(&self) -> &'static str {
        match self {
            AlgorithmSpec::Cetc(a) => a.cetc_label(),
            AlgorithmSpec::Ogo => "OG-o",
        }
    }
}

impl fmt::Display for AlgorithmSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgorithmSpec::Cetc(a) => write!(f, "cetc:{a}"),
            AlgorithmSpec::Ogo => f.write_str("ogo"),
        }
    }
}

impl FromStr for AlgorithmSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "ogo" {
            return Ok(AlgorithmSpec::Ogo);
        }
        match s.strip_prefix("cetc:") {
            Some(rest) => Ok(AlgorithmSpec::Cetc(rest.parse()?)),
            None => Err(Error::config(
                "algorithms",
                format!("`{s}` is neither `ogo` nor `cetc:<algorithm>`"),
            )),
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates a config file.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::config("<file>", format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base)
    }

    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| {
                    let line = text[..s.start].matches('\n').count() + 1;
                    format!("<line {line}>")
                })
                .unwrap_or_else(|| "<document>".into());
            Error::config(field, e.message().to_string())
        })?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::config("replications", "must be at least 1"));
        }
        self.horizons.resolve()?;
        let algs = self.algorithm_specs()?;
        if algs.is_empty() {
            return Err(Error::config("algorithms", "no algorithms listed"));
        }
        match &self.environment {
            EnvironmentSpec::Coverage { features, weights, .. } => {
                self.require_file("environment.features", features)?;
                if let Some(w) = weights {
                    self.require_file("environment.weights", w)?;
                }
            }
            EnvironmentSpec::Cascade {
                edges,
                pool_percentile,
                mean_samples,
                ..
            } => {
                self.require_file("environment.edges", edges)?;
                if !(0.0..=100.0).contains(pool_percentile) {
                    return Err(Error::config("environment.pool_percentile", "must lie in [0, 100]"));
                }
                if *mean_samples == 0 {
                    return Err(Error::config("environment.mean_samples", "must be at least 1"));
                }
            }
            EnvironmentSpec::Modular { weights, .. } => {
                if weights.is_empty() || weights.iter().any(|w| w.is_nan() || *w < 0.0) {
                    return Err(Error::config("environment.weights", "need nonnegative weights"));
                }
                if weights.iter().sum::<f64>() > 1.0 + 1e-12 {
                    return Err(Error::config("environment.weights", "weights must sum to at most 1"));
                }
            }
        }
        match &self.constraint {
            ConstraintSpec::Cardinality { k } if *k == 0 => {
                return Err(Error::config("constraint.k", "must be at least 1"))
            }
            ConstraintSpec::Knapsack { budget, .. } if budget.is_nan() || *budget <= 0.0 => {
                return Err(Error::config("constraint.budget", "must be positive"))
            }
            _ => {}
        }
        for (i, a) in algs.iter().enumerate() {
            let kind = match a {
                AlgorithmSpec::Cetc(alg) => alg.required_kind(),
                AlgorithmSpec::Ogo => "knapsack",
            };
            let have = match self.constraint {
                ConstraintSpec::Cardinality { .. } => "cardinality",
                ConstraintSpec::Knapsack { .. } => "knapsack",
                ConstraintSpec::Unconstrained => "unconstrained",
            };
            if kind != have {
                return Err(Error::config(
                    format!("algorithms[{i}]"),
                    format!("`{a}` needs a {kind} constraint, config has {have}"),
                ));
            }
        }
        if let ReferencePolicy::Opt { alpha } = self.reference {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::config("reference.alpha", "must lie in (0, 1]"));
            }
        }
        if let Some(g) = self.ogo.gamma {
            if !(0.0..=1.0).contains(&g) {
                return Err(Error::config("ogo.gamma", "must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    fn require_file(&self, field: &str, p: &Path) -> Result<()> {
        let full = self.resolve_path(p);
        if full.is_file() {
            Ok(())
        } else {
            Err(Error::config(field, format!("no such file: {}", full.display())))
        }
    }

    pub fn algorithm_specs(&self) -> Result<Vec<AlgorithmSpec>> {
        self.algorithms
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.parse::<AlgorithmSpec>().map_err(|e| match e {
                    Error::Config { message, .. } => Error::config(format!("algorithms[{i}]"), message),
                    other => other,
                })
            })
            .collect()
    }

    /// Loads data and builds the environment.
    pub fn build_environment(&self) -> Result<Box<dyn Environment>> {
        Ok(match &self.environment {
            EnvironmentSpec::Coverage {
                features,
                weights,
                noise,
            } => {
                let w = weights.as_ref().map(|w| self.resolve_path(w));
                let model = load_coverage_csv(&self.resolve_path(features), w.as_deref())?;
                Box::new(CoverageEnv::new(model, *noise))
            }
            EnvironmentSpec::Cascade {
                edges,
                symmetrize,
                pool_percentile,
                mean_samples,
            } => {
                let graph = load_edge_list(&self.resolve_path(edges), *symmetrize)?;
                let mut env = CascadeEnv::with_percentile(graph, *pool_percentile);
                if env.pool.is_empty() {
                    return Err(Error::config("environment.pool_percentile", "seed pool is empty"));
                }
                env.mean_samples = *mean_samples;
                Box::new(env)
            }
            EnvironmentSpec::Modular { weights, noise } => {
                let f = Modular::new(weights.clone());
                match noise {
                    CoverageNoise::Bernoulli => Box::new(BernoulliEnv::new(f)),
                    CoverageNoise::None => Box::new(DeterministicEnv::new(f)),
                }
            }
        })
    }

    pub fn build_constraint(&self, env: &dyn Environment) -> Result<Constraint> {
        let n = env.ground_size();
        match &self.constraint {
            ConstraintSpec::Cardinality { k } => {
                Constraint::cardinality(n, *k).map_err(|e| Error::config("constraint.k", e.to_string()))
            }
            ConstraintSpec::Knapsack { budget, costs } => {
                let costs = match (costs, env.costs()) {
                    (Some(c), _) => c.clone(),
                    (None, Some(c)) => c.to_vec(),
                    (None, None) => {
                        return Err(Error::config(
                            "constraint.costs",
                            "environment has no costs; list them here",
                        ))
                    }
                };
                if costs.len() != n {
                    return Err(Error::config(
                        "constraint.costs",
                        format!("{} costs for {n} arms", costs.len()),
                    ));
                }
                Constraint::knapsack(costs, *budget).map_err(|e| Error::config("constraint.budget", e.to_string()))
            }
            ConstraintSpec::Unconstrained => Ok(Constraint::unconstrained(n)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
seed = 3
algorithms = ["cetc:greedy", "cetc:threshold-greedy:0.2"]
[environment]
kind = "modular"
weights = [0.5, 0.3, 0.2]
[constraint]
kind = "cardinality"
k = 2
[horizons]
values = [100, 1000]
"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_toml(BASE, Path::new(".")).unwrap();
        assert_eq!(cfg.replications, 10);
        assert_eq!(cfg.horizons.resolve().unwrap(), vec![100, 1000]);
        let algs = cfg.algorithm_specs().unwrap();
        assert_eq!(
            algs[1],
            AlgorithmSpec::Cetc(OfflineAlgorithm::ThresholdGreedy { eps_prime: 0.2 })
        );
        assert_eq!(algs[1].file_stem(), "cetc_threshold-greedy_0_2");
        let env = cfg.build_environment().unwrap();
        assert_eq!(
            cfg.build_constraint(env.as_ref()).unwrap(),
            Constraint::cardinality(3, 2).unwrap()
        );
    }

    #[test]
    fn log_spaced_grid() {
        let hs = HorizonGrid::log_spaced(3.5, 5.5, 7).resolve().unwrap();
        assert_eq!(hs, vec![3162, 6813, 14678, 31623, 68129, 146780, 316228]);
    }

    fn field_of(text: &str) -> String {
        match ExperimentConfig::from_toml(text, Path::new("/nonexistent")) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation_names_fields() {
        assert_eq!(
            field_of(&BASE.replace("values = [100, 1000]", "values = [1000, 100]")),
            "horizons"
        );
        assert_eq!(
            field_of(&BASE.replace("seed = 3", "seed = 3\nreplications = 0")),
            "replications"
        );
        assert_eq!(
            field_of(&BASE.replace("\"cetc:greedy\"", "\"cetc:bogus\"")),
            "algorithms[0]"
        );
        assert_eq!(field_of(&BASE.replace("\"cetc:greedy\"", "\"ogo\"")), "algorithms[0]");
        let cov = BASE.replace(
            "kind = \"modular\"\nweights = [0.5, 0.3, 0.2]",
            "kind = \"coverage\"\nfeatures = \"missing.csv\"",
        );
        assert_eq!(field_of(&cov), "environment.features");
        assert!(field_of(&BASE.replace("k = 2", "k = 2\nextra = 1")).starts_with("<line"));
    }
}
