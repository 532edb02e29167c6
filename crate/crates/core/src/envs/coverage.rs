//! Probabilistic coverage recommendation.
//!
//! Element `e` covers genre `g` with probability `P_g(e)`. A user with genre
//! weights `w` values a set `S` at `Σ_g w_g·(1 − Π_{e∈S}(1 − P_g(e)))`. Each
//! round every user independently accepts with that probability, and the
//! reward is the accepted fraction.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Environment, Estimate};
use crate::error::{Error, Result};
use crate::functions::SetFunction;
use crate::rng::StreamRng;
use crate::subset::Subset;

const COST_COLUMN: &str = "cost";

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageModel {
    genres: Vec<String>,
    /// `probs[e][g] = P_g(e)`.
    probs: Vec<Vec<f64>>,
    /// One weight row per user, each summing to at most 1.
    users: Vec<Vec<f64>>,
    /// Row mean of `users`; the expected reward is linear in the weights.
    mean_weights: Vec<f64>,
    costs: Option<Vec<f64>>,
}

impl CoverageModel {
    /// Validates probabilities and weights. Weight rows summing above 1 are
    /// rescaled to sum to 1 with a warning. An empty `users` means one user
    /// weighting every genre equally.
    pub fn new(genres: Vec<String>, probs: Vec<Vec<f64>>, users: Vec<Vec<f64>>) -> Result<Self> {
        let g = genres.len();
        if g == 0 {
            return Err(Error::ModelInvariant("coverage model needs at least one genre".into()));
        }
        for (e, row) in probs.iter().enumerate() {
            if row.len() != g {
                return Err(Error::LengthMismatch {
                    expected: g,
                    actual: row.len(),
                });
            }
            if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::ModelInvariant(format!("P(element {e}) = {p} outside [0, 1]")));
            }
        }
        let mut users = if users.is_empty() {
            vec![vec![1.0 / g as f64; g]]
        } else {
            users
        };
        for (u, row) in users.iter_mut().enumerate() {
            if row.len() != g {
                return Err(Error::LengthMismatch {
                    expected: g,
                    actual: row.len(),
                });
            }
            if let Some(w) = row.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
                return Err(Error::ModelInvariant(format!("user {u} has weight {w}")));
            }
            normalize_row(row, u);
        }
        let mut mean_weights = vec![0.0; g];
        for row in &users {
            for (m, w) in mean_weights.iter_mut().zip(row) {
                *m += w;
            }
        }
        for m in &mut mean_weights {
            *m /= users.len() as f64;
        }
        Ok(CoverageModel {
            genres,
            probs,
            users,
            mean_weights,
            costs: None,
        })
    }

    pub fn with_costs(mut self, costs: Vec<f64>) -> Result<Self> {
        if costs.len() != self.probs.len() {
            return Err(Error::LengthMismatch {
                expected: self.probs.len(),
                actual: costs.len(),
            });
        }
        if let Some(c) = costs.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(Error::ModelInvariant(format!("cost {c} is not positive")));
        }
        self.costs = Some(costs);
        Ok(self)
    }

    pub fn genres(&self) -> &[String] {
        &self.genres
    }

    pub fn element_count(&self) -> usize {
        self.probs.len()
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn users(&self) -> &[Vec<f64>] {
        &self.users
    }

    pub fn costs(&self) -> Option<&[f64]> {
        self.costs.as_deref()
    }

    /// `1 − Π_{e∈S}(1 − P_g(e))` for every genre.
    pub fn genre_coverage(&self, s: &Subset) -> Vec<f64> {
        let mut miss = vec![1.0; self.genres.len()];
        for e in s.iter() {
            for (m, p) in miss.iter_mut().zip(&self.probs[e.index()]) {
                *m *= 1.0 - p;
            }
        }
        miss.into_iter().map(|m| 1.0 - m).collect()
    }
}

fn normalize_row(row: &mut [f64], user: usize) {
    let sum: f64 = row.iter().sum();
    if sum > 1.0 {
        // decimal rows that add up to exactly 1 often land a few ulps above
        if sum > 1.0 + 1e-9 {
            log::warn!("user {user}: weights sum to {sum}, rescaling to 1");
        }
        for w in row.iter_mut() {
            *w /= sum;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Expected reward of `s`, averaged over users.
pub fn coverage_mean(model: &CoverageModel, s: &Subset) -> f64 {
    if s.is_empty() {
        return 0.0;
    }
    dot(&model.mean_weights, &model.genre_coverage(s))
}

/// Average over users of independent `Bernoulli(f_user(S))` draws.
pub fn coverage_sample(model: &CoverageModel, s: &Subset, rng: &mut StreamRng) -> Result<f64> {
    let cover = model.genre_coverage(s);
    let mut accepted = 0usize;
    for (u, w) in model.users.iter().enumerate() {
        let p = dot(w, &cover);
        if !(-1e-12..=1.0 + 1e-12).contains(&p) {
            return Err(Error::ModelInvariant(format!(
                "user {u} values {s} at {p}, outside [0, 1]"
            )));
        }
        if rng.random::<f64>() < p {
            accepted += 1;
        }
    }
    Ok(accepted as f64 / model.users.len() as f64)
}

impl SetFunction for CoverageModel {
    fn ground_size(&self) -> usize {
        self.element_count()
    }
    fn value(&self, s: &Subset) -> f64 {
        coverage_mean(self, s)
    }
}

/// Reads element features and, optionally, per-user genre weights.
///
/// The features file has header `element_id,<genre>,..` with an optional
/// trailing `cost` column; element ids must be `0..n` in order. The weights
/// file has header `user_id,<genre>,..` with the same genres in the same
/// order and one row per user.
pub fn load_coverage_csv(features: &Path, weights: Option<&Path>) -> Result<CoverageModel> {
    let fpath = features.display().to_string();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(features)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let has_cost = header.last().is_some_and(|h| h == COST_COLUMN);
    let genre_end = if has_cost { header.len() - 1 } else { header.len() };
    if genre_end < 2 {
        return Err(Error::Parse {
            path: fpath,
            line: 1,
            message: "expected `element_id` followed by at least one genre column".into(),
        });
    }
    let genres = header[1..genre_end].to_vec();
    let mut probs = Vec::new();
    let mut costs = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 2;
        let cells = parse_row(&record, &fpath, row, header.len())?;
        if cells[0] != i as f64 {
            return Err(Error::Range {
                path: fpath,
                row,
                column: 1,
                message: format!("element id {} out of sequence, expected {i}", cells[0]),
            });
        }
        for (j, p) in cells[1..genre_end].iter().enumerate() {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::Range {
                    path: fpath,
                    row,
                    column: j + 2,
                    message: format!("probability {p} outside [0, 1]"),
                });
            }
        }
        probs.push(cells[1..genre_end].to_vec());
        if has_cost {
            costs.push(cells[genre_end]);
        }
    }

    let users = match weights {
        Some(path) => load_weights(path, &genres)?,
        None => Vec::new(),
    };
    let model = CoverageModel::new(genres, probs, users)?;
    if has_cost {
        model.with_costs(costs)
    } else {
        Ok(model)
    }
}

fn load_weights(path: &Path, genres: &[String]) -> Result<Vec<Vec<f64>>> {
    let wpath = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.len() != genres.len() + 1 || header[1..] != *genres {
        return Err(Error::Parse {
            path: wpath,
            line: 1,
            message: format!("expected header `user_id,{}`", genres.join(",")),
        });
    }
    let mut users = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let cells = parse_row(&record?, &wpath, row, header.len())?;
        for (j, w) in cells[1..].iter().enumerate() {
            if *w < 0.0 {
                return Err(Error::Range {
                    path: wpath,
                    row,
                    column: j + 2,
                    message: format!("negative weight {w}"),
                });
            }
        }
        users.push(cells[1..].to_vec());
    }
    if users.is_empty() {
        return Err(Error::Parse {
            path: wpath,
            line: 2,
            message: "no user rows".into(),
        });
    }
    Ok(users)
}

fn parse_row(record: &csv::StringRecord, path: &str, row: usize, width: usize) -> Result<Vec<f64>> {
    if record.len() != width {
        return Err(Error::Parse {
            path: path.to_string(),
            line: row,
            message: format!("expected {width} fields, found {}", record.len()),
        });
    }
    record
        .iter()
        .enumerate()
        .map(|(j, cell)| {
            cell.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Range {
                    path: path.to_string(),
                    row,
                    column: j + 1,
                    message: format!("`{cell}` is not a number"),
                })
        })
        .collect()
}

/// How rewards are drawn around the coverage mean.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverageNoise {
    /// Per-user Bernoulli acceptance, averaged over users.
    #[default]
    Bernoulli,
    /// Reward equals the mean.
    None,
}

pub struct CoverageEnv {
    pub model: CoverageModel,
    pub noise: CoverageNoise,
}

impl CoverageEnv {
    pub fn new(model: CoverageModel, noise: CoverageNoise) -> Self {
        CoverageEnv { model, noise }
    }
}

impl Environment for CoverageEnv {
    fn ground_size(&self) -> usize {
        self.model.element_count()
    }
    fn sample(&self, action: &Subset, rng: &mut StreamRng) -> f64 {
        match self.noise {
            // Validated weights keep every user's value inside [0, 1].
            CoverageNoise::Bernoulli => {
                coverage_sample(&self.model, action, rng).expect("coverage model invariants checked at construction")
            }
            CoverageNoise::None => coverage_mean(&self.model, action).clamp(0.0, 1.0),
        }
    }
    fn mean(&self, action: &Subset, _rng: &mut StreamRng) -> Estimate {
        Estimate::exact(coverage_mean(&self.model, action))
    }
    fn costs(&self) -> Option<&[f64]> {
        self.model.costs()
    }
}
