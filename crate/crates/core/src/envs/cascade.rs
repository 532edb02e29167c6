//! Independent-cascade influence spread on a directed graph.
//!
//! The reward of a seed set is the fraction of nodes active when a cascade
//! started from it dies out; normalizing by the node count keeps rewards in
//! `[0, 1]`.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::Rng;

use super::{Environment, Estimate};
use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::subset::Subset;

#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph {
    n: usize,
    /// Out-edges `(target, activation probability)` per node.
    out: Vec<Vec<(usize, f64)>>,
    in_degree: Vec<usize>,
    out_degree: Vec<usize>,
}

impl DirectedGraph {
    /// Builds a graph whose edge `(u, v)` fires with probability `1/d_in(v)`.
    /// Duplicate edges collapse; self-loops are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut unique = BTreeSet::new();
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InstanceMismatch { id: u.max(v) as u32, n });
            }
            if u == v {
                return Err(Error::ModelInvariant(format!("self-loop at node {u}")));
            }
            unique.insert((u, v));
        }
        let mut in_degree = vec![0; n];
        let mut out_degree = vec![0; n];
        for &(u, v) in &unique {
            out_degree[u] += 1;
            in_degree[v] += 1;
        }
        let mut out = vec![Vec::new(); n];
        for &(u, v) in &unique {
            out[u].push((v, 1.0 / in_degree[v] as f64));
        }
        Ok(DirectedGraph {
            n,
            out,
            in_degree,
            out_degree,
        })
    }

    /// Overrides every edge probability.
    pub fn with_uniform_probability(mut self, p: f64) -> Self {
        for edges in &mut self.out {
            for e in edges.iter_mut() {
                e.1 = p;
            }
        }
        self
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.in_degree[v]
    }

    pub fn out_degree(&self, u: usize) -> usize {
        self.out_degree[u]
    }

    pub fn edge_probability(&self, u: usize, v: usize) -> Option<f64> {
        self.out[u].iter().find(|e| e.0 == v).map(|e| e.1)
    }
}

/// Reads whitespace-separated `u v` pairs, one edge per line. Blank lines
/// and lines starting with `#` are skipped. With `symmetrize`, each line
/// also adds the reverse edge.
pub fn load_edge_list(path: &Path, symmetrize: bool) -> Result<DirectedGraph> {
    let text = fs::read_to_string(path)?;
    let display = path.display().to_string();
    let mut edges = Vec::new();
    let mut max_id = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: display.clone(),
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(parse_err(format!("expected `u v`, found `{line}`")));
        }
        let ids: Vec<usize> = fields
            .iter()
            .map(|f| {
                f.parse::<usize>()
                    .map_err(|_| parse_err(format!("`{f}` is not a node id")))
            })
            .collect::<Result<_>>()?;
        let (u, v) = (ids[0], ids[1]);
        if u == v {
            return Err(parse_err(format!("self-loop at node {u}")));
        }
        max_id = Some(max_id.unwrap_or(0).max(u).max(v));
        edges.push((u, v));
        if symmetrize {
            edges.push((v, u));
        }
    }
    DirectedGraph::from_edges(max_id.map_or(0, |m| m + 1), &edges)
}

/// One cascade from `seeds`; returns the activated fraction of nodes.
pub fn ic_sample(graph: &DirectedGraph, seeds: &[usize], rng: &mut StreamRng) -> f64 {
    if graph.n == 0 {
        return 0.0;
    }
    let mut active = vec![false; graph.n];
    let mut frontier = Vec::with_capacity(seeds.len());
    for &s in seeds {
        if !active[s] {
            active[s] = true;
            frontier.push(s);
        }
    }
    let mut count = frontier.len();
    let mut next = Vec::new();
    while !frontier.is_empty() {
        for &u in &frontier {
            for &(v, p) in &graph.out[u] {
                if !active[v] && rng.random::<f64>() < p {
                    active[v] = true;
                    next.push(v);
                }
            }
        }
        count += next.len();
        std::mem::swap(&mut frontier, &mut next);
        next.clear();
    }
    count as f64 / graph.n as f64
}

/// Monte-Carlo mean of [`ic_sample`] with its standard error.
pub fn ic_mean(graph: &DirectedGraph, seeds: &[usize], n_samples: u64, rng: &mut StreamRng) -> Estimate {
    let n_samples = n_samples.max(1);
    if graph.edge_count() == 0 {
        let mut e = Estimate::exact(ic_sample(graph, seeds, rng));
        e.samples = n_samples;
        return e;
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n_samples {
        let x = ic_sample(graph, seeds, rng);
        sum += x;
        sum_sq += x * x;
    }
    let k = n_samples as f64;
    let mean = sum / k;
    let var = if n_samples > 1 {
        ((sum_sq - k * mean * mean) / (k - 1.0)).max(0.0)
    } else {
        0.0
    };
    Estimate {
        value: mean,
        std_error: (var / k).sqrt(),
        samples: n_samples,
    }
}

/// Nodes whose out-degree is strictly above the given percentile of all
/// out-degrees (linear interpolation between order statistics).
pub fn seed_pool(graph: &DirectedGraph, percentile: f64) -> Vec<usize> {
    if graph.n == 0 {
        return Vec::new();
    }
    let mut degrees = graph.out_degree.clone();
    degrees.sort_unstable();
    let pos = percentile / 100.0 * (graph.n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    let threshold = degrees[lo] as f64 + frac * (degrees[hi] as f64 - degrees[lo] as f64);
    (0..graph.n)
        .filter(|&u| graph.out_degree[u] as f64 > threshold)
        .collect()
}

/// `c(u) = 0.01·d_out(u) + 1` for each pool member.
pub fn bim_costs(graph: &DirectedGraph, pool: &[usize]) -> Vec<f64> {
    pool.iter().map(|&u| 0.01 * graph.out_degree[u] as f64 + 1.0).collect()
}

/// Budgeted influence maximization: arm `i` seeds node `pool[i]`.
pub struct CascadeEnv {
    pub graph: DirectedGraph,
    pub pool: Vec<usize>,
    pub costs: Vec<f64>,
    /// Cascades per call to [`Environment::mean`].
    pub mean_samples: u64,
}

impl CascadeEnv {
    pub const DEFAULT_MEAN_SAMPLES: u64 = 10_000;

    /// Pool from the 95th out-degree percentile with degree-based costs.
    pub fn budgeted(graph: DirectedGraph) -> Self {
        Self::with_percentile(graph, 95.0)
    }

    /// Pool of nodes whose out-degree is above `percentile`, with
    /// degree-based costs.
    pub fn with_percentile(graph: DirectedGraph, percentile: f64) -> Self {
        let pool = seed_pool(&graph, percentile);
        let costs = bim_costs(&graph, &pool);
        CascadeEnv {
            graph,
            pool,
            costs,
            mean_samples: Self::DEFAULT_MEAN_SAMPLES,
        }
    }

    fn seeds(&self, action: &Subset) -> Vec<usize> {
        action.iter().map(|e| self.pool[e.index()]).collect()
    }
}

impl Environment for CascadeEnv {
    fn ground_size(&self) -> usize {
        self.pool.len()
    }
    fn sample(&self, action: &Subset, rng: &mut StreamRng) -> f64 {
        ic_sample(&self.graph, &self.seeds(action), rng)
    }
    fn mean(&self, action: &Subset, rng: &mut StreamRng) -> Estimate {
        ic_mean(&self.graph, &self.seeds(action), self.mean_samples, rng)
    }
    fn costs(&self) -> Option<&[f64]> {
        Some(&self.costs)
    }
}
