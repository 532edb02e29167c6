//! Exact set functions with closed-form values.
//!
//! These back exact oracles, brute-force references, noiseless and Bernoulli
//! environments, and the random instance corpus. All of them are normalized
//! so that `f(∅) = 0` and `f(S) ∈ [0, 1]`.

use rand::Rng;

use crate::rng::StreamRng;
use crate::subset::Subset;

/// A set function over the ground set `{0, .., n-1}`.
pub trait SetFunction: Send + Sync {
    fn ground_size(&self) -> usize;
    fn value(&self, s: &Subset) -> f64;
}

impl<F: SetFunction + ?Sized> SetFunction for &F {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }
    fn value(&self, s: &Subset) -> f64 {
        (**self).value(s)
    }
}

impl<F: SetFunction + ?Sized> SetFunction for Box<F> {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }
    fn value(&self, s: &Subset) -> f64 {
        (**self).value(s)
    }
}

/// `f(S) = Σ_{e∈S} w_e`.
#[derive(Debug, Clone, PartialEq)]
pub struct Modular {
    weights: Vec<f64>,
}

impl Modular {
    pub fn new(weights: Vec<f64>) -> Self {
        Modular { weights }
    }

    /// Nonnegative weights summing to at most one.
    pub fn random(n: usize, rng: &mut StreamRng) -> Self {
        let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.01).collect();
        let scale = rng.random_range(0.5..1.0) / raw.iter().sum::<f64>();
        Modular::new(raw.into_iter().map(|w| w * scale).collect())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl SetFunction for Modular {
    fn ground_size(&self) -> usize {
        self.weights.len()
    }
    fn value(&self, s: &Subset) -> f64 {
        s.iter().map(|e| self.weights[e.index()]).sum()
    }
}

/// Weighted set cover: element `e` covers `items[e]`; `f(S)` is the covered
/// weight over the total weight of the universe.
#[derive(Debug, Clone, PartialEq)]
pub struct SetCoverage {
    items: Vec<Vec<usize>>,
    item_weights: Vec<f64>,
    total: f64,
}

impl SetCoverage {
    pub fn new(items: Vec<Vec<usize>>, item_weights: Vec<f64>) -> Self {
        let total = item_weights.iter().sum();
        SetCoverage {
            items,
            item_weights,
            total,
        }
    }

    /// Unit-weight universe of `universe` items.
    pub fn uniform(items: Vec<Vec<usize>>, universe: usize) -> Self {
        SetCoverage::new(items, vec![1.0; universe])
    }

    pub fn random(n: usize, universe: usize, rng: &mut StreamRng) -> Self {
        let items = (0..n)
            .map(|_| {
                let size = rng.random_range(1..=universe.div_ceil(2));
                let mut picked: Vec<usize> = (0..size).map(|_| rng.random_range(0..universe)).collect();
                picked.sort_unstable();
                picked.dedup();
                picked
            })
            .collect();
        let weights = (0..universe).map(|_| rng.random_range(0.2..1.0)).collect();
        SetCoverage::new(items, weights)
    }
}

impl SetFunction for SetCoverage {
    fn ground_size(&self) -> usize {
        self.items.len()
    }
    fn value(&self, s: &Subset) -> f64 {
        let mut covered = vec![false; self.item_weights.len()];
        for e in s.iter() {
            for &i in &self.items[e.index()] {
                covered[i] = true;
            }
        }
        let w: f64 = covered
            .iter()
            .zip(&self.item_weights)
            .filter(|(c, _)| **c)
            .map(|(_, w)| w)
            .sum();
        w / self.total
    }
}

/// Normalized weighted cut of an undirected graph: non-monotone submodular.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    total: f64,
}

impl Cut {
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Self {
        let total = edges.iter().map(|e| e.2).sum::<f64>().max(f64::MIN_POSITIVE);
        Cut { n, edges, total }
    }

    pub fn random(n: usize, rng: &mut StreamRng) -> Self {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.random::<f64>() < 0.5 {
                    edges.push((u, v, rng.random_range(0.1..1.0)));
                }
            }
        }
        if edges.is_empty() && n >= 2 {
            edges.push((0, 1, 1.0));
        }
        Cut::new(n, edges)
    }
}

impl SetFunction for Cut {
    fn ground_size(&self) -> usize {
        self.n
    }
    fn value(&self, s: &Subset) -> f64 {
        let cut: f64 = self
            .edges
            .iter()
            .filter(|&&(u, v, _)| s.contains(u.into()) != s.contains(v.into()))
            .map(|e| e.2)
            .sum();
        cut / self.total
    }
}

/// Explicit value table indexed by bitmask, for hand-built small instances.
#[derive(Debug, Clone, PartialEq)]
pub struct TableFunction {
    n: usize,
    values: Vec<f64>,
}

impl TableFunction {
    /// `values[mask]` is `f` of the set whose bit `i` is element `i`.
    pub fn new(n: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), 1 << n, "table needs 2^n entries");
        TableFunction { n, values }
    }
}

impl SetFunction for TableFunction {
    fn ground_size(&self) -> usize {
        self.n
    }
    fn value(&self, s: &Subset) -> f64 {
        let mask = s.iter().fold(0usize, |m, e| m | (1 << e.index()));
        self.values[mask]
    }
}
