//! Density greedy and its knapsack safeguards.
//!
//! Every routine here only ever queries sets that fit in the budget: at a
//! level with current set `G`, the candidates are `G ∪ {e}` for the `e ∉ G`
//! with `c(G) + c(e) <= B`.

use crate::error::Result;
use crate::oracle::ValueOracle;
use crate::subset::{ElementId, Subset};

/// One level `G_i` of a density-greedy run.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyLevel {
    pub set: Subset,
    /// `f̂(G_i)`; `0` for the empty start.
    pub value: f64,
    pub cost: f64,
    /// `g_i`, the element that produced this level (`None` at the start).
    pub added: Option<ElementId>,
    /// `a_i = argmax_{feasible e ∉ G_i} f̂(G_i ∪ e)` and that value, read
    /// from the queries made while choosing `g_{i+1}`. `None` when nothing
    /// fits (always the case for the last level).
    pub augmentation: Option<(ElementId, f64)>,
}

/// The nested sequence `G_0 ⊂ G_1 ⊂ … ⊂ G_L` of a density-greedy run.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyTrace {
    pub levels: Vec<GreedyLevel>,
}

impl GreedyTrace {
    /// `G_L`.
    pub fn last(&self) -> &GreedyLevel {
        self.levels.last().expect("trace always holds the start level")
    }
}

/// Density greedy from the empty set.
pub fn greedy_density_sequence(oracle: &mut dyn ValueOracle, costs: &[f64], budget: f64) -> Result<GreedyTrace> {
    greedy_density_from(oracle, costs, budget, Subset::empty())
}

/// Density greedy starting from `start` (assumed feasible).
///
/// Repeatedly adds the fitting element with the largest
/// `(f̂(G ∪ e) - f̂(G)) / c(e)`, lowest id on ties, until nothing fits.
pub fn greedy_density_from(
    oracle: &mut dyn ValueOracle,
    costs: &[f64],
    budget: f64,
    start: Subset,
) -> Result<GreedyTrace> {
    let n = costs.len();
    let start_value = oracle.query(&start)?;
    let start_cost = start.iter().map(|e| costs[e.index()]).sum();
    let mut levels = vec![GreedyLevel {
        set: start,
        value: start_value,
        cost: start_cost,
        added: None,
        augmentation: None,
    }];

    loop {
        let cur = levels.last().expect("non-empty");
        let mut best_density: Option<(ElementId, f64, f64)> = None;
        let mut best_value: Option<(ElementId, f64)> = None;
        for e in (0..n).map(ElementId::from) {
            if cur.set.contains(e) || cur.cost + costs[e.index()] > budget {
                continue;
            }
            let v = oracle.query(&cur.set.with(e))?;
            let density = (v - cur.value) / costs[e.index()];
            if best_density.is_none_or(|(_, bd, _)| density > bd) {
                best_density = Some((e, density, v));
            }
            if best_value.is_none_or(|(_, bv)| v > bv) {
                best_value = Some((e, v));
            }
        }
        let Some((g, _, v)) = best_density else { break };
        let cur = levels.last_mut().expect("non-empty");
        cur.augmentation = best_value;
        let next = GreedyLevel {
            set: cur.set.with(g),
            value: v,
            cost: cur.cost + costs[g.index()],
            added: Some(g),
            augmentation: None,
        };
        levels.push(next);
    }
    Ok(GreedyTrace { levels })
}

/// The better of `G_L` and the best singleton (`G_L` on ties).
pub fn greedy_plus(oracle: &mut dyn ValueOracle, costs: &[f64], budget: f64) -> Result<Subset> {
    let trace = greedy_density_sequence(oracle, costs, budget)?;
    let last = trace.last();
    // Every singleton fits (c(v) <= B), so level-0 queries are all singletons.
    let mut best = (last.set.clone(), last.value);
    if let Some((a, v)) = trace.levels[0].augmentation {
        if v > best.1 {
            best = (Subset::singleton(a), v);
        }
    }
    Ok(best.0)
}

/// Best set among the greedy levels and their single-element augmentations.
///
/// Candidates are compared in the order `G'_0, …, G'_L, G_0, …, G_L`; the
/// first one attaining the maximum surrogate value wins. Augmentations reuse
/// the level queries, so no extra oracle calls are made.
pub fn greedy_plus_max(oracle: &mut dyn ValueOracle, costs: &[f64], budget: f64) -> Result<Subset> {
    let trace = greedy_density_sequence(oracle, costs, budget)?;
    let mut candidates: Vec<(Subset, f64)> = Vec::with_capacity(2 * trace.levels.len());
    for level in &trace.levels {
        match level.augmentation {
            Some((a, v)) => candidates.push((level.set.with(a), v)),
            None => candidates.push((level.set.clone(), level.value)),
        }
    }
    for level in &trace.levels {
        candidates.push((level.set.clone(), level.value));
    }
    Ok(first_argmax(candidates))
}

/// Enumerates every feasible set of one to three elements, completes each
/// feasible triple by density greedy, and returns the best evaluated set.
pub fn partial_enumeration(oracle: &mut dyn ValueOracle, costs: &[f64], budget: f64) -> Result<Subset> {
    let n = costs.len();
    let mut best: Option<(Subset, f64)> = None;
    let mut consider = |s: &Subset, v: f64| {
        if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
            best = Some((s.clone(), v));
        }
    };
    let fits = |ids: &[usize]| ids.iter().map(|&i| costs[i]).sum::<f64>() <= budget;

    for a in 0..n {
        let s = Subset::from_ids([a]);
        if fits(&[a]) {
            consider(&s, oracle.query(&s)?);
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            if fits(&[a, b]) {
                let s = Subset::from_ids([a, b]);
                consider(&s, oracle.query(&s)?);
            }
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            for c in (b + 1)..n {
                if !fits(&[a, b, c]) {
                    continue;
                }
                let seed = Subset::from_ids([a, b, c]);
                let trace = greedy_density_from(oracle, costs, budget, seed)?;
                for level in &trace.levels {
                    consider(&level.set, level.value);
                    if let Some((e, v)) = level.augmentation {
                        consider(&level.set.with(e), v);
                    }
                }
            }
        }
    }
    Ok(best.map(|(s, _)| s).unwrap_or_default())
}

fn first_argmax(candidates: Vec<(Subset, f64)>) -> Subset {
    let mut best: Option<(Subset, f64)> = None;
    for (s, v) in candidates {
        if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
            best = Some((s, v));
        }
    }
    best.map(|(s, _)| s).unwrap_or_default()
}
