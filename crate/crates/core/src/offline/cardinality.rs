//! Greedy and threshold-greedy under a cardinality constraint.

use crate::error::Result;
use crate::oracle::ValueOracle;
use crate::subset::{ElementId, Subset};

/// `k` rounds of adding the element with the largest surrogate gain.
///
/// Ties go to the lowest element id. At most `k·n` distinct queries.
pub fn greedy_cardinality(oracle: &mut dyn ValueOracle, n: usize, k: usize) -> Result<Subset> {
    let mut set = Subset::empty();
    for _ in 0..k.min(n) {
        let mut best: Option<(ElementId, f64)> = None;
        for e in (0..n).map(ElementId::from) {
            if set.contains(e) {
                continue;
            }
            let v = oracle.query(&set.with(e))?;
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((e, v));
            }
        }
        let Some((e, _)) = best else { break };
        set.insert(e);
    }
    Ok(set)
}

/// Decreasing-threshold greedy.
///
/// Thresholds start at `d = max_e f̂({e})` and shrink by `(1 - eps_prime)`
/// while `τ >= (eps_prime / n)·d`. Within a pass, elements are scanned in
/// index order and any `e` with `f̂(e | G) >= τ` joins `G` while `|G| < k`.
/// If `query_cap` is given, the run stops (keeping the current `G`) before a
/// query that would evaluate a new set beyond the cap.
pub fn threshold_greedy(
    oracle: &mut dyn ValueOracle,
    n: usize,
    k: usize,
    eps_prime: f64,
    query_cap: Option<usize>,
) -> Result<Subset> {
    let mut set = Subset::empty();
    if n == 0 || k == 0 {
        return Ok(set);
    }
    let over_cap = |oracle: &dyn ValueOracle, s: &Subset| {
        query_cap.is_some_and(|cap| oracle.query_count() >= cap && !oracle.is_memoized(s))
    };

    let mut d = f64::NEG_INFINITY;
    for e in (0..n).map(ElementId::from) {
        let s = Subset::singleton(e);
        if over_cap(oracle, &s) {
            return Ok(set);
        }
        d = d.max(oracle.query(&s)?);
    }
    if d <= 0.0 {
        // No singleton has positive surrogate value; thresholds are degenerate.
        let mut best = (ElementId(0), f64::NEG_INFINITY);
        for e in (0..n).map(ElementId::from) {
            let v = oracle.query(&Subset::singleton(e))?;
            if v > best.1 {
                best = (e, v);
            }
        }
        set.insert(best.0);
        return Ok(set);
    }

    let floor = eps_prime / n as f64 * d;
    let mut value = 0.0;
    let mut tau = d;
    while tau >= floor && set.len() < k {
        for e in (0..n).map(ElementId::from) {
            if set.len() >= k {
                break;
            }
            if set.contains(e) {
                continue;
            }
            let cand = set.with(e);
            if over_cap(oracle, &cand) {
                return Ok(set);
            }
            let v = oracle.query(&cand)?;
            if v - value >= tau {
                set = cand;
                value = v;
            }
        }
        tau *= 1.0 - eps_prime;
    }
    Ok(set)
}
