//! Value oracles: the only channel through which offline algorithms see `f̂`.
//!
//! Every oracle is memoized on the canonical subset. The first query of a set
//! fixes its value for the rest of the run and is the only one counted, so
//! the surrogate an algorithm sees is a single fixed function and
//! `query_count` is the number of distinct sets evaluated. The empty set is
//! answered with `0` and never counted.

use std::collections::HashMap;

use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::functions::SetFunction;
use crate::subset::Subset;

/// Answers subset-value queries for an offline algorithm.
pub trait ValueOracle {
    fn query(&mut self, s: &Subset) -> Result<f64>;

    /// Number of distinct non-empty sets evaluated so far.
    fn query_count(&self) -> usize;

    /// Whether `s` would be answered from the memo (no new evaluation).
    fn is_memoized(&self, s: &Subset) -> bool;
}

/// Where first-time values come from.
pub trait ValueSource {
    fn evaluate(&mut self, s: &Subset) -> Result<f64>;
}

impl<F> ValueSource for F
where
    F: FnMut(&Subset) -> Result<f64>,
{
    fn evaluate(&mut self, s: &Subset) -> Result<f64> {
        self(s)
    }
}

/// Memoizing oracle over an arbitrary [`ValueSource`].
pub struct MemoOracle<S> {
    source: S,
    memo: HashMap<Subset, f64>,
    order: Vec<Subset>,
    constraint: Option<Constraint>,
}

impl<S: ValueSource> MemoOracle<S> {
    pub fn new(source: S) -> Self {
        MemoOracle {
            source,
            memo: HashMap::new(),
            order: Vec::new(),
            constraint: None,
        }
    }

    /// Reject queries of sets that violate `constraint`.
    pub fn with_constraint(mut self, constraint: Constraint) -> Self {
        self.constraint = Some(constraint);
        self
    }

    /// Distinct queried sets, in first-query order.
    pub fn queried(&self) -> &[Subset] {
        &self.order
    }

    pub fn value_of(&self, s: &Subset) -> Option<f64> {
        self.memo.get(s).copied()
    }

    pub fn into_source(self) -> S {
        self.source
    }
}

impl<S: ValueSource> ValueOracle for MemoOracle<S> {
    fn query(&mut self, s: &Subset) -> Result<f64> {
        if s.is_empty() {
            return Ok(0.0);
        }
        if let Some(&v) = self.memo.get(s) {
            return Ok(v);
        }
        if let Some(c) = &self.constraint {
            if !c.is_feasible(s)? {
                return Err(Error::InfeasibleQuery(s.to_string()));
            }
        }
        let v = self.source.evaluate(s)?;
        self.memo.insert(s.clone(), v);
        self.order.push(s.clone());
        Ok(v)
    }

    fn query_count(&self) -> usize {
        self.order.len()
    }

    fn is_memoized(&self, s: &Subset) -> bool {
        s.is_empty() || self.memo.contains_key(s)
    }
}

/// Exact oracle over a known set function.
pub fn exact_oracle<F: SetFunction + ?Sized>(f: &F) -> MemoOracle<impl FnMut(&Subset) -> Result<f64> + '_> {
    MemoOracle::new(move |s: &Subset| Ok(f.value(s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::Modular;

    #[test]
    fn repeated_queries_are_memoized_and_counted_once() {
        let mut calls = 0;
        let mut oracle = MemoOracle::new(|s: &Subset| {
            calls += 1;
            Ok(s.len() as f64 * 0.1)
        });
        let a = Subset::from_ids([2, 0]);
        let v1 = oracle.query(&a).unwrap();
        let v2 = oracle.query(&Subset::from_ids([0, 2])).unwrap();
        assert_eq!(v1.to_bits(), v2.to_bits());
        assert_eq!(oracle.query_count(), 1);
        assert!(oracle.is_memoized(&a));
        assert_eq!(oracle.query(&Subset::empty()).unwrap(), 0.0);
        assert_eq!(oracle.query_count(), 1);
        drop(oracle);
        assert_eq!(calls, 1);
    }

    #[test]
    fn constraint_guard_rejects_infeasible_queries() {
        let f = Modular::new(vec![0.2, 0.3, 0.4]);
        let mut oracle = exact_oracle(&f).with_constraint(Constraint::cardinality(3, 1).unwrap());
        assert!(oracle.query(&Subset::from_ids([1])).is_ok());
        assert!(matches!(
            oracle.query(&Subset::from_ids([0, 1])),
            Err(Error::InfeasibleQuery(_))
        ));
        assert_eq!(oracle.query_count(), 1);
    }

    #[test]
    fn exact_oracle_matches_function() {
        let f = Modular::new(vec![0.5, 0.3, 0.2]);
        let mut oracle = exact_oracle(&f);
        let v = oracle.query(&Subset::from_ids([0, 2])).unwrap();
        assert!((v - 0.7).abs() < 1e-15);
        assert_eq!(oracle.queried(), &[Subset::from_ids([0, 2])]);
    }
}
