//! Feasibility constraints over a ground set of `n` base arms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subset::Subset;

/// Which subsets of the ground set are allowed actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Constraint {
    /// `|S| <= k`.
    Cardinality { n: usize, k: usize },
    /// `sum_{v in S} c(v) <= budget`.
    Knapsack { costs: Vec<f64>, budget: f64 },
    /// Every subset is feasible.
    Unconstrained { n: usize },
}

/// Derived quantities of a knapsack constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnapsackParams {
    pub c_min: f64,
    /// `budget / c_min`, at least 1.
    pub beta: f64,
    /// `min(n, floor(beta))`; no feasible set has more members.
    pub k_tilde: usize,
}

impl Constraint {
    pub fn cardinality(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidConstraint(format!(
                "cardinality k={k} must lie in [1, n={n}]"
            )));
        }
        Ok(Constraint::Cardinality { n, k })
    }

    /// Validates `0 < c(v) <= B` for every arm and `B <= sum c`.
    pub fn knapsack(costs: Vec<f64>, budget: f64) -> Result<Self> {
        if costs.is_empty() {
            return Err(Error::InvalidConstraint("knapsack needs at least one arm".into()));
        }
        if !(budget.is_finite() && budget > 0.0) {
            return Err(Error::InvalidConstraint(format!("budget {budget} must be positive")));
        }
        for (i, &c) in costs.iter().enumerate() {
            if !(c.is_finite() && c > 0.0 && c <= budget) {
                return Err(Error::InvalidConstraint(format!(
                    "cost of arm {i} is {c}; need 0 < c <= B = {budget}"
                )));
            }
        }
        let total: f64 = costs.iter().sum();
        if budget > total {
            return Err(Error::InvalidConstraint(format!(
                "budget {budget} exceeds total cost {total}"
            )));
        }
        Ok(Constraint::Knapsack { costs, budget })
    }

    pub fn unconstrained(n: usize) -> Self {
        Constraint::Unconstrained { n }
    }

    pub fn ground_size(&self) -> usize {
        match self {
            Constraint::Cardinality { n, .. } | Constraint::Unconstrained { n } => *n,
            Constraint::Knapsack { costs, .. } => costs.len(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Constraint::Cardinality { .. } => "cardinality",
            Constraint::Knapsack { .. } => "knapsack",
            Constraint::Unconstrained { .. } => "unconstrained",
        }
    }

    /// Per-arm costs; unit costs for non-knapsack kinds.
    pub fn costs(&self) -> Vec<f64> {
        match self {
            Constraint::Knapsack { costs, .. } => costs.clone(),
            other => vec![1.0; other.ground_size()],
        }
    }

    pub fn is_feasible(&self, s: &Subset) -> Result<bool> {
        s.check_within(self.ground_size())?;
        Ok(match self {
            Constraint::Cardinality { k, .. } => s.len() <= *k,
            Constraint::Knapsack { costs, budget } => subset_cost(costs, s)? <= *budget,
            Constraint::Unconstrained { .. } => true,
        })
    }

    pub fn knapsack_params(&self) -> Result<KnapsackParams> {
        match self {
            Constraint::Knapsack { costs, budget } => {
                let c_min = costs.iter().copied().fold(f64::INFINITY, f64::min);
                let beta = budget / c_min;
                let k_tilde = (beta.floor() as usize).min(costs.len());
                Ok(KnapsackParams { c_min, beta, k_tilde })
            }
            other => Err(Error::Contract(format!(
                "knapsack parameters requested for a {} constraint",
                other.kind_name()
            ))),
        }
    }
}

/// Sum of member costs; zero for the empty set.
pub fn subset_cost(costs: &[f64], s: &Subset) -> Result<f64> {
    s.check_within(costs.len())?;
    Ok(s.iter().map(|e| costs[e.index()]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasibility_examples() {
        let card = Constraint::cardinality(3, 2).unwrap();
        assert!(!card.is_feasible(&Subset::from_ids([0, 1, 2])).unwrap());
        assert!(card.is_feasible(&Subset::from_ids([0, 2])).unwrap());

        let knap = Constraint::knapsack(vec![1.0, 2.0, 3.0], 3.0).unwrap();
        assert!(knap.is_feasible(&Subset::from_ids([0, 1])).unwrap());
        assert!(!knap.is_feasible(&Subset::from_ids([0, 2])).unwrap());

        let free = Constraint::unconstrained(4);
        assert!(free.is_feasible(&Subset::full(4)).unwrap());
    }

    #[test]
    fn unknown_element_is_instance_mismatch() {
        let card = Constraint::cardinality(3, 2).unwrap();
        assert!(matches!(
            card.is_feasible(&Subset::from_ids([5])),
            Err(Error::InstanceMismatch { id: 5, n: 3 })
        ));
        assert!(matches!(
            subset_cost(&[1.0], &Subset::from_ids([1])),
            Err(Error::InstanceMismatch { .. })
        ));
    }

    #[test]
    fn subset_cost_examples() {
        let c = [1.0, 2.0, 3.0];
        assert_eq!(subset_cost(&c, &Subset::empty()).unwrap(), 0.0);
        assert_eq!(subset_cost(&c, &Subset::from_ids([0, 2])).unwrap(), 4.0);
        assert_eq!(subset_cost(&[0.5, 0.5], &Subset::from_ids([0, 1])).unwrap(), 1.0);
    }

    #[test]
    fn knapsack_params_examples() {
        let p = Constraint::knapsack(vec![1.0; 3], 2.0)
            .unwrap()
            .knapsack_params()
            .unwrap();
        assert_eq!((p.c_min, p.beta, p.k_tilde), (1.0, 2.0, 2));

        let p = Constraint::knapsack(vec![2.0, 4.0], 5.0)
            .unwrap()
            .knapsack_params()
            .unwrap();
        assert_eq!((p.beta, p.k_tilde), (2.5, 2));

        let p = Constraint::knapsack(vec![1.0; 10], 10.0)
            .unwrap()
            .knapsack_params()
            .unwrap();
        assert_eq!(p.k_tilde, 10);
    }

    #[test]
    fn knapsack_params_caps_k_tilde_at_n() {
        // beta = 100 is only reachable if the budget validation is bypassed.
        let c = Constraint::Knapsack {
            costs: vec![1.0; 10],
            budget: 100.0,
        };
        assert_eq!(c.knapsack_params().unwrap().k_tilde, 10);
    }

    #[test]
    fn knapsack_params_rejects_other_kinds() {
        assert!(matches!(
            Constraint::unconstrained(2).knapsack_params(),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn knapsack_validation() {
        assert!(Constraint::knapsack(vec![1.0, 4.0], 3.0).is_err());
        assert!(Constraint::knapsack(vec![1.0, 0.0], 1.0).is_err());
        assert!(Constraint::knapsack(vec![1.0, 1.0], 3.0).is_err());
        assert!(Constraint::cardinality(3, 0).is_err());
        assert!(Constraint::cardinality(3, 4).is_err());
    }
}
