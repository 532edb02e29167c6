//! Per-round record of an online run.

use std::collections::HashMap;
use std::io::Write;

use crate::error::Result;
use crate::subset::Subset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Explore,
    Exploit,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Explore => "explore",
            Phase::Exploit => "exploit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Round {
    /// Index into [`RunTrace::actions`].
    pub action: u32,
    pub reward: f64,
    pub phase: Phase,
}

/// Rounds of one run; actions are interned so long horizons stay compact.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub rounds: Vec<Round>,
    actions: Vec<Subset>,
    index: HashMap<Subset, u32>,
    /// Number of leading exploration rounds (C-ETC only).
    pub exploration_rounds: u64,
    /// The set played during exploitation (C-ETC only).
    pub committed: Option<Subset>,
    /// Distinct queried actions with their empirical means, in query order.
    pub explored: Vec<(Subset, f64)>,
}

impl RunTrace {
    pub fn new() -> Self {
        RunTrace::default()
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn push(&mut self, action: &Subset, reward: f64, phase: Phase) {
        let idx = match self.index.get(action) {
            Some(&i) => i,
            None => {
                let i = self.actions.len() as u32;
                self.actions.push(action.clone());
                self.index.insert(action.clone(), i);
                i
            }
        };
        self.rounds.push(Round {
            action: idx,
            reward,
            phase,
        });
    }

    pub fn action(&self, round: usize) -> &Subset {
        &self.actions[self.rounds[round].action as usize]
    }

    /// Distinct actions played at least once.
    pub fn actions(&self) -> &[Subset] {
        &self.actions
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.rounds.iter().map(|r| r.reward).collect()
    }

    pub fn total_reward(&self) -> f64 {
        self.rounds.iter().map(|r| r.reward).sum()
    }

    /// Appends `other`'s rounds after this trace's.
    pub fn extend_from(&mut self, other: &RunTrace) {
        for (i, r) in other.rounds.iter().enumerate() {
            self.push(other.action(i), r.reward, r.phase);
        }
    }

    /// Keeps only the first `len` rounds.
    pub fn truncate(&mut self, len: usize) {
        self.rounds.truncate(len);
        self.exploration_rounds = self.exploration_rounds.min(len as u64);
    }

    /// Writes `t,action,reward,phase` with `t` starting at 1 and actions as
    /// semicolon-joined element ids.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "action", "reward", "phase"])?;
        let encoded: Vec<String> = self.actions.iter().map(Subset::to_csv_field).collect();
        for (t, r) in self.rounds.iter().enumerate() {
            w.write_record([
                (t + 1).to_string().as_str(),
                encoded[r.action as usize].as_str(),
                r.reward.to_string().as_str(),
                r.phase.as_str(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
