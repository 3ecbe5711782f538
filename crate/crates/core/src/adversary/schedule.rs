use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{FedError, Result};

/// When adversaries are present in a round.
#[derive(Debug, Clone, PartialEq)]
pub enum AttackSchedule {
    /// Clean training.
    NoAttack,
    /// Exactly one adversary in every round `t` with `t % period == 0`.
    FixedFrequency { period: usize },
    /// A fixed set of compromised clients; any of them that the server
    /// happens to select acts adversarially.
    RandomSampling {
        epsilon: f64,
        compromised_ids: BTreeSet<usize>,
    },
}

/// `round(1 / (ε · m))`, at least 1. With m = 30 this maps ε = 3.3% to
/// period 1 and ε = 0.33% to period 10.
pub fn period_for_epsilon(epsilon: f64, clients_per_round: usize) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(FedError::Config(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(((1.0 / (epsilon * clients_per_round as f64)).round() as usize).max(1))
}

impl AttackSchedule {
    pub fn fixed_frequency(period: usize) -> Result<Self> {
        if period == 0 {
            return Err(FedError::Config("attack period must be at least 1".into()));
        }
        Ok(AttackSchedule::FixedFrequency { period })
    }

    /// Marks `floor(ε · K)` of the `K` clients as compromised.
    pub fn random_sampling<R: Rng + ?Sized>(epsilon: f64, total_clients: usize, rng: &mut R) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(FedError::Config(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        let count = (epsilon * total_clients as f64).floor() as usize;
        Ok(AttackSchedule::RandomSampling {
            epsilon,
            compromised_ids: sample(rng, total_clients, count).into_iter().collect(),
        })
    }

    /// Marks exactly `count` of the `K` clients as compromised. Use this when
    /// the attacker count is given directly (113 of 3383 is `round(K / 30)`,
    /// which `floor(ε · K)` with ε = 3.3% does not reproduce).
    pub fn random_sampling_count<R: Rng + ?Sized>(count: usize, total_clients: usize, rng: &mut R) -> Result<Self> {
        if count == 0 || count >= total_clients {
            return Err(FedError::Config(format!(
                "compromised count must lie in [1, {total_clients}), got {count}"
            )));
        }
        Ok(AttackSchedule::RandomSampling {
            epsilon: count as f64 / total_clients as f64,
            compromised_ids: sample(rng, total_clients, count).into_iter().collect(),
        })
    }

    pub fn is_active(&self) -> bool {
        !matches!(self, AttackSchedule::NoAttack)
    }
}

/// Positions within `selected` (the round's sorted client indices) that are
/// taken by adversaries.
pub fn schedule_adversaries(t: usize, selected: &[usize], schedule: &AttackSchedule) -> Vec<usize> {
    if selected.is_empty() {
        return Vec::new();
    }
    match schedule {
        AttackSchedule::NoAttack => Vec::new(),
        AttackSchedule::FixedFrequency { period } => {
            if t.is_multiple_of(*period) {
                vec![0]
            } else {
                Vec::new()
            }
        }
        AttackSchedule::RandomSampling { compromised_ids, .. } => selected
            .iter()
            .enumerate()
            .filter(|(_, id)| compromised_ids.contains(id))
            .map(|(slot, _)| slot)
            .collect(),
    }
}
