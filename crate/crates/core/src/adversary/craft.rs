//! Malicious update crafting by model replacement.
//!
//! The attacker trains a backdoored model w* starting from wₜ and sends
//! β(w* − wₜ), with β chosen so that the server's weighted average lands on
//! w* when every other update is zero.

use serde::{Deserialize, Serialize};

use crate::data::BackdoorTask;
use crate::error::{FedError, Result};
use crate::nn::{l2_norm, project_l2_ball, sgd_train, ModelArch, ParamVector, TrainHyper};
use crate::seed::{derive, SeedPart};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackVariant {
    /// Train freely on D_trn ∪ D_mal, then boost.
    Unconstrained,
    /// `pgd_rounds` of (train, project onto the ball of radius M/β around wₜ).
    NormBounded { norm_bound: f64, pgd_rounds: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackerConfig {
    pub task: BackdoorTask,
    pub variant: AttackVariant,
    /// For `NormBounded`, `epochs` counts epochs per projection round.
    pub mal_hyper: TrainHyper,
    /// nₖ each attacker reports to the server.
    pub reported_samples: usize,
    /// Replaces the true Σnₖ when computing β, for degraded-knowledge runs.
    pub estimated_sum_n: Option<usize>,
}

impl AttackerConfig {
    pub fn validate(&self) -> Result<()> {
        if let AttackVariant::NormBounded { norm_bound, pgd_rounds } = self.variant {
            if !(norm_bound > 0.0 && norm_bound.is_finite()) {
                return Err(FedError::Config(format!("attack norm bound must be positive, got {norm_bound}")));
            }
            if pgd_rounds == 0 {
                return Err(FedError::Config("pgd_rounds must be at least 1".into()));
            }
        }
        if self.reported_samples == 0 {
            return Err(FedError::Config("attacker must report at least one sample".into()));
        }
        if self.task.mal_train.is_empty() {
            return Err(FedError::Config("backdoor training set is empty".into()));
        }
        self.mal_hyper.validate()
    }
}

/// β = Σnₖ / (η · n_attacker)
pub fn compute_boost_factor(sum_n: usize, eta: f64, n_attacker: usize) -> f64 {
    sum_n as f64 / (eta * n_attacker as f64)
}

/// Seed for projection round `i`; round 0 is also what the unconstrained
/// attack trains with.
fn pgd_seed(seed: u64, i: usize) -> u64 {
    derive(seed, &[SeedPart::Tag("pgd"), SeedPart::Index(i as u64)])
}

fn check_beta(beta: f64) -> Result<()> {
    if beta >= 1.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(FedError::Precondition(format!("boost factor must be >= 1, got {beta}")))
    }
}

/// β · (w* − wₜ) with w* = SGD from wₜ on D_trn ∪ D_mal.
pub fn craft_unconstrained(
    w_t: &ParamVector,
    arch: &ModelArch,
    cfg: &AttackerConfig,
    beta: f64,
    seed: u64,
) -> Result<ParamVector> {
    check_beta(beta)?;
    let w_star = sgd_train(w_t, arch, &cfg.task.training_set(), &cfg.mal_hyper, pgd_seed(seed, 0))?;
    Ok(w_star.sub(w_t).scale(beta))
}

/// Projected training: each round trains on D_trn ∪ D_mal and projects back
/// onto the ℓ₂ ball of radius M/β around wₜ. The boosted result has norm at
/// most M, so clipping at M leaves it untouched.
pub fn craft_norm_bounded(
    w_t: &ParamVector,
    arch: &ModelArch,
    cfg: &AttackerConfig,
    norm_bound: f64,
    pgd_rounds: usize,
    beta: f64,
    seed: u64,
) -> Result<ParamVector> {
    check_beta(beta)?;
    if norm_bound.is_nan() || norm_bound <= 0.0 {
        return Err(FedError::Precondition(format!("norm bound must be positive, got {norm_bound}")));
    }
    if pgd_rounds == 0 {
        return Err(FedError::Precondition("pgd_rounds must be at least 1".into()));
    }
    let data = cfg.task.training_set();
    let radius = norm_bound / beta;
    let mut w = w_t.clone();
    for i in 0..pgd_rounds {
        w = sgd_train(&w, arch, &data, &cfg.mal_hyper, pgd_seed(seed, i))?;
        w = project_l2_ball(&w, w_t, radius);
    }
    let mut delta = w.sub(w_t).scale(beta);
    // boosting can push the norm an ulp past M
    let mut backoff = f64::EPSILON;
    while l2_norm(&delta) > norm_bound {
        delta = delta.scale(1.0 - backoff);
        backoff = (backoff * 2.0).min(0.5);
    }
    Ok(delta)
}

/// `count` equal shares of `total`; with equal reported nₖ their weighted
/// contribution equals one attacker sending `total`.
pub fn split_among_attackers(total: &ParamVector, count: usize) -> Vec<ParamVector> {
    assert!(count >= 1, "split_among_attackers needs at least one attacker");
    if count == 1 {
        return vec![total.clone()];
    }
    let share = total.scale(1.0 / count as f64);
    vec![share; count]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Example;
    use crate::seed::rng_from;
    use rand::Rng;

    fn setup(epochs: usize, lr: f64) -> (ModelArch, ParamVector, AttackerConfig) {
        let arch = ModelArch::mlp_small(3, 3, 3);
        let w = arch.init_params(&mut rng_from(1));
        let mut rng = rng_from(2);
        let mut ex = |label| Example::new((0..9).map(|_| rng.random()).collect(), label);
        let task = BackdoorTask {
            mal_train: vec![ex(1), ex(1)],
            mal_eval: vec![ex(1)],
            attacker_clean: vec![ex(0), ex(2), ex(2)],
            target_label: 1,
        };
        let cfg = AttackerConfig {
            task,
            variant: AttackVariant::Unconstrained,
            mal_hyper: TrainHyper::new(epochs, 2, lr),
            reported_samples: 5,
            estimated_sum_n: None,
        };
        (arch, w, cfg)
    }

    #[test]
    fn boost_examples() {
        assert_eq!(compute_boost_factor(3000, 1.0, 100), 30.0);
        assert_eq!(compute_boost_factor(3000, 1.0, 3000), 1.0);
        assert_eq!(compute_boost_factor(600, 0.5, 20), 60.0);
    }

    #[test]
    fn beta_one_returns_plain_difference() {
        let (arch, w, cfg) = setup(2, 0.1);
        let d1 = craft_unconstrained(&w, &arch, &cfg, 1.0, 5).unwrap();
        let d3 = craft_unconstrained(&w, &arch, &cfg, 3.0, 5).unwrap();
        assert!(d3.max_abs_diff(&d1.scale(3.0)) < 1e-12);
        let w_star = sgd_train(&w, &arch, &cfg.task.training_set(), &cfg.mal_hyper, pgd_seed(5, 0)).unwrap();
        assert_eq!(d1, w_star.sub(&w));
    }

    #[test]
    fn zero_epochs_zero_delta() {
        let (arch, w, cfg) = setup(0, 0.1);
        let d = craft_unconstrained(&w, &arch, &cfg, 30.0, 5).unwrap();
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn beta_below_one_rejected() {
        let (arch, w, cfg) = setup(1, 0.1);
        assert!(craft_unconstrained(&w, &arch, &cfg, 0.5, 0).is_err());
    }

    #[test]
    fn norm_bounded_respects_bound() {
        let (arch, w, cfg) = setup(3, 0.5);
        let d = craft_norm_bounded(&w, &arch, &cfg, 0.2, 4, 10.0, 7).unwrap();
        assert!(l2_norm(&d) <= 0.2);
    }

    #[test]
    fn inactive_projection_matches_unconstrained() {
        let (arch, w, cfg) = setup(1, 1e-6);
        let a = craft_unconstrained(&w, &arch, &cfg, 4.0, 9).unwrap();
        let b = craft_norm_bounded(&w, &arch, &cfg, 1e3, 1, 4.0, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn splitting() {
        let t = ParamVector::from_vec(vec![3.0, -6.0]);
        assert_eq!(split_among_attackers(&t, 1), vec![t.clone()]);
        let halves = split_among_attackers(&t, 2);
        assert_eq!(halves[0].add(&halves[1]), t);
        let thirds = split_among_attackers(&t, 3);
        assert_eq!(thirds.len(), 3);
        assert!(thirds[0].max_abs_diff(&ParamVector::from_vec(vec![1.0, -2.0])) < 1e-15);
    }
}
