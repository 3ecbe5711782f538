//! The server side of federated averaging: client selection, local
//! training, and sample-weighted aggregation with a server learning rate.

mod round;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::ClientDataset;
use crate::defense::DefenseConfig;
use crate::error::{FedError, Result};
use crate::nn::{sgd_train, ModelArch, ParamVector, TrainHyper};

pub use round::{run_round, RoundContext};

/// The global model wₜ at round `round_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerState {
    pub round_index: usize,
    pub params: ParamVector,
    pub arch: ModelArch,
}

impl ServerState {
    pub fn new(params: ParamVector, arch: ModelArch) -> Result<Self> {
        if params.len() != arch.param_count() {
            return Err(FedError::Config(format!(
                "initial parameters have length {}, architecture expects {}",
                params.len(),
                arch.param_count()
            )));
        }
        Ok(ServerState {
            round_index: 0,
            params,
            arch,
        })
    }
}

/// One participant's contribution Δwᵏₜ with its claimed sample count nₖ.
///
/// `is_malicious` is bookkeeping for metrics; aggregation never reads it.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientUpdate {
    pub client_id: String,
    pub delta: ParamVector,
    pub num_samples: usize,
    pub is_malicious: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FedConfig {
    /// K
    pub total_clients: usize,
    /// m = C·K
    pub clients_per_round: usize,
    /// η
    pub server_lr: f64,
    pub client_hyper: TrainHyper,
}

impl FedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.clients_per_round == 0 || self.clients_per_round > self.total_clients {
            return Err(FedError::Config(format!(
                "clients_per_round must lie in [1, {}], got {}",
                self.total_clients, self.clients_per_round
            )));
        }
        if !(self.server_lr > 0.0 && self.server_lr.is_finite()) {
            return Err(FedError::Config(format!("server_lr must be positive, got {}", self.server_lr)));
        }
        self.client_hyper.validate()
    }

    /// C = m / K
    pub fn fraction(&self) -> f64 {
        self.clients_per_round as f64 / self.total_clients as f64
    }
}

/// Uniformly samples `m` of `k` client indices without replacement, sorted.
pub fn select_clients<R: Rng + ?Sized>(rng: &mut R, k: usize, m: usize) -> Result<Vec<usize>> {
    if m > k {
        return Err(FedError::Config(format!("cannot select {m} clients out of {k}")));
    }
    let mut picked = sample(rng, k, m).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Honest local training: `sgd_train(wₜ) − wₜ`.
pub fn client_update(
    w_t: &ParamVector,
    arch: &ModelArch,
    client: &ClientDataset,
    hyper: &TrainHyper,
    seed: u64,
) -> Result<ClientUpdate> {
    let trained = sgd_train(w_t, arch, &client.refs(), hyper, seed)?;
    Ok(ClientUpdate {
        client_id: client.client_id.clone(),
        delta: trained.sub(w_t),
        num_samples: client.num_samples(),
        is_malicious: false,
    })
}

/// Sum of `vectors` by recursive halving, which keeps rounding error
/// logarithmic in the number of terms and fixes the reduction order.
pub fn pairwise_sum(vectors: &[ParamVector]) -> ParamVector {
    match vectors {
        [] => panic!("pairwise_sum of nothing"),
        [one] => one.clone(),
        _ => {
            let (l, r) = vectors.split_at(vectors.len() / 2);
            let mut acc = pairwise_sum(l);
            acc.axpy(1.0, &pairwise_sum(r));
            acc
        }
    }
}

/// `Σ nₖ·Δₖ / Σ nₖ` after the defense's per-update transform.
pub fn weighted_mean(updates: &[ClientUpdate], defense: &DefenseConfig) -> ParamVector {
    let total: f64 = updates.iter().map(|u| u.num_samples as f64).sum();
    let weighted: Vec<ParamVector> = updates
        .iter()
        .map(|u| defense.transform_update(&u.delta).scale(u.num_samples as f64))
        .collect();
    pairwise_sum(&weighted).scale(1.0 / total)
}

/// wₜ₊₁ = wₜ + η · noise(Σ nₖ·clip(Δwᵏₜ) / Σ nₖ)
pub fn aggregate<R: Rng + ?Sized>(
    state: &ServerState,
    updates: &[ClientUpdate],
    cfg: &FedConfig,
    defense: &DefenseConfig,
    rng: &mut R,
) -> Result<ServerState> {
    if updates.is_empty() {
        return Err(FedError::Precondition("aggregate called with no updates".into()));
    }
    if let Some(bad) = updates.iter().find(|u| u.delta.len() != state.params.len()) {
        return Err(FedError::Internal(format!(
            "update from `{}` has length {}, model has {}",
            bad.client_id,
            bad.delta.len(),
            state.params.len()
        )));
    }
    if let Some(bad) = updates.iter().find(|u| u.num_samples == 0) {
        return Err(FedError::Internal(format!("update from `{}` claims zero samples", bad.client_id)));
    }
    let mean = weighted_mean(updates, defense);
    let step = defense.transform_aggregate(mean, rng);
    let mut params = state.params.clone();
    params.axpy(cfg.server_lr, &step);
    if !params.is_finite() {
        return Err(FedError::Internal("aggregation produced non-finite parameters".into()));
    }
    Ok(ServerState {
        round_index: state.round_index + 1,
        params,
        arch: state.arch.clone(),
    })
}
