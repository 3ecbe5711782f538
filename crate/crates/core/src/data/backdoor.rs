use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::FederatedDataset;
use crate::error::{FedError, Result};
use crate::nn::Example;

/// Which clients' `source_label` examples the adversary wants relabelled as
/// `target_label`. The number of target clients is the number of backdoor
/// tasks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackdoorSpec {
    pub target_client_ids: Vec<String>,
    pub source_label: usize,
    pub target_label: usize,
}

/// The adversary's data: mislabelled training and evaluation sets, plus clean
/// samples from the true distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct BackdoorTask {
    pub mal_train: Vec<Example>,
    pub mal_eval: Vec<Example>,
    pub attacker_clean: Vec<Example>,
    pub target_label: usize,
}

impl BackdoorTask {
    /// `attacker_clean ∪ mal_train`, the set malicious training runs on.
    pub fn training_set(&self) -> Vec<&Example> {
        self.attacker_clean.iter().chain(self.mal_train.iter()).collect()
    }
}

/// Picks `count` target clients among those holding at least two
/// `source_label` examples, returned in canonical order.
pub fn choose_target_clients<R: Rng + ?Sized>(
    fed: &FederatedDataset,
    count: usize,
    source_label: usize,
    rng: &mut R,
) -> Result<Vec<String>> {
    let eligible: Vec<&str> = fed
        .clients
        .iter()
        .filter(|c| c.examples.iter().filter(|e| e.label == source_label).count() >= 2)
        .map(|c| c.client_id.as_str())
        .collect();
    if count > eligible.len() {
        return Err(FedError::Config(format!(
            "asked for {count} target clients but only {} hold two or more examples of label {source_label}",
            eligible.len()
        )));
    }
    let mut chosen: Vec<String> = sample(rng, eligible.len(), count)
        .into_iter()
        .map(|i| eligible[i].to_string())
        .collect();
    chosen.sort();
    Ok(chosen)
}

/// Collects every `source_label` example of the target clients, relabels it
/// `target_label` and splits it per client into train / eval parts. The
/// target clients keep their correctly labelled originals.
///
/// Each target contributes `floor(c · eval_fraction)` eval examples, clamped
/// to `[1, c - 1]`. The clean set is `attacker_clean_size` examples drawn
/// without replacement from all clients.
pub fn build_backdoor_task<R: Rng + ?Sized>(
    fed: &FederatedDataset,
    spec: &BackdoorSpec,
    eval_fraction: f64,
    attacker_clean_size: usize,
    rng: &mut R,
) -> Result<BackdoorTask> {
    if spec.source_label == spec.target_label {
        return Err(FedError::Config("source_label must differ from target_label".into()));
    }
    if spec.source_label >= fed.class_count || spec.target_label >= fed.class_count {
        return Err(FedError::Config("backdoor labels outside the class range".into()));
    }
    if !(0.0..1.0).contains(&eval_fraction) {
        return Err(FedError::Config(format!("eval_fraction must lie in [0, 1), got {eval_fraction}")));
    }
    if spec.target_client_ids.is_empty() {
        return Err(FedError::Config("backdoor needs at least one target client".into()));
    }

    let mut mal_train = Vec::new();
    let mut mal_eval = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for id in &spec.target_client_ids {
        if !seen.insert(id) {
            return Err(FedError::Config(format!("target client `{id}` listed twice")));
        }
        let client = fed
            .client(id)
            .ok_or_else(|| FedError::Config(format!("target client `{id}` not in dataset")))?;
        let mut sources: Vec<Example> = client
            .examples
            .iter()
            .filter(|e| e.label == spec.source_label)
            .map(|e| Example::new(e.input.clone(), spec.target_label))
            .collect();
        if sources.len() < 2 {
            return Err(FedError::Config(format!(
                "target client `{id}` holds {} examples of label {}, need at least 2",
                sources.len(),
                spec.source_label
            )));
        }
        sources.shuffle(rng);
        let n_eval = ((sources.len() as f64 * eval_fraction).floor() as usize).clamp(1, sources.len() - 1);
        mal_train.extend(sources.split_off(n_eval));
        mal_eval.extend(sources);
    }

    let pool = fed.pooled();
    if attacker_clean_size > pool.len() {
        return Err(FedError::Config(format!(
            "attacker_clean_size {attacker_clean_size} exceeds the {} available examples",
            pool.len()
        )));
    }
    let mut picks = sample(rng, pool.len(), attacker_clean_size).into_vec();
    picks.sort_unstable();
    let attacker_clean = picks.into_iter().map(|i| pool[i].clone()).collect();

    Ok(BackdoorTask {
        mal_train,
        mal_eval,
        attacker_clean,
        target_label: spec.target_label,
    })
}
