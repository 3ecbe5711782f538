//! Federated datasets: LEAF ingestion, the synthetic non-iid generator and
//! backdoor task construction.

mod backdoor;
mod leaf;
mod synthetic;

use std::collections::HashSet;

use crate::error::{FedError, Result};
use crate::nn::Example;

pub use backdoor::{build_backdoor_task, choose_target_clients, BackdoorSpec, BackdoorTask};
pub use leaf::{load_leaf_json, parse_leaf_json, to_leaf_json, write_leaf_json, LeafOptions};
pub use synthetic::{generate_synthetic, SyntheticParams};

/// One client's local examples. `num_samples()` is the nₖ the server sees.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientDataset {
    pub client_id: String,
    pub examples: Vec<Example>,
}

impl ClientDataset {
    pub fn num_samples(&self) -> usize {
        self.examples.len()
    }

    pub fn refs(&self) -> Vec<&Example> {
        self.examples.iter().collect()
    }
}

/// All clients in canonical (sorted by id) order plus the global holdout.
#[derive(Debug, Clone, PartialEq)]
pub struct FederatedDataset {
    pub clients: Vec<ClientDataset>,
    pub holdout_main: Vec<Example>,
    pub class_count: usize,
    pub input_shape: (usize, usize),
}

impl FederatedDataset {
    /// Checks ids are unique and every example fits the declared shape and
    /// class count.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        let pixels = self.input_shape.0 * self.input_shape.1;
        for c in &self.clients {
            if !seen.insert(c.client_id.as_str()) {
                return Err(FedError::Ingest {
                    user: c.client_id.clone(),
                    reason: "duplicate client id".into(),
                });
            }
            if c.examples.is_empty() {
                return Err(FedError::Ingest {
                    user: c.client_id.clone(),
                    reason: "client has no examples".into(),
                });
            }
            check_examples(&c.client_id, &c.examples, pixels, self.class_count)?;
        }
        check_examples("<holdout>", &self.holdout_main, pixels, self.class_count)
    }

    pub fn total_clients(&self) -> usize {
        self.clients.len()
    }

    pub fn client(&self, id: &str) -> Option<&ClientDataset> {
        self.clients
            .binary_search_by(|c| c.client_id.as_str().cmp(id))
            .ok()
            .map(|i| &self.clients[i])
    }

    /// Every training example of every client, in canonical order.
    pub fn pooled(&self) -> Vec<&Example> {
        self.clients.iter().flat_map(|c| c.examples.iter()).collect()
    }

    /// Median client size, rounded down for even counts' midpoint.
    pub fn median_client_size(&self) -> usize {
        let mut sizes: Vec<usize> = self.clients.iter().map(|c| c.num_samples()).collect();
        sizes.sort_unstable();
        if sizes.is_empty() {
            return 0;
        }
        let mid = sizes.len() / 2;
        if sizes.len() % 2 == 1 {
            sizes[mid]
        } else {
            (sizes[mid - 1] + sizes[mid]) / 2
        }
    }
}

fn check_examples(user: &str, examples: &[Example], pixels: usize, classes: usize) -> Result<()> {
    for ex in examples {
        if ex.input.len() != pixels {
            return Err(FedError::Ingest {
                user: user.to_string(),
                reason: format!("example has {} pixels, expected {}", ex.input.len(), pixels),
            });
        }
        if ex.label >= classes {
            return Err(FedError::Ingest {
                user: user.to_string(),
                reason: format!("label {} outside [0, {})", ex.label, classes),
            });
        }
        if ex.input.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(FedError::Ingest {
                user: user.to_string(),
                reason: "pixel outside [0, 1]".into(),
            });
        }
    }
    Ok(())
}
