use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::arch::ModelArch;
use super::batch::{Batch, Example};
use super::model::loss_and_grad;
use super::params::ParamVector;
use crate::error::{FedError, Result};
use crate::seed::rng_from;

/// Local training schedule for plain mini-batch SGD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainHyper {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl TrainHyper {
    pub fn new(epochs: usize, batch_size: usize, learning_rate: f64) -> Self {
        TrainHyper {
            epochs,
            batch_size,
            learning_rate,
        }
    }

    /// Rejects zero batch sizes and non-positive learning rates. Zero epochs
    /// is accepted and means "no steps".
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(FedError::Config("batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(FedError::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

impl Default for TrainHyper {
    /// Five epochs, batch 20, learning rate 0.1.
    fn default() -> Self {
        TrainHyper::new(5, 20, 0.1)
    }
}

/// Runs `epochs × ceil(|data| / batch_size)` SGD steps starting from
/// `params`. The example order is reshuffled at the start of each epoch with
/// a generator seeded from `seed`.
pub fn sgd_train(
    params: &ParamVector,
    arch: &ModelArch,
    data: &[&Example],
    hyper: &TrainHyper,
    seed: u64,
) -> Result<ParamVector> {
    if data.is_empty() {
        return Err(FedError::Precondition("sgd_train called with empty data".into()));
    }
    hyper.validate()?;
    let mut w = params.clone();
    if hyper.epochs == 0 {
        return Ok(w);
    }
    let mut rng = rng_from(seed);
    let mut order: Vec<&Example> = data.to_vec();
    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(hyper.batch_size) {
            let (_, grad) = loss_and_grad(&w, arch, Batch::new(chunk))?;
            w.axpy(-hyper.learning_rate, &grad);
        }
    }
    if !w.is_finite() {
        return Err(FedError::Internal("training diverged to non-finite parameters".into()));
    }
    Ok(w)
}
