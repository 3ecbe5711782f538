//! TOML experiment configuration.
//!
//! Optional fields are filled in by [`ExperimentConfig::resolve`], and the
//! resolved form is what gets echoed to `config.resolved`, so every implicit
//! parameter of a run is on record.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adversary::{period_for_epsilon, AttackVariant};
use crate::defense::DefenseConfig;
use crate::error::{FedError, Result};
use crate::nn::{ModelArch, TrainHyper};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub rounds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "one")]
    pub eval_every: usize,
    /// Worker threads for client training; 0 uses the rayon default.
    /// Results do not depend on it.
    #[serde(default)]
    pub threads: usize,
    pub dataset: DatasetSource,
    #[serde(default)]
    pub model: ModelConfig,
    pub federation: FederationConfig,
    #[serde(default)]
    pub backdoor: BackdoorConfig,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub attack: AttackConfig,
    #[serde(default)]
    pub defense: DefenseConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Synthetic {
        num_clients: usize,
        samples_per_client: usize,
        #[serde(default = "ten")]
        class_count: usize,
        #[serde(default = "default_side")]
        input_side: usize,
        /// Defaults to the experiment seed.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Leaf {
        path: PathBuf,
        #[serde(default = "default_holdout")]
        holdout_fraction: f64,
        #[serde(default = "ten")]
        class_count: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        input_shape: Option<[usize; 2]>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "arch", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    MlpSmall {
        #[serde(default = "mlp_hidden")]
        hidden: usize,
    },
    CnnEmnist {
        #[serde(default = "conv1")]
        conv1_filters: usize,
        #[serde(default = "conv2")]
        conv2_filters: usize,
        #[serde(default = "cnn_hidden")]
        hidden: usize,
    },
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::MlpSmall { hidden: mlp_hidden() }
    }
}

impl ModelConfig {
    pub fn build(&self, input_shape: (usize, usize), classes: usize) -> ModelArch {
        let (h, w) = input_shape;
        match *self {
            ModelConfig::MlpSmall { hidden } => ModelArch::mlp_with_hidden(h, w, classes, hidden),
            ModelConfig::CnnEmnist {
                conv1_filters,
                conv2_filters,
                hidden,
            } => ModelArch::cnn_with_widths(h, w, classes, conv1_filters, conv2_filters, hidden),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FederationConfig {
    pub clients_per_round: usize,
    #[serde(default = "one_f")]
    pub server_lr: f64,
    #[serde(default = "five")]
    pub epochs: usize,
    #[serde(default = "twenty")]
    pub batch_size: usize,
    #[serde(default = "tenth")]
    pub learning_rate: f64,
}

impl FederationConfig {
    pub fn hyper(&self) -> TrainHyper {
        TrainHyper::new(self.epochs, self.batch_size, self.learning_rate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackdoorConfig {
    /// Explicit target client ids; takes precedence over `num_targets`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_clients: Option<Vec<String>>,
    /// Number of target clients drawn (seeded) from eligible clients.
    #[serde(default = "thirty")]
    pub num_targets: usize,
    #[serde(default = "seven")]
    pub source_label: usize,
    #[serde(default = "one")]
    pub target_label: usize,
    #[serde(default = "fifth")]
    pub eval_fraction: f64,
    #[serde(default = "clean_size")]
    pub attacker_clean_size: usize,
}

impl Default for BackdoorConfig {
    fn default() -> Self {
        BackdoorConfig {
            target_clients: None,
            num_targets: thirty(),
            source_label: seven(),
            target_label: one(),
            eval_fraction: fifth(),
            attacker_clean_size: clean_size(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleConfig {
    #[default]
    NoAttack,
    /// Give either `period` or `epsilon` (then period = round(1/(ε·m))).
    FixedFrequency {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        period: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
    },
    /// Give either `epsilon` (⌊ε·K⌋ compromised) or `num_compromised`.
    RandomSampling {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        num_compromised: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    #[default]
    Unconstrained,
    NormBounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    #[serde(default)]
    pub kind: AttackKind,
    /// Required for `norm_bounded`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_bound: Option<f64>,
    #[serde(default = "five")]
    pub pgd_rounds: usize,
    /// Defaults to 5 for unconstrained, 1 (per projection round) for
    /// norm-bounded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default = "twenty")]
    pub batch_size: usize,
    #[serde(default = "tenth")]
    pub learning_rate: f64,
    /// nₖ reported by each attacker; defaults to the median client size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reported_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimated_sum_n: Option<usize>,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            kind: AttackKind::Unconstrained,
            norm_bound: None,
            pgd_rounds: five(),
            epochs: None,
            batch_size: twenty(),
            learning_rate: tenth(),
            reported_samples: None,
            estimated_sum_n: None,
        }
    }
}

impl AttackConfig {
    pub fn variant(&self) -> Result<AttackVariant> {
        match self.kind {
            AttackKind::Unconstrained => Ok(AttackVariant::Unconstrained),
            AttackKind::NormBounded => {
                let norm_bound = self
                    .norm_bound
                    .ok_or_else(|| FedError::Config("norm_bounded attack needs `norm_bound`".into()))?;
                Ok(AttackVariant::NormBounded {
                    norm_bound,
                    pgd_rounds: self.pgd_rounds,
                })
            }
        }
    }

    pub fn resolved_epochs(&self) -> usize {
        self.epochs.unwrap_or(match self.kind {
            AttackKind::Unconstrained => 5,
            AttackKind::NormBounded => 1,
        })
    }

    pub fn hyper(&self) -> TrainHyper {
        TrainHyper::new(self.resolved_epochs(), self.batch_size, self.learning_rate)
    }
}

fn default_name() -> String {
    "experiment".into()
}
fn one() -> usize {
    1
}
fn five() -> usize {
    5
}
fn seven() -> usize {
    7
}
fn ten() -> usize {
    10
}
fn twenty() -> usize {
    20
}
fn thirty() -> usize {
    30
}
fn default_side() -> usize {
    12
}
fn clean_size() -> usize {
    400
}
fn mlp_hidden() -> usize {
    crate::nn::arch::MLP_HIDDEN
}
fn conv1() -> usize {
    crate::nn::arch::CNN_CONV1_FILTERS
}
fn conv2() -> usize {
    crate::nn::arch::CNN_CONV2_FILTERS
}
fn cnn_hidden() -> usize {
    crate::nn::arch::CNN_HIDDEN
}
fn one_f() -> f64 {
    1.0
}
fn tenth() -> f64 {
    0.1
}
fn fifth() -> f64 {
    0.2
}
fn default_holdout() -> f64 {
    0.1
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| FedError::Malformed {
            path: "<string>".into(),
            reason: e.to_string(),
        })
    }

    /// Reads a config file. A relative LEAF dataset path is taken relative
    /// to the config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| FedError::io(path, e))?;
        let mut cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| FedError::Malformed {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        if let DatasetSource::Leaf { path: data, .. } = &mut cfg.dataset {
            if data.is_relative() {
                if let Some(dir) = path.parent() {
                    *data = dir.join(&*data);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config always serialises")
    }

    /// Static checks that do not need the dataset.
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(FedError::Config("rounds must be at least 1".into()));
        }
        if self.eval_every == 0 {
            return Err(FedError::Config("eval_every must be at least 1".into()));
        }
        match self.schedule {
            ScheduleConfig::NoAttack => {}
            ScheduleConfig::FixedFrequency { period, epsilon } => match (period, epsilon) {
                (Some(0), _) => return Err(FedError::Config("period must be at least 1".into())),
                (Some(_), None) => {}
                (None, Some(eps)) => {
                    period_for_epsilon(eps, self.federation.clients_per_round)?;
                }
                _ => {
                    return Err(FedError::Config(
                        "fixed_frequency needs exactly one of `period` or `epsilon`".into(),
                    ))
                }
            },
            ScheduleConfig::RandomSampling { epsilon, num_compromised } => match (epsilon, num_compromised) {
                (Some(e), None) if e > 0.0 && e < 1.0 => {}
                (None, Some(n)) if n > 0 => {}
                _ => {
                    return Err(FedError::Config(
                        "random_sampling needs exactly one of `epsilon` in (0,1) or `num_compromised` >= 1".into(),
                    ))
                }
            },
        }
        self.attack.variant()?;
        self.defense.validate()?;
        self.federation.hyper().validate()?;
        self.attack.hyper().validate()
    }
}
