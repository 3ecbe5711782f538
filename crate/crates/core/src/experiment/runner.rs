use std::path::{Path, PathBuf};

use super::config::{DatasetSource, ExperimentConfig, ScheduleConfig};
use super::report::{to_csv, RoundReport};
use super::svg::render_curves;
use crate::adversary::{period_for_epsilon, AttackSchedule, AttackerConfig};
use crate::data::{
    build_backdoor_task, choose_target_clients, generate_synthetic, load_leaf_json, BackdoorSpec, BackdoorTask,
    FederatedDataset, LeafOptions, SyntheticParams,
};
use crate::defense::DefenseConfig;
use crate::error::{FedError, Result};
use crate::federation::{run_round, FedConfig, RoundContext, ServerState};
use crate::nn::ModelArch;
use crate::seed::{derive, rng_from, SeedPart};

/// A fully prepared run: data loaded, derived values resolved.
#[derive(Debug, Clone)]
pub struct Experiment {
    /// The resolved config; re-running it reproduces this experiment.
    pub config: ExperimentConfig,
    pub data: FederatedDataset,
    pub arch: ModelArch,
    pub fed: FedConfig,
    pub schedule: AttackSchedule,
    pub attacker: Option<AttackerConfig>,
    pub defense: DefenseConfig,
    pub backdoor: BackdoorTask,
    pub initial: ServerState,
}

fn setup_seed(root: u64, tag: &str) -> u64 {
    derive(root, &[SeedPart::Tag("setup"), SeedPart::Tag(tag)])
}

/// Loads or generates the dataset a config names.
pub fn load_dataset(config: &ExperimentConfig) -> Result<FederatedDataset> {
    match &config.dataset {
        DatasetSource::Synthetic {
            num_clients,
            samples_per_client,
            class_count,
            input_side,
            seed,
        } => generate_synthetic(
            seed.unwrap_or(config.seed),
            &SyntheticParams {
                num_clients: *num_clients,
                samples_per_client: *samples_per_client,
                class_count: *class_count,
                input_side: *input_side,
            },
        ),
        DatasetSource::Leaf {
            path,
            holdout_fraction,
            class_count,
            input_shape,
        } => load_leaf_json(
            path,
            &LeafOptions {
                holdout_fraction: *holdout_fraction,
                class_count: *class_count,
                input_shape: input_shape.map(|[h, w]| (h, w)),
            },
        ),
    }
}

impl Experiment {
    pub fn prepare(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let data = load_dataset(config)?;
        Self::with_dataset(config, data)
    }

    /// Prepares a run on an already loaded dataset.
    pub fn with_dataset(config: &ExperimentConfig, data: FederatedDataset) -> Result<Self> {
        config.validate()?;
        data.validate()?;
        let mut config = config.clone();
        let root = config.seed;
        if let DatasetSource::Synthetic { seed, .. } = &mut config.dataset {
            seed.get_or_insert(root);
        }

        let arch = config.model.build(data.input_shape, data.class_count);
        let fed = FedConfig {
            total_clients: data.total_clients(),
            clients_per_round: config.federation.clients_per_round,
            server_lr: config.federation.server_lr,
            client_hyper: config.federation.hyper(),
        };
        fed.validate()?;

        let bd = &mut config.backdoor;
        let targets = match &bd.target_clients {
            Some(ids) => ids.clone(),
            None => choose_target_clients(
                &data,
                bd.num_targets,
                bd.source_label,
                &mut rng_from(setup_seed(root, "targets")),
            )?,
        };
        bd.num_targets = targets.len();
        bd.target_clients = Some(targets.clone());
        let spec = BackdoorSpec {
            target_client_ids: targets,
            source_label: bd.source_label,
            target_label: bd.target_label,
        };
        let backdoor = build_backdoor_task(
            &data,
            &spec,
            bd.eval_fraction,
            bd.attacker_clean_size,
            &mut rng_from(setup_seed(root, "backdoor")),
        )?;

        let schedule = match config.schedule {
            ScheduleConfig::NoAttack => AttackSchedule::NoAttack,
            ScheduleConfig::FixedFrequency { period, epsilon } => {
                let period = match (period, epsilon) {
                    (Some(p), _) => p,
                    (None, Some(eps)) => period_for_epsilon(eps, fed.clients_per_round)?,
                    (None, None) => unreachable!("validated"),
                };
                AttackSchedule::fixed_frequency(period)?
            }
            ScheduleConfig::RandomSampling { epsilon, num_compromised } => {
                let mut rng = rng_from(setup_seed(root, "compromised"));
                match (epsilon, num_compromised) {
                    (_, Some(n)) => AttackSchedule::random_sampling_count(n, fed.total_clients, &mut rng)?,
                    (Some(e), None) => AttackSchedule::random_sampling(e, fed.total_clients, &mut rng)?,
                    (None, None) => unreachable!("validated"),
                }
            }
        };

        let attacker = if schedule.is_active() {
            let reported = *config
                .attack
                .reported_samples
                .get_or_insert(data.median_client_size().max(1));
            config.attack.epochs = Some(config.attack.resolved_epochs());
            let cfg = AttackerConfig {
                task: backdoor.clone(),
                variant: config.attack.variant()?,
                mal_hyper: config.attack.hyper(),
                reported_samples: reported,
                estimated_sum_n: config.attack.estimated_sum_n,
            };
            cfg.validate()?;
            Some(cfg)
        } else {
            None
        };

        let params = arch.init_params(&mut rng_from(setup_seed(root, "init")));
        let initial = ServerState::new(params, arch.clone())?;

        Ok(Experiment {
            defense: config.defense,
            config,
            data,
            arch,
            fed,
            schedule,
            attacker,
            backdoor,
            initial,
        })
    }

    fn context(&self) -> RoundContext<'_> {
        RoundContext {
            data: &self.data,
            fed: &self.fed,
            schedule: &self.schedule,
            attacker: self.attacker.as_ref(),
            defense: &self.defense,
            backdoor: &self.backdoor,
            root_seed: self.config.seed,
            eval_every: self.config.eval_every,
            total_rounds: Some(self.config.rounds),
        }
    }

    /// Runs every round in memory, calling `observe` after each one.
    pub fn run_with(&self, mut observe: impl FnMut(&RoundReport) + Send) -> Result<(ServerState, Vec<RoundReport>)> {
        let mut body = || -> Result<(ServerState, Vec<RoundReport>)> {
            let ctx = self.context();
            let mut state = self.initial.clone();
            let mut reports = Vec::with_capacity(self.config.rounds);
            for _ in 0..self.config.rounds {
                let (next, report) = run_round(&ctx, &state, &reports)?;
                check_report(&report)?;
                observe(&report);
                reports.push(report);
                state = next;
            }
            Ok((state, reports))
        };
        if self.config.threads == 0 {
            body()
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(self.config.threads)
                .build()
                .map_err(|e| FedError::Config(format!("cannot build thread pool: {e}")))?
                .install(body)
        }
    }

    pub fn run(&self) -> Result<Vec<RoundReport>> {
        self.run_with(|_| {}).map(|(_, r)| r)
    }

    /// The `config.resolved` text: the effective config followed by
    /// derived values as comments.
    pub fn resolved_text(&self) -> String {
        let mut out = self.config.to_toml();
        out.push_str("\n# derived values\n");
        out.push_str(&format!("# total_clients = {}\n", self.fed.total_clients));
        out.push_str(&format!("# param_count = {}\n", self.arch.param_count()));
        out.push_str(&format!(
            "# holdout_size = {}\n# mal_train_size = {}\n# mal_eval_size = {}\n",
            self.data.holdout_main.len(),
            self.backdoor.mal_train.len(),
            self.backdoor.mal_eval.len()
        ));
        match &self.schedule {
            AttackSchedule::NoAttack => out.push_str("# schedule = none\n"),
            AttackSchedule::FixedFrequency { period } => out.push_str(&format!("# period = {period}\n")),
            AttackSchedule::RandomSampling { compromised_ids, .. } => {
                out.push_str(&format!("# compromised_count = {}\n", compromised_ids.len()));
                let ids: Vec<String> = compromised_ids.iter().map(|i| i.to_string()).collect();
                out.push_str(&format!("# compromised_ids = [{}]\n", ids.join(", ")));
            }
        }
        out
    }
}

fn check_report(r: &RoundReport) -> Result<()> {
    let ok = |v: f64| (0.0..=1.0).contains(&v);
    if !ok(r.main_accuracy) || !ok(r.backdoor_accuracy) || !ok(r.cumulative_mean_backdoor) {
        return Err(FedError::Internal(format!("round {} produced an accuracy outside [0, 1]", r.round)));
    }
    Ok(())
}

/// Paths of the files a run writes.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub reports: Vec<RoundReport>,
    pub dir: PathBuf,
    pub metrics_csv: PathBuf,
    pub config_resolved: PathBuf,
    pub curves_svg: PathBuf,
}

/// Runs `config` and writes `metrics.csv`, `config.resolved` and
/// `curves.svg` into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentOutput> {
    let exp = Experiment::prepare(config)?;
    let reports = exp.run()?;
    write_artifacts(&exp, &reports, out_dir)
}

pub fn write_artifacts(exp: &Experiment, reports: &[RoundReport], out_dir: &Path) -> Result<ExperimentOutput> {
    std::fs::create_dir_all(out_dir).map_err(|e| FedError::io(out_dir, e))?;
    let metrics_csv = out_dir.join("metrics.csv");
    let config_resolved = out_dir.join("config.resolved");
    let curves_svg = out_dir.join("curves.svg");
    let write = |p: &Path, s: String| std::fs::write(p, s).map_err(|e| FedError::io(p, e));
    write(&metrics_csv, to_csv(reports))?;
    write(&config_resolved, exp.resolved_text())?;
    write(&curves_svg, render_curves(&exp.config.name, reports))?;
    Ok(ExperimentOutput {
        reports: reports.to_vec(),
        dir: out_dir.to_path_buf(),
        metrics_csv,
        config_resolved,
        curves_svg,
    })
}
