use std::path::PathBuf;

use fedsim::experiment::{
    cumulative_mean, percentile, run_experiment, to_csv, Experiment, ExperimentConfig, ScheduleConfig, CSV_HEADER,
};
use fedsim::federation::{client_update, select_clients};
use fedsim::seed::{client_seed, derive, rng_from, SeedPart};

const TINY: &str = r#"
name = "tiny"
rounds = 1
seed = 4

[dataset]
kind = "synthetic"
num_clients = 20
samples_per_client = 20
input_side = 6
seed = 4

[federation]
clients_per_round = 5

[backdoor]
num_targets = 2
attacker_clean_size = 20
"#;

#[test]
fn shipped_configs_parse_and_validate() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 8);
}

#[test]
fn single_clean_round_writes_one_row() {
    let cfg = ExperimentConfig::from_toml(TINY).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&cfg, dir.path()).unwrap();
    let csv = std::fs::read_to_string(&out.metrics_csv).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 2);
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "0");
    assert_eq!(fields[4], "0");
    // no attacker, so its norm is absent
    assert_eq!(fields[7], "NaN");
    let svg = std::fs::read_to_string(&out.curves_svg).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn resolved_config_reproduces_the_run() {
    let mut cfg = ExperimentConfig::from_toml(TINY).unwrap();
    cfg.rounds = 6;
    cfg.schedule = fedsim::experiment::ScheduleConfig::RandomSampling {
        epsilon: Some(0.2),
        num_compromised: None,
    };
    let dir = tempfile::tempdir().unwrap();
    let first = run_experiment(&cfg, &dir.path().join("a")).unwrap();
    let resolved = ExperimentConfig::load(&first.config_resolved).unwrap();
    let second = run_experiment(&resolved, &dir.path().join("b")).unwrap();
    assert_eq!(
        std::fs::read(first.metrics_csv).unwrap(),
        std::fs::read(second.metrics_csv).unwrap()
    );
}

#[test]
fn clean_training_converges() {
    let mut cfg = ExperimentConfig::from_toml(TINY).unwrap();
    cfg.rounds = 30;
    let reports = Experiment::prepare(&cfg).unwrap().run().unwrap();
    let main: Vec<f64> = reports.iter().map(|r| r.main_accuracy).collect();
    let running = cumulative_mean(&main);
    let half = running.len() / 2;
    for w in running[half..].windows(2) {
        assert!(w[1] >= w[0] - 1e-12, "running mean of main accuracy fell: {w:?}");
    }
    assert!(main.last().unwrap() > &0.9);
    assert!(reports.iter().all(|r| r.adversary_count == 0 && r.attacker_norm.is_none()));
    // a clean model classifies the target clients' sevens as sevens
    assert!(reports.last().unwrap().backdoor_accuracy < 0.1);
}

#[test]
fn eval_every_carries_accuracy_forward() {
    let mut cfg = ExperimentConfig::from_toml(TINY).unwrap();
    cfg.rounds = 7;
    cfg.eval_every = 3;
    let reports = Experiment::prepare(&cfg).unwrap().run().unwrap();
    assert_eq!(reports[1].main_accuracy, reports[0].main_accuracy);
    assert_eq!(reports[2].main_accuracy, reports[0].main_accuracy);
    assert_eq!(to_csv(&reports).lines().count(), 8);
}

#[test]
fn invalid_configs_are_rejected() {
    let cases = [
        TINY.replace("rounds = 1", "rounds = 0"),
        TINY.replace("rounds = 1", "rounds = 1\neval_every = 0"),
        TINY.replace("clients_per_round = 5", "clients_per_round = 50"),
        format!("{TINY}\n[defense]\nkind = \"norm_clip\"\nnorm_bound = -1.0\n"),
        format!("{TINY}\n[schedule]\nkind = \"fixed_frequency\"\n"),
        format!("{TINY}\n[schedule]\nkind = \"fixed_frequency\"\nperiod = 1\n[attack]\nkind = \"norm_bounded\"\n"),
    ];
    for text in &cases {
        let cfg = ExperimentConfig::from_toml(text).expect("case should parse");
        assert!(Experiment::prepare(&cfg).is_err(), "accepted:\n{text}");
    }
}

#[test]
fn percentile_interpolates() {
    let v = [4.0, 1.0, 3.0, 2.0];
    assert_eq!(percentile(&v, 0.0), Some(1.0));
    assert_eq!(percentile(&v, 100.0), Some(4.0));
    assert!((percentile(&v, 90.0).unwrap() - 3.7).abs() < 1e-12);
    assert_eq!(percentile(&[], 50.0), None);
}

#[test]
fn clean_rounds_match_hand_rolled_fedavg() {
    let mut cfg = ExperimentConfig::from_toml(TINY).unwrap();
    cfg.rounds = 3;
    cfg.federation.server_lr = 0.7;
    let exp = Experiment::prepare(&cfg).unwrap();
    let (state, _) = exp.run_with(|_| {}).unwrap();

    let mut w = exp.initial.params.clone();
    for t in 0..3 {
        let tag = [SeedPart::Tag("round"), SeedPart::Index(t as u64), SeedPart::Tag("select")];
        let selected = select_clients(&mut rng_from(derive(cfg.seed, &tag)), 20, 5).unwrap();
        let mut step = vec![0.0; w.len()];
        let mut total = 0.0;
        for &k in &selected {
            let client = &exp.data.clients[k];
            let seed = client_seed(cfg.seed, t, &client.client_id);
            let u = client_update(&w, &exp.arch, client, &exp.fed.client_hyper, seed).unwrap();
            total += u.num_samples as f64;
            for (s, d) in step.iter_mut().zip(u.delta.iter()) {
                *s += u.num_samples as f64 * d;
            }
        }
        for (wi, s) in w.as_mut_slice().iter_mut().zip(&step) {
            *wi += 0.7 * s / total;
        }
    }
    assert!(state.params.max_abs_diff(&w) < 1e-12);
    assert_eq!(state.round_index, 3);
}

#[test]
fn every_round_schedule_always_has_an_attacker() {
    let mut cfg = ExperimentConfig::from_toml(TINY).unwrap();
    cfg.rounds = 5;
    cfg.schedule = ScheduleConfig::FixedFrequency {
        period: Some(1),
        epsilon: None,
    };
    let reports = Experiment::prepare(&cfg).unwrap().run().unwrap();
    assert!(reports.iter().all(|r| r.adversary_count >= 1 && r.attacker_norm.is_some()));
}

#[test]
fn random_sampling_rounds_average_one_adversary() {
    // 3383 clients and 113 compromised, as in the 3.3% EMNIST setting
    let text = r#"
rounds = 5000
seed = 6
eval_every = 5000

[dataset]
kind = "synthetic"
num_clients = 3383
samples_per_client = 20
input_side = 6
seed = 6

[model]
arch = "mlp_small"
hidden = 4

[federation]
clients_per_round = 30
epochs = 1

[backdoor]
num_targets = 1
eval_fraction = 0.0
attacker_clean_size = 2

[schedule]
kind = "random_sampling"
num_compromised = 113

[attack]
epochs = 1
"#;
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    let reports = Experiment::prepare(&cfg).unwrap().run().unwrap();
    let mean = reports.iter().map(|r| r.adversary_count as f64).sum::<f64>() / reports.len() as f64;
    let expect = 30.0 * 113.0 / 3383.0;
    assert!((mean - expect).abs() < 0.05, "mean adversary count {mean}, expected {expect:.4}");
}
