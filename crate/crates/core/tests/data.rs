use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fedsim::data::{
    build_backdoor_task, choose_target_clients, generate_synthetic, parse_leaf_json, to_leaf_json, BackdoorSpec,
    LeafOptions, SyntheticParams,
};
use fedsim::experiment::evaluate_main;
use fedsim::nn::{sgd_train, ModelArch, TrainHyper};
use fedsim::FedError;

fn desk_params() -> SyntheticParams {
    SyntheticParams {
        num_clients: 100,
        samples_per_client: 50,
        class_count: 10,
        input_side: 12,
    }
}

#[test]
fn synthetic_shape_and_determinism() {
    let a = generate_synthetic(4, &desk_params()).unwrap();
    let b = generate_synthetic(4, &desk_params()).unwrap();
    let c = generate_synthetic(5, &desk_params()).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.total_clients(), 100);
    assert!(a.clients.iter().all(|cl| cl.num_samples() == 50));
    assert!(a.clients.windows(2).all(|w| w[0].client_id < w[1].client_id));
    for ex in a.clients.iter().flat_map(|c| &c.examples) {
        assert_eq!(ex.input.len(), 144);
        assert!(ex.label < 10);
        assert!(ex.input.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn synthetic_task_is_learnable_centrally() {
    let fed = generate_synthetic(6, &desk_params()).unwrap();
    let arch = ModelArch::mlp_small(12, 12, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let w = arch.init_params(&mut rng);
    let trained = sgd_train(&w, &arch, &fed.pooled(), &TrainHyper::new(5, 20, 0.1), 1).unwrap();
    let acc = evaluate_main(&trained, &arch, &fed.holdout_main).unwrap();
    assert!(acc > 0.9, "holdout accuracy {acc}");
}

#[test]
fn leaf_round_trip_preserves_everything() {
    let fed = generate_synthetic(
        1,
        &SyntheticParams {
            num_clients: 7,
            samples_per_client: 13,
            class_count: 10,
            input_side: 5,
        },
    )
    .unwrap();
    let text = to_leaf_json(&fed);
    // the written holdout comes back as-is, so withhold nothing extra
    let opts = LeafOptions {
        holdout_fraction: 0.0,
        ..LeafOptions::default()
    };
    assert_eq!(parse_leaf_json(&text, &opts).unwrap(), fed);
    // the default fraction withholds floor(13 * 0.1) = 1 more per client
    let split = parse_leaf_json(&text, &LeafOptions::default()).unwrap();
    assert!(split.clients.iter().all(|c| c.num_samples() == 12));
    assert_eq!(split.holdout_main.len(), fed.holdout_main.len() + 7);
}

fn raw_leaf(users: &[(&str, usize)], pixel: f64) -> String {
    let mut data = serde_json::Map::new();
    for (u, n) in users {
        let x: Vec<Vec<f64>> = (0..*n).map(|i| vec![pixel * (i % 3) as f64 / 2.0; 4]).collect();
        let y: Vec<usize> = (0..*n).map(|i| i % 10).collect();
        data.insert(u.to_string(), serde_json::json!({ "x": x, "y": y }));
    }
    serde_json::json!({
        "users": users.iter().map(|(u, _)| u).collect::<Vec<_>>(),
        "num_samples": users.iter().map(|(_, n)| n).collect::<Vec<_>>(),
        "user_data": data,
    })
    .to_string()
}

#[test]
fn leaf_holdout_is_disjoint_and_sized() {
    let users = [("u_b", 20), ("u_a", 9), ("u_c", 31)];
    let opts = LeafOptions {
        holdout_fraction: 0.1,
        ..LeafOptions::default()
    };
    let fed = parse_leaf_json(&raw_leaf(&users, 1.0), &opts).unwrap();
    let ids: Vec<&str> = fed.clients.iter().map(|c| c.client_id.as_str()).collect();
    assert_eq!(ids, ["u_a", "u_b", "u_c"]);
    // floor(n * 0.1) from each user: 0 + 2 + 3
    assert_eq!(fed.holdout_main.len(), 5);
    let kept: usize = fed.clients.iter().map(|c| c.num_samples()).sum();
    assert_eq!(kept + fed.holdout_main.len(), 60);
    assert_eq!(fed.client("u_b").unwrap().num_samples(), 18);
    // the withheld examples are the tail of each user's list
    let b_labels: Vec<usize> = fed.client("u_b").unwrap().examples.iter().map(|e| e.label).collect();
    assert_eq!(b_labels, (0..18).map(|i| i % 10).collect::<Vec<_>>());
}

#[test]
fn leaf_byte_pixels_are_rescaled() {
    let fed = parse_leaf_json(&raw_leaf(&[("u", 6)], 255.0), &LeafOptions::default()).unwrap();
    let max = fed.pooled().iter().flat_map(|e| e.input.iter()).cloned().fold(0.0, f64::max);
    assert_eq!(max, 1.0);
}

#[test]
fn leaf_errors_name_the_user() {
    let text = r#"{"users":["ok","bad"],"num_samples":[1,1],
        "user_data":{"ok":{"x":[[0,0,0,0]],"y":[1]},"bad":{"x":[[0,0,0,0]],"y":[12]}}}"#;
    match parse_leaf_json(text, &LeafOptions::default()) {
        Err(FedError::Ingest { user, .. }) => assert_eq!(user, "bad"),
        other => panic!("expected an ingest error, got {other:?}"),
    }
    assert!(matches!(
        parse_leaf_json("{not json", &LeafOptions::default()),
        Err(FedError::Malformed { .. })
    ));
}

#[test]
fn backdoor_task_sizes_follow_target_count() {
    let fed = generate_synthetic(2, &desk_params()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let targets = choose_target_clients(&fed, 30, 7, &mut rng).unwrap();
    assert_eq!(targets.len(), 30);
    assert_eq!(targets.iter().collect::<HashSet<_>>().len(), 30);

    let per_client: Vec<usize> = targets
        .iter()
        .map(|id| fed.client(id).unwrap().examples.iter().filter(|e| e.label == 7).count())
        .collect();
    let eval: usize = per_client
        .iter()
        .map(|&c| ((c as f64 * 0.2).floor() as usize).clamp(1, c - 1))
        .sum();
    let total: usize = per_client.iter().sum();

    let spec = BackdoorSpec {
        target_client_ids: targets,
        source_label: 7,
        target_label: 1,
    };
    let task = build_backdoor_task(&fed, &spec, 0.2, 400, &mut rng).unwrap();
    assert_eq!(task.mal_eval.len(), eval);
    assert_eq!(task.mal_train.len() + task.mal_eval.len(), total);
    assert_eq!(task.attacker_clean.len(), 400);
    assert!(task.mal_train.iter().chain(&task.mal_eval).all(|e| e.label == 1));
    assert_eq!(task.training_set().len(), 400 + task.mal_train.len());
}

#[test]
fn thirty_targets_with_ten_sevens_give_about_three_hundred_images() {
    let fed = generate_synthetic(
        3,
        &SyntheticParams {
            num_clients: 60,
            samples_per_client: 100,
            class_count: 10,
            input_side: 8,
        },
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let spec = BackdoorSpec {
        target_client_ids: choose_target_clients(&fed, 30, 7, &mut rng).unwrap(),
        source_label: 7,
        target_label: 1,
    };
    let task = build_backdoor_task(&fed, &spec, 0.2, 100, &mut rng).unwrap();
    let images = task.mal_train.len() + task.mal_eval.len();
    assert!((250..=350).contains(&images), "{images} backdoor images");
}
