//! Writes a synthetic federation as LEAF JSON and reads it back.
//!
//! cargo run --release --example leaf_roundtrip [path]

use fedsim::data::{generate_synthetic, load_leaf_json, write_leaf_json, LeafOptions, SyntheticParams};

fn main() -> fedsim::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("fedsim_leaf_demo.json"));
    let fed = generate_synthetic(
        9,
        &SyntheticParams {
            num_clients: 20,
            samples_per_client: 40,
            class_count: 10,
            input_side: 12,
        },
    )?;
    write_leaf_json(&fed, &path)?;
    let opts = LeafOptions {
        holdout_fraction: 0.0,
        ..LeafOptions::default()
    };
    let back = load_leaf_json(&path, &opts)?;
    println!(
        "{}: {} users, {} holdout examples, identical after reload: {}",
        path.display(),
        back.total_clients(),
        back.holdout_main.len(),
        back == fed
    );
    let resplit = load_leaf_json(&path, &LeafOptions::default())?;
    println!(
        "with the default 10% split each user keeps {} of 40",
        resplit.clients[0].num_samples()
    );
    Ok(())
}
