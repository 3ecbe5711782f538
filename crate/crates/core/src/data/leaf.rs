//! LEAF-format JSON (`users`, `num_samples`, `user_data`).
//!
//! Files written here may carry an extra top-level `holdout` entry with the
//! same `{x, y}` layout as a user; readers that do not know the key ignore it.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClientDataset, FederatedDataset};
use crate::error::{FedError, Result};
use crate::nn::Example;

#[derive(Debug, Serialize, Deserialize)]
struct LeafFile {
    users: Vec<String>,
    num_samples: Vec<usize>,
    user_data: BTreeMap<String, LeafUser>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    holdout: Option<LeafUser>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LeafUser {
    x: Vec<Vec<f64>>,
    y: Vec<i64>,
}

/// Options for ingesting LEAF data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeafOptions {
    /// Fraction of each user's examples withheld into the global holdout,
    /// `floor(n · fraction)` per user, taken from the end of the user's list.
    pub holdout_fraction: f64,
    pub class_count: usize,
    /// `(height, width)`; inferred as a square when `None`.
    pub input_shape: Option<(usize, usize)>,
}

impl Default for LeafOptions {
    fn default() -> Self {
        LeafOptions {
            holdout_fraction: 0.1,
            class_count: 10,
            input_shape: None,
        }
    }
}

pub fn load_leaf_json(path: impl AsRef<Path>, opts: &LeafOptions) -> Result<FederatedDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| FedError::io(path, e))?;
    parse_leaf_json(&text, opts).map_err(|e| match e {
        FedError::Malformed { reason, .. } => FedError::Malformed {
            path: path.to_path_buf(),
            reason,
        },
        other => other,
    })
}

pub fn parse_leaf_json(text: &str, opts: &LeafOptions) -> Result<FederatedDataset> {
    let file: LeafFile = serde_json::from_str(text).map_err(|e| FedError::Malformed {
        path: "<string>".into(),
        reason: e.to_string(),
    })?;
    if !(0.0..1.0).contains(&opts.holdout_fraction) {
        return Err(FedError::Config(format!(
            "holdout_fraction must lie in [0, 1), got {}",
            opts.holdout_fraction
        )));
    }
    if file.users.len() != file.num_samples.len() {
        return Err(FedError::Malformed {
            path: "<string>".into(),
            reason: format!(
                "{} users but {} num_samples entries",
                file.users.len(),
                file.num_samples.len()
            ),
        });
    }

    let mut seen = HashSet::new();
    for u in &file.users {
        if !seen.insert(u.as_str()) {
            return Err(ingest(u, "duplicate user id"));
        }
    }

    let mut max_pixel: f64 = 0.0;
    let mut width = None;
    for (u, &declared) in file.users.iter().zip(&file.num_samples) {
        let data = file
            .user_data
            .get(u)
            .ok_or_else(|| ingest(u, "listed in users but missing from user_data"))?;
        if data.x.is_empty() {
            return Err(ingest(u, "user has zero samples"));
        }
        if data.x.len() != data.y.len() {
            return Err(ingest(u, &format!("{} inputs but {} labels", data.x.len(), data.y.len())));
        }
        if data.x.len() != declared {
            return Err(ingest(
                u,
                &format!("num_samples says {declared}, user_data holds {}", data.x.len()),
            ));
        }
        scan_user(u, data, &mut width, &mut max_pixel)?;
    }
    if let Some(h) = &file.holdout {
        scan_user("<holdout>", h, &mut width, &mut max_pixel)?;
    }
    let pixels = width.ok_or_else(|| FedError::Malformed {
        path: "<string>".into(),
        reason: "file holds no users".into(),
    })?;
    let input_shape = match opts.input_shape {
        Some((h, w)) if h * w == pixels => (h, w),
        Some((h, w)) => {
            return Err(FedError::Config(format!(
                "input shape {h}x{w} does not match {pixels} pixels per example"
            )))
        }
        None => {
            let side = (pixels as f64).sqrt().round() as usize;
            if side * side != pixels {
                return Err(FedError::Config(format!(
                    "{pixels} pixels is not a square image; pass an explicit input shape"
                )));
            }
            (side, side)
        }
    };
    let scale = if max_pixel > 1.5 { 1.0 / 255.0 } else { 1.0 };

    let convert = |user: &str, data: &LeafUser| -> Result<Vec<Example>> {
        data.x
            .iter()
            .zip(&data.y)
            .map(|(x, &y)| {
                if y < 0 || y as usize >= opts.class_count {
                    return Err(ingest(
                        user,
                        &format!("label {y} outside [0, {})", opts.class_count),
                    ));
                }
                let input = x.iter().map(|v| (v * scale).clamp(0.0, 1.0)).collect();
                Ok(Example::new(input, y as usize))
            })
            .collect()
    };

    let mut users: Vec<&String> = file.users.iter().collect();
    users.sort();
    let mut clients = Vec::with_capacity(users.len());
    let mut holdout_main = Vec::new();
    for u in users {
        let mut examples = convert(u, &file.user_data[u])?;
        let withheld = (examples.len() as f64 * opts.holdout_fraction).floor() as usize;
        let keep = examples.len() - withheld;
        holdout_main.extend(examples.drain(keep..));
        clients.push(ClientDataset {
            client_id: u.clone(),
            examples,
        });
    }
    if let Some(h) = &file.holdout {
        holdout_main.extend(convert("<holdout>", h)?);
    }

    let fed = FederatedDataset {
        clients,
        holdout_main,
        class_count: opts.class_count,
        input_shape,
    };
    fed.validate()?;
    Ok(fed)
}

fn scan_user(user: &str, data: &LeafUser, width: &mut Option<usize>, max_pixel: &mut f64) -> Result<()> {
    for x in &data.x {
        match *width {
            None => *width = Some(x.len()),
            Some(w) if w != x.len() => {
                return Err(ingest(
                    user,
                    &format!("example has {} pixels, expected {w}", x.len()),
                ))
            }
            _ => {}
        }
        for &v in x {
            if !v.is_finite() || v < 0.0 {
                return Err(ingest(user, &format!("invalid pixel value {v}")));
            }
            *max_pixel = max_pixel.max(v);
        }
    }
    Ok(())
}

fn ingest(user: &str, reason: &str) -> FedError {
    FedError::Ingest {
        user: user.to_string(),
        reason: reason.to_string(),
    }
}

fn to_user(examples: &[Example]) -> LeafUser {
    LeafUser {
        x: examples.iter().map(|e| e.input.clone()).collect(),
        y: examples.iter().map(|e| e.label as i64).collect(),
    }
}

/// Serialises `fed` to LEAF JSON; the holdout is written under `holdout`
/// when non-empty.
pub fn to_leaf_json(fed: &FederatedDataset) -> String {
    let file = LeafFile {
        users: fed.clients.iter().map(|c| c.client_id.clone()).collect(),
        num_samples: fed.clients.iter().map(|c| c.num_samples()).collect(),
        user_data: fed
            .clients
            .iter()
            .map(|c| (c.client_id.clone(), to_user(&c.examples)))
            .collect(),
        holdout: (!fed.holdout_main.is_empty()).then(|| to_user(&fed.holdout_main)),
    };
    serde_json::to_string(&file).expect("LEAF structures always serialise")
}

pub fn write_leaf_json(fed: &FederatedDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| FedError::io(parent, e))?;
    }
    std::fs::write(path, to_leaf_json(fed)).map_err(|e| FedError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_USERS: &str = r#"{
        "users": ["b", "a"],
        "num_samples": [5, 3],
        "user_data": {
            "a": {"x": [[0, 255, 0, 0], [0, 0, 0, 0], [1, 2, 3, 4]], "y": [0, 1, 2]},
            "b": {"x": [[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0],[9,9,9,9]], "y": [1,1,1,1,3]}
        }
    }"#;

    #[test]
    fn two_user_fixture_with_floor_holdout() {
        let fed = parse_leaf_json(TWO_USERS, &LeafOptions::default()).unwrap();
        assert_eq!(fed.clients.len(), 2);
        assert_eq!(fed.clients[0].client_id, "a");
        assert_eq!(fed.clients[0].num_samples(), 3);
        assert_eq!(fed.clients[1].num_samples(), 5);
        assert!(fed.holdout_main.is_empty());
        assert_eq!(fed.input_shape, (2, 2));
        // 255 scales to exactly 1.0
        assert_eq!(fed.clients[0].examples[0].input[1], 1.0);
    }

    #[test]
    fn holdout_takes_floor_of_fraction() {
        let opts = LeafOptions {
            holdout_fraction: 0.4,
            ..LeafOptions::default()
        };
        let fed = parse_leaf_json(TWO_USERS, &opts).unwrap();
        // floor(1.2) = 1 from "a", floor(2.0) = 2 from "b"
        assert_eq!(fed.clients[0].num_samples(), 2);
        assert_eq!(fed.clients[1].num_samples(), 3);
        assert_eq!(fed.holdout_main.len(), 3);
        assert_eq!(fed.holdout_main[0].label, 2);
    }

    #[test]
    fn real_valued_pixels_are_kept() {
        let text = r#"{"users":["u"],"num_samples":[1],
            "user_data":{"u":{"x":[[0.25,1.0,0.0,0.5]],"y":[4]}}}"#;
        let fed = parse_leaf_json(text, &LeafOptions::default()).unwrap();
        assert_eq!(fed.clients[0].examples[0].input, vec![0.25, 1.0, 0.0, 0.5]);
    }

    fn expect_ingest(text: &str, user: &str) {
        match parse_leaf_json(text, &LeafOptions::default()) {
            Err(FedError::Ingest { user: u, .. }) => assert_eq!(u, user),
            other => panic!("expected ingest error for {user}, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_user_rejected() {
        expect_ingest(
            r#"{"users":["u","u"],"num_samples":[1,1],
                "user_data":{"u":{"x":[[0,0,0,0]],"y":[0]}}}"#,
            "u",
        );
    }

    #[test]
    fn zero_sample_user_rejected() {
        expect_ingest(
            r#"{"users":["e"],"num_samples":[0],"user_data":{"e":{"x":[],"y":[]}}}"#,
            "e",
        );
    }

    #[test]
    fn out_of_range_label_rejected() {
        expect_ingest(
            r#"{"users":["z"],"num_samples":[1],"user_data":{"z":{"x":[[0,0,0,0]],"y":[10]}}}"#,
            "z",
        );
    }

    #[test]
    fn malformed_json_rejected() {
        assert!(matches!(
            parse_leaf_json("{not json", &LeafOptions::default()),
            Err(FedError::Malformed { .. })
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_leaf_json("/nonexistent/leaf.json", &LeafOptions::default()),
            Err(FedError::Io { .. })
        ));
    }
}
