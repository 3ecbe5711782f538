//! Hierarchical seed derivation.
//!
//! Every random draw in a run is taken from a generator whose seed is a hash
//! of the root seed and a path of labels (round index, client id, purpose).
//! Results therefore do not depend on which thread executes which client.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// The generator used throughout the crate. ChaCha output is stable across
/// platforms and crate versions, unlike `StdRng`.
pub type SimRng = ChaCha8Rng;

/// One component of a derivation path.
#[derive(Debug, Clone, Copy)]
pub enum SeedPart<'a> {
    Tag(&'a str),
    Index(u64),
}

impl<'a> From<&'a str> for SeedPart<'a> {
    fn from(s: &'a str) -> Self {
        SeedPart::Tag(s)
    }
}

impl From<u64> for SeedPart<'_> {
    fn from(i: u64) -> Self {
        SeedPart::Index(i)
    }
}

impl From<usize> for SeedPart<'_> {
    fn from(i: usize) -> Self {
        SeedPart::Index(i as u64)
    }
}

/// Derives a child seed from `root` and a label path.
pub fn derive(root: u64, path: &[SeedPart<'_>]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    for part in path {
        match part {
            SeedPart::Tag(s) => {
                hasher.update([0u8]);
                hasher.update((s.len() as u64).to_le_bytes());
                hasher.update(s.as_bytes());
            }
            SeedPart::Index(i) => {
                hasher.update([1u8]);
                hasher.update(i.to_le_bytes());
            }
        }
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Seed for everything the server does in round `t`.
pub fn round_seed(root: u64, t: usize) -> u64 {
    derive(root, &[SeedPart::Tag("round"), SeedPart::Index(t as u64)])
}

/// Seed for client `client_id`'s local training in round `t`.
pub fn client_seed(root: u64, t: usize, client_id: &str) -> u64 {
    derive(
        root,
        &[
            SeedPart::Tag("round"),
            SeedPart::Index(t as u64),
            SeedPart::Tag("client"),
            SeedPart::Tag(client_id),
        ],
    )
}

pub fn rng_from(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
