//! Deterministic federated-learning simulator for backdoor model-update
//! poisoning and the norm-clipping / Gaussian-noise defenses against it.
//!
//! The pieces, bottom up:
//!
//! - [`nn`]: two fixed architectures (a small CNN and an MLP) with
//!   hand-written backprop, plain SGD, and ℓ₂ utilities over flat
//!   [`ParamVector`]s.
//! - [`data`]: LEAF JSON ingestion, a seeded non-iid synthetic generator,
//!   and construction of the backdoor task (relabelled examples from chosen
//!   target clients).
//! - [`federation`]: client selection, local training and sample-weighted
//!   aggregation with a server learning rate.
//! - [`adversary`]: fixed-frequency and random-sampling attacker schedules,
//!   boosted model-replacement updates, and the norm-bounded variant.
//! - [`defense`]: per-update clipping and Gaussian noise on the average.
//! - [`experiment`]: TOML configs, the round loop driver, and CSV / SVG
//!   outputs.
//!
//! Every random draw comes from a seed derived from the experiment's root
//! seed, the round index and the client id, so runs are bit-reproducible
//! regardless of thread count.

pub mod adversary;
pub mod data;
pub mod defense;
pub mod error;
pub mod experiment;
pub mod federation;
pub mod nn;
pub mod seed;

pub use error::{FedError, Result};
pub use nn::{ModelArch, ParamVector, TrainHyper};
