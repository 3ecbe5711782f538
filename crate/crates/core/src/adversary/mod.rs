//! Who attacks when, and what they send.

mod craft;
mod schedule;

pub use craft::{
    compute_boost_factor, craft_norm_bounded, craft_unconstrained, split_among_attackers, AttackVariant,
    AttackerConfig,
};
pub use schedule::{period_for_epsilon, schedule_adversaries, AttackSchedule};
