use rayon::prelude::*;

use super::{aggregate, client_update, select_clients, ClientUpdate, FedConfig, ServerState};
use crate::adversary::{
    compute_boost_factor, craft_norm_bounded, craft_unconstrained, schedule_adversaries, split_among_attackers,
    AttackSchedule, AttackVariant, AttackerConfig,
};
use crate::data::{BackdoorTask, FederatedDataset};
use crate::defense::DefenseConfig;
use crate::error::{FedError, Result};
use crate::experiment::{evaluate_backdoor, evaluate_main, percentile, RoundReport};
use crate::nn::l2_norm;
use crate::seed::{client_seed, derive, rng_from, SeedPart};

/// Everything a round needs besides the evolving server state.
#[derive(Debug, Clone, Copy)]
pub struct RoundContext<'a> {
    pub data: &'a FederatedDataset,
    pub fed: &'a FedConfig,
    pub schedule: &'a AttackSchedule,
    pub attacker: Option<&'a AttackerConfig>,
    pub defense: &'a DefenseConfig,
    /// Evaluation target for backdoor accuracy, measured even in clean runs.
    pub backdoor: &'a BackdoorTask,
    pub root_seed: u64,
    /// Evaluate every this many rounds (and on the last round); skipped
    /// rounds repeat the previous accuracies.
    pub eval_every: usize,
    pub total_rounds: Option<usize>,
}

fn round_tag(root: u64, t: usize, purpose: &str) -> u64 {
    derive(
        root,
        &[SeedPart::Tag("round"), SeedPart::Index(t as u64), SeedPart::Tag(purpose)],
    )
}

/// One round: select, replace adversarial slots, train the rest, aggregate
/// under the defense, evaluate. `history` holds the reports of all earlier
/// rounds and feeds the cumulative backdoor mean.
pub fn run_round(
    ctx: &RoundContext<'_>,
    state: &ServerState,
    history: &[RoundReport],
) -> Result<(ServerState, RoundReport)> {
    let t = state.round_index;
    let fed = ctx.fed;
    let k = ctx.data.total_clients();
    if fed.total_clients != k {
        return Err(FedError::Config(format!(
            "config says {} clients, dataset holds {k}",
            fed.total_clients
        )));
    }
    let selected = select_clients(&mut rng_from(round_tag(ctx.root_seed, t, "select")), k, fed.clients_per_round)?;
    let attacker = ctx.attacker.filter(|_| ctx.schedule.is_active());
    let adv_slots = match attacker {
        Some(_) => schedule_adversaries(t, &selected, ctx.schedule),
        None => Vec::new(),
    };

    let benign_slots: Vec<usize> = (0..selected.len()).filter(|s| !adv_slots.contains(s)).collect();
    let sum_benign: usize = benign_slots
        .iter()
        .map(|&s| ctx.data.clients[selected[s]].num_samples())
        .sum();

    let benign = || -> Result<Vec<ClientUpdate>> {
        benign_slots
            .par_iter()
            .map(|&s| {
                let client = &ctx.data.clients[selected[s]];
                client_update(
                    &state.params,
                    &state.arch,
                    client,
                    &fed.client_hyper,
                    client_seed(ctx.root_seed, t, &client.client_id),
                )
            })
            .collect()
    };
    let malicious = || -> Result<Vec<ClientUpdate>> {
        let Some(cfg) = attacker else { return Ok(Vec::new()) };
        if adv_slots.is_empty() {
            return Ok(Vec::new());
        }
        let count = adv_slots.len();
        let sum_n = cfg
            .estimated_sum_n
            .unwrap_or(sum_benign + count * cfg.reported_samples);
        let beta = compute_boost_factor(sum_n, fed.server_lr, cfg.reported_samples);
        let seed = round_tag(ctx.root_seed, t, "attack");
        let total = match cfg.variant {
            AttackVariant::Unconstrained => craft_unconstrained(&state.params, &state.arch, cfg, beta, seed)?,
            AttackVariant::NormBounded { norm_bound, pgd_rounds } => {
                craft_norm_bounded(&state.params, &state.arch, cfg, norm_bound, pgd_rounds, beta, seed)?
            }
        };
        Ok(split_among_attackers(&total, count)
            .into_iter()
            .zip(&adv_slots)
            .map(|(delta, &s)| ClientUpdate {
                client_id: ctx.data.clients[selected[s]].client_id.clone(),
                delta,
                num_samples: cfg.reported_samples,
                is_malicious: true,
            })
            .collect())
    };
    let (benign, malicious) = rayon::join(benign, malicious);
    let (benign, malicious) = (benign?, malicious?);

    let benign_norms: Vec<f64> = benign.iter().map(|u| l2_norm(&u.delta)).collect();
    let attacker_norm = malicious.first().map(|u| l2_norm(&u.delta));

    // canonical order: by slot within the sorted selection
    let mut updates: Vec<(usize, ClientUpdate)> = benign_slots
        .iter()
        .copied()
        .zip(benign)
        .chain(adv_slots.iter().copied().zip(malicious))
        .collect();
    updates.sort_by_key(|(slot, _)| *slot);
    let updates: Vec<ClientUpdate> = updates.into_iter().map(|(_, u)| u).collect();

    let next = aggregate(
        state,
        &updates,
        fed,
        ctx.defense,
        &mut rng_from(round_tag(ctx.root_seed, t, "noise")),
    )?;

    let is_last = ctx.total_rounds.is_some_and(|n| t + 1 == n);
    let prev = history.last();
    let (main_accuracy, backdoor_accuracy) = match prev {
        Some(p) if ctx.eval_every > 1 && !t.is_multiple_of(ctx.eval_every) && !is_last => {
            (p.main_accuracy, p.backdoor_accuracy)
        }
        _ => (
            evaluate_main(&next.params, &next.arch, &ctx.data.holdout_main)?,
            evaluate_backdoor(&next.params, &next.arch, &ctx.backdoor.mal_eval, ctx.backdoor.target_label)?,
        ),
    };
    let backdoor_sum: f64 = history.iter().map(|r| r.backdoor_accuracy).sum::<f64>() + backdoor_accuracy;

    let report = RoundReport {
        round: t,
        main_accuracy,
        backdoor_accuracy,
        cumulative_mean_backdoor: backdoor_sum / (history.len() + 1) as f64,
        adversary_count: adv_slots.len(),
        benign_norm_p50: percentile(&benign_norms, 50.0),
        benign_norm_p90: percentile(&benign_norms, 90.0),
        attacker_norm,
    };
    Ok((next, report))
}
