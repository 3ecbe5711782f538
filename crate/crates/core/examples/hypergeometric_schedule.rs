//! Random-sampling adversaries: 113 of 3383 clients compromised, 30 selected
//! per round. The per-round adversary count is hypergeometric.
//!
//! cargo run --release --example hypergeometric_schedule

use fedsim::adversary::{period_for_epsilon, schedule_adversaries, AttackSchedule};
use fedsim::federation::select_clients;

fn main() -> fedsim::Result<()> {
    let (k, a, m, rounds) = (3383usize, 113usize, 30usize, 20_000usize);
    let mut rng = fedsim::seed::rng_from(5);
    let schedule = AttackSchedule::random_sampling_count(a, k, &mut rng)?;
    let mut counts = vec![0usize; m + 1];
    for t in 0..rounds {
        let selected = select_clients(&mut rng, k, m)?;
        counts[schedule_adversaries(t, &selected, &schedule).len()] += 1;
    }
    println!("adversaries  observed  exact");
    let mut exact = (0..m).map(|i| (k - a - i) as f64 / (k - i) as f64).product::<f64>();
    for (c, &n) in counts.iter().enumerate().take(6) {
        println!("{c:>11}  {:>8.4}  {exact:.4}", n as f64 / rounds as f64);
        // P(c+1) / P(c) for the hypergeometric
        exact *= ((a - c) * (m - c)) as f64 / ((c + 1) * (k - a - m + c + 1)) as f64;
    }
    let mean = counts.iter().enumerate().map(|(c, &n)| (c * n) as f64).sum::<f64>() / rounds as f64;
    println!("mean {mean:.4}, expected {:.4}", (m * a) as f64 / k as f64);
    for eps in [0.033, 0.011, 0.0067, 0.0033] {
        println!("fixed frequency at eps {eps}: period {}", period_for_epsilon(eps, m)?);
    }
    Ok(())
}
