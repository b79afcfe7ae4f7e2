//! Randomized phased elimination against a weak adversary, for a few budgets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use robustlb::elimination::{stoch_elim_run, StochElimParams};
use robustlb::env::adversary::AdversarySpec;
use robustlb::env::{CorruptionProfile, Environment, RewardSchedule};
use robustlb::model::{ActionSet, RewardVector};

fn main() -> robustlb::Result<()> {
    let actions = ActionSet::from_rows((0..8).map(|k| {
        let a = std::f64::consts::TAU * k as f64 / 8.0;
        vec![a.cos(), a.sin()]
    }).collect())?;
    let theta = RewardVector::from_slice(&[0.9, 0.3], &actions)?;
    let best = actions.argmax(theta.theta());
    let d = actions.dim() as f64;
    for budget in [0.0, 64.0, 256.0] {
        let adv = AdversarySpec::Weak { budget, cap: 1.0, profile: CorruptionProfile::DemoteOptimal };
        let schedule = RewardSchedule::Fixed { theta: theta.clone() };
        let mut env = Environment::new(actions.clone(), schedule, adv.build(), 1.0, 1 << 14, 5)?;
        let params = StochElimParams::new(d.sqrt() * budget, 0.1);
        let run = stoch_elim_run(&mut env, &params, &mut ChaCha8Rng::seed_from_u64(9))?;
        let sizes: Vec<usize> = run.epochs.iter().map(|e| e.active.len()).collect();
        println!(
            "C∞ = {budget:>5}: regret {:>8.1}, active sizes per epoch {sizes:?}, a* kept {}",
            run.record.final_regret(),
            run.retained(best)
        );
    }
    Ok(())
}
