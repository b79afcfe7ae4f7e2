//! Phased elimination on a gap-dependent misspecified instance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use robustlb::elimination::{misspec_elim_run, MisspecElimParams};
use robustlb::env::{make_gap_misspecified, DeviationProfile};
use robustlb::model::{ActionSet, RewardVector};

fn main() -> robustlb::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rows: Vec<Vec<f64>> = (0..20).map(|_| UnitSphere.sample(&mut rng).to_vec()).collect();
    let actions = ActionSet::from_rows(rows)?;
    let theta = RewardVector::from_slice(&[0.6, -0.3, 0.5], &actions)?;
    let inst = make_gap_misspecified(&actions, &theta, 1.0 / 128.0, DeviationProfile::default())?;
    let mut env = inst.environment(1.0, 1 << 15, 3)?;
    let run = misspec_elim_run(&mut env, &MisspecElimParams::new(0.1))?;
    for p in &run.epochs {
        let gap = p.active.iter().map(|&i| inst.gap(i)).fold(0.0, f64::max);
        println!(
            "phase {}: {} active, max gap {gap:.4}, threshold {:.4}, pulls {}/{}",
            p.epoch,
            p.active.len(),
            p.threshold,
            p.played,
            p.scheduled
        );
    }
    println!("misspecified regret {:.1}", inst.regret(&run.record));
    Ok(())
}
