//! Misspecification handled as corruption: phased elimination wrapped with
//! the β schedule, next to the deterministic stub oracle.

use robustlb::env::{make_gap_misspecified, DeviationProfile};
use robustlb::model::{ActionSet, RewardVector};
use robustlb::reduction::{reduce_and_run, wrapped_regret_bound, PhasedEliminationOracle, ReductionPlan, SyntheticOracle};

fn main() -> robustlb::Result<()> {
    let actions = ActionSet::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-0.7, 0.7], vec![0.6, 0.6]])?;
    let theta = RewardVector::from_slice(&[0.8, 0.1], &actions)?;
    let horizon = 4096;
    let rho = 1e-3;
    let inst = make_gap_misspecified(&actions, &theta, rho, DeviationProfile::default())?;

    let mut oracle = PhasedEliminationOracle::for_actions(&actions, 3);
    let plan = ReductionPlan::new(&oracle, rho, 0.1, horizon)?;
    println!("β = {:.1}, ratio {:.3}, linear tolerance {}", plan.beta, plan.ratio, plan.linear_tolerance);
    let rec = reduce_and_run(&mut oracle, &mut inst.environment(1.0, horizon, 1)?, rho, 0.1)?;
    println!("phased elimination: misspecified regret {:.1}", inst.regret(&rec));

    // too much misspecification for this oracle
    match ReductionPlan::new(&oracle, 0.05, 0.1, horizon) {
        Err(e) => println!("ρ = 0.05: {e}"),
        Ok(p) => println!("ρ = 0.05: β = {}", p.beta),
    }

    let acts = ActionSet::from_rows(vec![vec![1.0], vec![0.0]])?;
    let two = make_gap_misspecified(&acts, &RewardVector::from_slice(&[0.8], &acts)?, 0.1, DeviationProfile::default())?;
    let mut stub = SyntheticOracle { c1: 1.0, c2: 1.0, gap: two.gap(1), rho: 0.1, good_arm: 0, bad_arm: 1 };
    let rec = reduce_and_run(&mut stub, &mut two.environment(0.0, 1000, 1)?, 0.1, 0.1)?;
    println!("stub: regret {:.2} ≤ {:.2}", two.regret(&rec), wrapped_regret_bound(1.0, 1000, 0.1));
    Ok(())
}
