mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use robustlb::elimination::{stoch_elim_run, StochElimParams};
use robustlb::reduction::{beta_schedule, reduce_and_run, PhasedEliminationOracle, ReductionPlan, H};
use robustlb::Error;

#[test]
fn stub_grid_respects_the_wrapped_bound() {
    for &rho in &[0.0, 0.05, 0.1] {
        for &t in &[100, 1000, 10_000] {
            let (regret, bound) = common::stub_regret(rho, t, 0.1);
            assert!(regret <= bound, "ρ = {rho}, T = {t}: {regret} > {bound}");
        }
    }
}

#[test]
fn beta_reference_value() {
    let b = beta_schedule(0.25, 1.0, 1.0, 100, 0.1, H).unwrap();
    // (3/2)(10/3 + √(200 log 10) + 1)
    let expect = 1.5 * (10.0 / 3.0 + (200.0 * 10f64.ln()).sqrt() + 1.0);
    assert!((b - expect).abs() < 1e-12);
    assert!((b - 38.69).abs() < 0.01);
}

#[test]
fn zero_rho_is_plain_elimination_with_z_beta() {
    let inst = common::two_arm_instance(0.0);
    let horizon = 2000;
    let mut oracle = PhasedEliminationOracle::for_actions(&inst.actions, 17);
    let plan = ReductionPlan::new(&oracle, 0.0, 0.1, horizon).unwrap();
    let wrapped = reduce_and_run(&mut oracle, &mut inst.environment(1.0, horizon, 4).unwrap(), 0.0, 0.1).unwrap();
    let mut env = inst.environment(1.0, horizon, 4).unwrap();
    let plain = stoch_elim_run(&mut env, &StochElimParams::new(plan.beta, 0.1), &mut ChaCha8Rng::seed_from_u64(17)).unwrap();
    assert_eq!(wrapped.rounds, plain.record.rounds);
}

#[test]
fn just_above_threshold_is_inapplicable() {
    let oracle = PhasedEliminationOracle { dim: 2, num_actions: 4, seed: 0 };
    let c2 = 8.0 * 2.0 * 1000f64.log2();
    // ρc₂/(1−ρ) = ½ at ρ = 1/(2c₂ + 1)
    let edge = 1.0 / (2.0 * c2 + 1.0);
    assert!(ReductionPlan::new(&oracle, edge * (1.0 - 1e-9), 0.1, 1000).is_ok());
    assert!(matches!(
        ReductionPlan::new(&oracle, edge * (1.0 + 1e-6), 0.1, 1000),
        Err(Error::ReductionInapplicable { .. })
    ));
}

proptest! {
    #[test]
    fn beta_grows_with_rho_and_horizon(
        c1 in 0.1f64..10.0, c2 in 0.1f64..10.0, a in 0.0f64..1.0, b in 0.0f64..1.0, t in 10usize..100_000,
    ) {
        let top = 1.0 / (2.0 * c2 + 1.0);
        let (lo, hi) = if a <= b { (a * top, b * top) } else { (b * top, a * top) };
        let small = beta_schedule(lo, c1, c2, t, 0.1, H).unwrap();
        let large = beta_schedule(hi, c1, c2, t, 0.1, H).unwrap();
        prop_assert!(large >= small);
        prop_assert!(beta_schedule(lo, c1, c2, 2 * t, 0.1, H).unwrap() >= small);
    }
}
