mod common;

use proptest::prelude::*;
use robustlb::env::adversary::AdversarySpec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use robustlb::env::packing::gram_extremes;
use robustlb::env::{make_gap_misspecified, make_packing, packing, BanditEnv, DeviationProfile, DeviationSign, Environment, RewardSchedule};
use robustlb::model::{regret, ActionSet, CorruptionLedger, CorruptionPlan, RewardVector};

fn plan_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..=1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ledger_chain_holds(rounds in prop::collection::vec((plan_strategy(4), 0usize..4), 1..60)) {
        let mut ledger = CorruptionLedger::new();
        for (eps, chosen) in &rounds {
            ledger = ledger.record_round(&CorruptionPlan::new(eps.clone()).unwrap(), *chosen).unwrap();
        }
        let s = ledger.summary();
        prop_assert!(s.check_chain().is_ok(), "{:?}", s);
        prop_assert_eq!(s.t, rounds.len());
    }

    #[test]
    fn ledger_is_monotone(rounds in prop::collection::vec((plan_strategy(3), 0usize..3), 1..40)) {
        let mut ledger = CorruptionLedger::new();
        for (eps, chosen) in &rounds {
            let next = ledger.record_round(&CorruptionPlan::new(eps.clone()).unwrap(), *chosen).unwrap();
            let (a, b) = (ledger.summary(), next.summary());
            prop_assert!(b.c >= a.c && b.c_inf >= a.c_inf && b.c_ms >= a.c_ms);
            ledger = next;
        }
    }

    /// Regret against the best fixed comparator never beats regret against
    /// the per-round optimum.
    #[test]
    fn fixed_comparator_is_weaker(
        plays in prop::collection::vec(0usize..3, 1..30),
        thetas in prop::collection::vec(prop::collection::vec(-0.5f64..0.5, 2), 1..4),
    ) {
        let actions = ActionSet::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-0.6, 0.6]]).unwrap();
        let thetas: Vec<RewardVector> = thetas.iter().map(|t| RewardVector::from_slice(t, &actions).unwrap()).collect();
        let schedule = RewardSchedule::Cycle { thetas: thetas.clone() };
        let mut env = Environment::new(actions.clone(), schedule, AdversarySpec::None.build(), 0.0, plays.len(), 1).unwrap();
        for &a in &plays {
            env.pull(a).unwrap();
        }
        let record = env.record();
        let per_t: Vec<RewardVector> = (0..plays.len()).map(|t| thetas[t % thetas.len()].clone()).collect();
        let fixed = regret(&record, &per_t, &actions).unwrap();
        let per_round: f64 = record.rounds.iter().map(|r| {
            let th = thetas[(r.t - 1) % thetas.len()].theta();
            let best = actions.iter().map(|a| a.dot(th)).fold(f64::NEG_INFINITY, f64::max);
            best - r.mean_reward
        }).sum();
        prop_assert!(fixed <= per_round + 1e-9);
        prop_assert!((record.final_regret() - fixed).abs() < 1e-9);
    }
}

#[test]
fn strong_plan_example_mean() {
    // a = (0.5, 0), θ = (1, 0): aᵀθ = 0.5, planned ε = −0.3
    let actions = ActionSet::from_rows(vec![vec![0.5, 0.0], vec![0.0, 1.0]]).unwrap();
    let theta = RewardVector::from_slice(&[1.0, 0.0], &actions).unwrap();
    let adv = AdversarySpec::StrongAdaptive {
        budget: 1e9,
        cap: 0.3,
        profile: robustlb::env::CorruptionProfile::SignFlip,
    };
    let mut env = Environment::new(actions, RewardSchedule::Fixed { theta }, adv.build(), 0.0, 1, 0).unwrap();
    let r = env.pull(0).unwrap();
    assert!((r - 0.2).abs() < 1e-12);
}

#[test]
fn aa_and_cm_trajectories_match_bitwise() {
    for seed in 0..10 {
        let (aa, cm) = common::aa_cm_pair(seed);
        assert_eq!(aa.rounds.len(), cm.rounds.len());
        for (x, y) in aa.rounds.iter().zip(&cm.rounds) {
            assert_eq!(x.action, y.action);
            assert_eq!(x.reward.to_bits(), y.reward.to_bits());
        }
        assert_eq!(aa.ledger.c_strong.to_bits(), cm.ledger.c_strong.to_bits());
        assert!(cm.ledger.c_weak >= aa.ledger.c_weak);
    }
}

#[test]
fn misspec_three_action_example() {
    // linear gaps {0, 0.4·(1 − 0.25), 1·(1 − 0.25)} give true gaps {0, 0.4, 1.0}
    let actions = ActionSet::from_rows(vec![vec![1.0, 0.0], vec![1.0 - 0.4 * 0.75, 0.0], vec![1.0 - 1.0 * 0.75, 0.0]]).unwrap();
    let theta = RewardVector::from_slice(&[1.0, 0.0], &actions).unwrap();
    let inst = make_gap_misspecified(&actions, &theta, 0.25, DeviationProfile::MaxAdverse { sign: DeviationSign::Negative }).unwrap();
    let expect = [0.0, 0.1, 0.25];
    for (i, e) in expect.iter().enumerate() {
        assert!((inst.deviations[i].abs() - e).abs() < 1e-12, "{i}: {}", inst.deviations[i]);
    }
    let gaps = inst.gaps();
    assert!((gaps[1] - 0.4).abs() < 1e-12 && (gaps[2] - 1.0).abs() < 1e-12);
    assert_eq!(inst.deviations[inst.optimal_action()], 0.0);
}

#[test]
fn packing_d16_gram_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let p = make_packing(16, 40, 1000, 0.5, &mut rng, packing::DEFAULT_ATTEMPTS).unwrap();
    let bound = (8.0 * 3000f64.ln() / 15.0).sqrt();
    assert!((bound - 2.066).abs() < 1e-3);
    // independent Gram evaluation
    let v = p.actions.as_slice();
    for i in 0..v.len() {
        assert!((v[i].norm_squared() - 1.0).abs() <= 1e-9);
        for j in (i + 1)..v.len() {
            let g: f64 = v[i].iter().zip(v[j].iter()).map(|(a, b)| a * b).sum();
            assert!(g.abs() <= bound.min(1.0));
        }
    }
    let (off, diag) = gram_extremes(&p.actions);
    assert!(off <= 1.0 && diag <= 1e-9);
}
