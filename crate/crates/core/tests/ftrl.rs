mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use robustlb::design::{g_optimal, DEFAULT_TOL};
use robustlb::ftrl::{bonus, ftrl_step, logdet_run, BonusMatrix, FtrlParams, LogdetOptions, GAP_TOL, MIN_EIG};
use robustlb::linalg::{lambda_max, lambda_min, spd_inverse};

const DOM_TOL: f64 = -1e-8;

fn check_dominance(b: &DMatrix<f64>, sigma: &DMatrix<f64>) -> Result<(), TestCaseError> {
    let next = bonus(&BonusMatrix::from_matrix(b.clone()).unwrap(), sigma).unwrap();
    let inv = spd_inverse(sigma, MIN_EIG).unwrap();
    prop_assert!(lambda_min(&(next.matrix() - b)) >= DOM_TOL * (1.0 + lambda_max(b)));
    prop_assert!(lambda_min(&(next.matrix() - &inv)) >= DOM_TOL * (1.0 + lambda_max(&inv)));
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bonus_dominates_both_arguments(seed in any::<u64>(), d in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = common::random_psd(d, &mut rng);
        let sigma = common::random_pd(d, &mut rng);
        check_dominance(&b, &sigma)?;
    }
}

#[test]
fn ill_conditioned_bonus_regression() {
    // B has eigenvalues near {2e-6, 0.8, 2.9}: the B-side formula alone loses about 3 in λ_min
    let mut rng = ChaCha8Rng::seed_from_u64(10311855322612630637);
    let b = common::random_psd(3, &mut rng);
    let sigma = common::random_pd(3, &mut rng);
    assert!(lambda_min(&b) < 1e-5);
    check_dominance(&b, &sigma).unwrap();
}

#[test]
fn non_commuting_three_by_three() {
    let b = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.3, 0.0, 0.3, 0.5]);
    let sigma = DMatrix::from_row_slice(3, 3, &[0.8, -0.2, 0.1, -0.2, 0.6, 0.0, 0.1, 0.0, 1.5]);
    assert!((&b * &sigma - &sigma * &b).amax() > 0.1);
    let next = bonus(&BonusMatrix::from_matrix(b.clone()).unwrap(), &sigma).unwrap();
    let inv = sigma.clone().try_inverse().unwrap();
    // neither argument dominates the other, so B' is strictly new
    assert!(lambda_min(&(&b - &inv)) < 0.0 && lambda_min(&(&inv - &b)) < 0.0);
    assert!(lambda_min(&(next.matrix() - &b)) >= DOM_TOL);
    assert!(lambda_min(&(next.matrix() - &inv)) >= DOM_TOL);
    // minimality along the B-congruence: some direction is tight for each argument
    assert!(lambda_min(&(next.matrix() - &b)).abs() < 1e-9);
    assert!(lambda_min(&(next.matrix() - &inv)).abs() < 1e-9);
}

#[test]
fn solver_matches_grid_search() {
    for seed in 0..5 {
        let case = common::ftrl_grid_case(seed);
        let design = g_optimal(&case.actions, DEFAULT_TOL).unwrap();
        let mut explore = vec![0.0; 3];
        for &(i, w) in design.weights() {
            explore[i] = w;
        }
        let b = BonusMatrix::from_matrix(case.bonus.clone()).unwrap();
        let step = ftrl_step(&case.estimate_sum, &b, &case.params, &case.actions, &design, None).unwrap();
        let grid = common::ftrl_grid_max(&case, &explore);
        assert!((step.objective - grid).abs() <= 1e-3, "seed {seed}: {} vs {grid}", step.objective);
        assert!(step.objective >= grid - 1e-9);
        assert!(step.duality_gap <= GAP_TOL);
        assert!((step.lifted[(2, 2)] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn one_round_plays_the_uniform_cross() {
    let mut env = common::stochastic_env(common::cross(), &[0.3, 0.1], 1.0, 1, 0);
    let run = logdet_run(&mut env, 0.0, 0.1, LogdetOptions::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    for p in &run.first_distribution {
        assert!((p - 0.25).abs() < 1e-6);
    }
}

#[test]
fn run_invariants_hold() {
    let actions = ActionSet3::new();
    for seed in 0..3 {
        let mut env = common::stochastic_env(actions.0.clone(), &[0.4, -0.5], 1.0, 300, seed);
        let opts = LogdetOptions { audit: true };
        let run = logdet_run(&mut env, 10.0, 0.1, opts, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let audit = run.audit.as_ref().unwrap();
        let design = g_optimal(&actions.0, DEFAULT_TOL).unwrap();
        let floor = run.params.gamma * lambda_min(design.covariance());
        for inv in &audit.sigma_inverses {
            assert!(lambda_min(&(run.final_bonus.matrix() - inv)) >= DOM_TOL * (1.0 + lambda_max(inv)));
            // λ_min(Σ_t) = 1/λ_max(Σ_t⁻¹)
            assert!(1.0 / lambda_max(inv) >= floor - 1e-12);
        }
        for &(trace, logdet) in &audit.telescoping {
            assert!(trace <= logdet + 1e-6, "{trace} > {logdet}");
        }
        assert!(audit.feasibility_slack.iter().all(|&s| s >= -1e-12));
        assert!(audit.max_duality_gap <= GAP_TOL);
        assert_eq!(audit.sigma_inverses.len(), 300);
    }
}

struct ActionSet3(robustlb::model::ActionSet);

impl ActionSet3 {
    fn new() -> Self {
        Self(
            robustlb::model::ActionSet::from_rows(vec![vec![0.9, 0.1], vec![-0.2, 0.8], vec![-0.5, -0.6], vec![0.3, -0.3]])
                .unwrap(),
        )
    }
}

#[test]
fn stationary_regret_is_sublinear() {
    let t = 1 << 12;
    let ratios: Vec<f64> = (0..50)
        .map(|seed| {
            let mut env = common::stochastic_env(common::cross(), &[0.8, 0.3], 1.0, t, seed);
            let run = logdet_run(&mut env, 0.0, 0.1, LogdetOptions::default(), &mut ChaCha8Rng::seed_from_u64(1000 + seed))
                .unwrap();
            let half = run.record.rounds[t / 2 - 1].cum_regret;
            run.record.final_regret() / half
        })
        .collect();
    // Reg(T)/T < Reg(T/2)/(T/2)
    assert!(common::median(ratios) < 2.0);
}

#[test]
fn estimator_hand_solve() {
    let sigma = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
    let s = 0.5f64.sqrt();
    let hat = robustlb::ftrl::estimate_theta(&sigma, &DVector::from_vec(vec![s, s]), 1.0).unwrap();
    assert!((hat[0] - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
    assert!((hat[1] - s).abs() < 1e-15);
}

#[test]
fn params_formulas() {
    let p = FtrlParams::new(100.0, 1024, 2, 0.1).unwrap();
    let lt = 1024f64.ln();
    assert_eq!(p.alpha, (100.0 / (2.0 * lt).sqrt()).max(32.0));
    assert_eq!(p.eta, (lt.sqrt() / 1600.0).min((lt / 1024.0).sqrt()));
    assert_eq!(p.gamma, 2.0 / 32.0);
    assert_eq!(FtrlParams::new(0.0, 4, 3, 0.1).unwrap().gamma, 0.5);
}
