mod common;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use robustlb::cew::hull::Polytope;
use robustlb::cew::sampler::LogLinearSampler;
use robustlb::cew::{cew_params, cew_params_with, cew_run, clipped_moments, trigger_bound, DEFAULT_ALPHA_CONST};

#[test]
fn run_invariants() {
    for seed in 0..3 {
        let mut env = common::stochastic_env(common::cross(), &[0.8, 0.3], 1.0, 128, seed);
        let run = cew_run(&mut env, 0.0, 0.1, 1000, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        assert!((run.trigger_count() as f64) <= trigger_bound(&run.state.params));
        assert_eq!(run.state.triggers.first(), Some(&1));
        assert!(run.diagnostics[0].triggered);
        assert!(run.accumulator_audit <= 1e-12);
        assert!(run.diagnostics.iter().all(|d| d.lambda_min_b >= 1.0 - 1e-8));
        assert!(run.diagnostics.iter().all(|d| d.accept_rate >= 0.5));
        assert_eq!(run.record.horizon(), 128);
    }
}

#[test]
fn vacuous_clipping_keeps_every_draw() {
    let sampler = LogLinearSampler::new(Polytope::new(&common::cross()).unwrap());
    let mut params = cew_params(0.0, 1024, 2, 0.1).unwrap();
    params.beta = 1e9;
    let g = DVector::from_vec(vec![0.3, -0.1]);
    let draws = sampler.sample_many(&g, 5, 0, 2000).unwrap();
    let m = clipped_moments(&draws, &params).unwrap();
    assert_eq!(m.accept_rate, 1.0);
    // p̃ = p, so Σ̃ = γI + Σ
    let expect = DMatrix::identity(2, 2) * params.gamma + &m.sigma;
    assert!((m.sigma_tilde - expect).amax() < 1e-12);
}

#[test]
fn zero_accumulator_samples_uniformly() {
    // S = 0 gives the uniform law on conv(𝒜): the cross hull is a diamond with mean 0
    let sampler = LogLinearSampler::new(Polytope::new(&common::cross()).unwrap());
    let draws = sampler.sample_many(&DVector::zeros(2), 11, 0, 20_000).unwrap();
    let mean = draws.iter().fold(DVector::zeros(2), |a, x| a + x) / draws.len() as f64;
    assert!(mean.amax() < 0.03, "{mean}");
    // E[x²] = 1/6 for the uniform diamond |x| + |y| ≤ 1
    let second = draws.iter().map(|x| x[0] * x[0]).sum::<f64>() / draws.len() as f64;
    assert!((second - 1.0 / 6.0).abs() < 0.01, "{second}");
}

#[test]
fn eta_cap_holds() {
    for &(c, t, d) in &[(0.0, 100, 1), (50.0, 10_000, 2), (1e4, 1 << 10, 5)] {
        let p = cew_params_with(c, t, d, 0.1, DEFAULT_ALPHA_CONST, 10).unwrap();
        assert!(p.eta <= 1.0 / (160.0 * ((d as f64).powi(3) * t as f64).sqrt()));
    }
}

/// With the stated constants η ≈ 5e-6 at T = 2¹⁰, so η·‖S_T‖ stays near
/// 0.004 and the sampler never leaves the uniform law: regret grows
/// linearly and the ratio sits at 2.
#[test]
#[ignore = "fails at desk scale: Reg(T)/Reg(T/2) median ≈ 2.0 with the default constants"]
fn stationary_regret_is_sublinear() {
    let t = 1 << 10;
    let ratios: Vec<f64> = (0..20)
        .map(|seed| {
            let mut env = common::stochastic_env(common::cross(), &[0.8, 0.3], 1.0, t, seed);
            let run = cew_run(&mut env, 0.0, 0.1, 4000, &mut ChaCha8Rng::seed_from_u64(500 + seed)).unwrap();
            run.record.final_regret() / run.record.rounds[t / 2 - 1].cum_regret
        })
        .collect();
    assert!(common::median(ratios) < 2.0);
}
