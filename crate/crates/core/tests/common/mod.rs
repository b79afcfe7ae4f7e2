#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use robustlb::env::Environment;
use robustlb::model::{ActionSet, RewardVector};

/// `G Gᵀ / d` for a Gaussian `G`, full rank almost surely.
pub fn random_pd<R: Rng>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    &g * g.transpose() / d as f64 + DMatrix::identity(d, d) * 1e-3
}

/// PSD with a random rank in `0..=d`.
pub fn random_psd<R: Rng>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let k = rng.gen_range(0..=d);
    let g = DMatrix::from_fn(d, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    &g * g.transpose()
}

pub fn unit<R: Rng>(d: usize, rng: &mut R) -> DVector<f64> {
    let v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let n = v.norm();
    v / n
}

pub fn sphere_actions<R: Rng>(n: usize, d: usize, rng: &mut R) -> ActionSet {
    ActionSet::new((0..n).map(|_| unit(d, rng)).collect()).unwrap()
}

/// Random vectors inside the unit ball.
pub fn ball_actions<R: Rng>(n: usize, d: usize, rng: &mut R) -> ActionSet {
    ActionSet::new((0..n).map(|_| unit(d, rng) * rng.gen_range(0.05..1.0)).collect()).unwrap()
}

pub fn cross() -> ActionSet {
    ActionSet::from_rows(vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]]).unwrap()
}

pub fn stochastic_env(actions: ActionSet, theta: &[f64], noise: f64, horizon: usize, seed: u64) -> Environment {
    let theta = RewardVector::from_slice(theta, &actions).unwrap();
    Environment::stochastic(actions, theta, noise, horizon, seed).unwrap()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// A fixed `d = 2`, three-action FTRL instance for the grid-search oracle.
pub struct FtrlGridCase {
    pub actions: ActionSet,
    pub estimate_sum: DVector<f64>,
    pub bonus: DMatrix<f64>,
    pub params: robustlb::ftrl::FtrlParams,
}

pub fn ftrl_grid_case(seed: u64) -> FtrlGridCase {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let actions = loop {
        let acts = ball_actions(3, 2, &mut rng);
        let v = acts.as_slice();
        let area = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
        if area.abs() > 0.1 {
            break acts;
        }
    };
    let estimate_sum = DVector::from_fn(2, |_, _| 5.0 * rng.sample::<f64, _>(StandardNormal));
    let bonus = random_psd(2, &mut rng) * 0.2;
    let c_inf = rng.gen_range(0.0..20.0);
    let params = robustlb::ftrl::FtrlParams::new(c_inf, 64, 2, 0.1).unwrap();
    FtrlGridCase {
        actions,
        estimate_sum,
        bonus,
        params,
    }
}

/// `η Σ p(a)(α aᵀBa + aᵀS) + log det Ĉov(p)` with `p = (1−γ)p' + γρ`,
/// maximized over a step-1e-3 grid of the 2-simplex.
pub fn ftrl_grid_max(case: &FtrlGridCase, explore: &[f64]) -> f64 {
    let a = case.actions.as_slice();
    let c: Vec<f64> = a
        .iter()
        .map(|x| case.params.alpha * x.dot(&(&case.bonus * x)) + x.dot(&case.estimate_sum))
        .collect();
    let g = case.params.gamma;
    let n = 1000;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=n {
        for j in 0..=(n - i) {
            let free = [i as f64 / n as f64, j as f64 / n as f64, (n - i - j) as f64 / n as f64];
            let p: Vec<f64> = (0..3).map(|k| (1.0 - g) * free[k] + g * explore[k]).collect();
            let mut h = DMatrix::zeros(3, 3);
            for k in 0..3 {
                let z = DVector::from_vec(vec![a[k][0], a[k][1], 1.0]);
                h += &z * z.transpose() * p[k];
            }
            let det = h.determinant();
            if det > 0.0 {
                let lin: f64 = p.iter().zip(&c).map(|(x, y)| x * y).sum();
                best = best.max(case.params.eta * lin + det.ln());
            }
        }
    }
    best
}

/// Two-arm misspecified instance: linear gap 0.8, max-adverse deviation.
pub fn two_arm_instance(rho: f64) -> robustlb::env::MisspecifiedInstance {
    let acts = ActionSet::from_rows(vec![vec![1.0], vec![0.0]]).unwrap();
    let theta = RewardVector::from_slice(&[0.8], &acts).unwrap();
    robustlb::env::make_gap_misspecified(&acts, &theta, rho, robustlb::env::DeviationProfile::default()).unwrap()
}

/// `(wrapped regret, bound)` for the synthetic stub with `𝒞₁ = 𝒞₂ = 1`.
pub fn stub_regret(rho: f64, horizon: usize, delta: f64) -> (f64, f64) {
    use robustlb::reduction::{reduce_and_run, wrapped_regret_bound, SyntheticOracle};
    let inst = two_arm_instance(rho);
    let mut env = inst.environment(0.0, horizon, 1).unwrap();
    let mut stub = SyntheticOracle {
        c1: 1.0,
        c2: 1.0,
        gap: inst.gap(1),
        rho,
        good_arm: 0,
        bad_arm: 1,
    };
    let rec = reduce_and_run(&mut stub, &mut env, rho, delta).unwrap();
    (inst.regret(&rec), wrapped_regret_bound(1.0, horizon, delta))
}

/// The same strong adversary run in AA form and through its CM adapter,
/// against phased elimination with identical seeds.
pub fn aa_cm_pair(seed: u64) -> (robustlb::model::RunRecord, robustlb::model::RunRecord) {
    use rand::SeedableRng;
    use robustlb::elimination::{stoch_elim_run, StochElimParams};
    use robustlb::env::adversary::AdversarySpec;
    use robustlb::env::{CorruptionProfile, RewardSchedule};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let actions = sphere_actions(6, 3, &mut rng);
    let theta = RewardVector::new(unit(3, &mut rng) * 0.7, &actions).unwrap();
    let run = |adv: AdversarySpec| {
        let schedule = RewardSchedule::Fixed { theta: theta.clone() };
        let mut env = Environment::new(actions.clone(), schedule, adv.build(), 0.5, 600, seed).unwrap();
        let mut learner = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xa5a5);
        stoch_elim_run(&mut env, &StochElimParams::new(60.0, 0.1), &mut learner).unwrap().record
    };
    let profile = CorruptionProfile::DemoteOptimal;
    (
        run(AdversarySpec::StrongAdaptive { budget: 40.0, cap: 0.8, profile }),
        run(AdversarySpec::Strong { budget: 40.0, cap: 0.8, profile }),
    )
}
