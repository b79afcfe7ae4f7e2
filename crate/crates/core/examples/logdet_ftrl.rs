//! Log-determinant FTRL with bonus matrices on the cross {±e₁, ±e₂}.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use robustlb::env::Environment;
use robustlb::ftrl::{logdet_run, LogdetOptions};
use robustlb::linalg::lambda_min;
use robustlb::model::{ActionSet, RewardVector};

fn main() -> robustlb::Result<()> {
    let actions = ActionSet::from_rows(vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]])?;
    let theta = RewardVector::from_slice(&[0.8, 0.3], &actions)?;
    let t = 4096;
    let mut env = Environment::stochastic(actions, theta, 1.0, t, 11)?;
    let run = logdet_run(&mut env, 0.0, 0.1, LogdetOptions { audit: true }, &mut ChaCha8Rng::seed_from_u64(12))?;
    let half = run.record.rounds[t / 2 - 1].cum_regret;
    println!("α = {:.1}, η = {:.4}, γ = {:.4}", run.params.alpha, run.params.eta, run.params.gamma);
    println!("first distribution {:?}", run.first_distribution);
    println!("Reg(T/2) = {half:.1}, Reg(T) = {:.1}", run.record.final_regret());
    let audit = run.audit.expect("audit requested");
    let dominance = audit
        .sigma_inverses
        .iter()
        .map(|inv| lambda_min(&(run.final_bonus.matrix() - inv)))
        .fold(f64::INFINITY, f64::min);
    println!("min λ_min(B_T − Σ_t⁻¹) = {dominance:.3e}, max duality gap {:.1e}", audit.max_duality_gap);
    Ok(())
}
