//! Clipped continuous exponential weights on a triangle, with per-round
//! diagnostics written as CSV.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use robustlb::cew::{cew_run, trigger_bound, CewDiagnostics};
use robustlb::env::Environment;
use robustlb::model::{ActionSet, RewardVector};

fn main() -> robustlb::Result<()> {
    let actions = ActionSet::from_rows(vec![vec![1.0, 0.0], vec![-0.5, 0.8], vec![-0.5, -0.8]])?;
    let theta = RewardVector::from_slice(&[0.6, 0.2], &actions)?;
    let mut env = Environment::stochastic(actions, theta, 1.0, 256, 4)?;
    let run = cew_run(&mut env, 0.0, 0.1, 2000, &mut ChaCha8Rng::seed_from_u64(8))?;
    println!(
        "regret {:.1}; triggers {:?} (bound {:.1}); accumulator audit {:.1e}",
        run.record.final_regret(),
        run.state.triggers,
        trigger_bound(&run.state.params),
        run.accumulator_audit
    );
    CewDiagnostics::write_csv(&run.diagnostics[..5], std::io::stdout())?;
    Ok(())
}
