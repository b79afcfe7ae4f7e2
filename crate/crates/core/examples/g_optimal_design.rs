//! G-optimal design on a small set and on a random cloud.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitBall};
use robustlb::design::{g_optimal, support_bound, DEFAULT_TOL};
use robustlb::model::ActionSet;

fn main() -> robustlb::Result<()> {
    let s = 0.5f64.sqrt();
    let small = ActionSet::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![s, s]])?;
    let design = g_optimal(&small, DEFAULT_TOL)?;
    println!("weights {:?}, max leverage {:.4}", design.weights(), design.leverage_max());

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cloud: Vec<Vec<f64>> = (0..500).map(|_| UnitBall.sample(&mut rng).to_vec()).collect();
    let cloud = ActionSet::from_rows(cloud)?;
    let design = g_optimal(&cloud, DEFAULT_TOL)?;
    println!(
        "500 points in the 3-ball: support {} (bound {}), max leverage {:.4}, rank {}",
        design.support_size(),
        support_bound(3),
        design.leverage_max(),
        design.rank()
    );
    Ok(())
}
