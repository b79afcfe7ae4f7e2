//! Nearly orthogonal packing instance used for the misspecification lower bound.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use robustlb::env::packing::{gram_extremes, DEFAULT_ATTEMPTS};
use robustlb::env::{make_packing, packing_bound};

fn main() -> robustlb::Result<()> {
    let (d, n, horizon) = (16, 40, 1000);
    let p = make_packing(d, n, horizon, 0.3, &mut ChaCha8Rng::seed_from_u64(1), DEFAULT_ATTEMPTS)?;
    let (off, diag) = gram_extremes(&p.actions);
    println!("bound {:.3}, max |⟨a_i, a_j⟩| {off:.3}, max |‖a‖² − 1| {diag:.1e}", packing_bound(d, horizon));
    println!("optimal arm {} with mean {:.2}; ρ = {:.3}", p.optimal, p.instance.f0[p.optimal], p.instance.rho);
    let nonzero = p.instance.f0.iter().filter(|f| f.abs() > 1e-12).count();
    println!("{nonzero} of {n} arms have a nonzero true mean");
    Ok(())
}
