//! Tracks the five corruption measures for a hand-written plan sequence.

use robustlb::model::{CorruptionLedger, CorruptionPlan};

fn main() -> robustlb::Result<()> {
    // two actions: a₀ is always corrupted by 1, a₁ never, and the learner plays a₁
    let plan = CorruptionPlan::new(vec![1.0, 0.0])?;
    let mut ledger = CorruptionLedger::new();
    for _ in 0..4 {
        ledger = ledger.record_round(&plan, 1)?;
    }
    let s = ledger.summary();
    println!("played the clean arm 4 times: C = {}, C∞ = {}", s.c, s.c_inf);

    let half = CorruptionPlan::new(vec![0.5, 0.5, 0.5])?;
    let mut ledger = CorruptionLedger::new();
    for t in 0..10 {
        ledger = ledger.record_round(&half, t % 3)?;
    }
    let s = ledger.summary();
    s.check_chain()?;
    s.write_csv(std::io::stdout())?;
    Ok(())
}
