//! Black-box reduction from gap-dependent misspecification to corruption.
//!
//! An oracle with regret `𝒞₁√T + 𝒞₂·C'` under corruption budget `C'` is
//! run with `C' = β`, where
//!
//! ```text
//! β = (1 − ρ𝒞₂/(1−ρ))⁻¹ · (ρ/(1−ρ)·𝒞₁√T + H√(2T log 1/δ) + H)
//! ```
//!
//! and `𝒞₁, 𝒞₂` are evaluated at confidence `δ/T`. Requires
//! `ρ𝒞₂/(1−ρ) ≤ 1/2`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::elimination::{self, StochElimParams};
use crate::env::BanditEnv;
use crate::error::{Error, Result};
use crate::model::{ActionSet, RunRecord};

/// Reward range after rescaling to `[0, 1]`.
pub const H: f64 = 1.0;

/// A corruption-robust algorithm used as a black box.
pub trait CorruptionOracle {
    fn name(&self) -> &str;
    /// `𝒞₁(δ, T)`.
    fn c1(&self, delta: f64, horizon: usize) -> f64;
    /// `𝒞₂(δ, T)`.
    fn c2(&self, delta: f64, horizon: usize) -> f64;
    /// Runs for `env.horizon()` rounds believing the corruption is at most `c_prime`.
    fn run(&mut self, env: &mut dyn BanditEnv, c_prime: f64, delta: f64) -> Result<RunRecord>;
}

/// `ρ𝒞₂/(1−ρ)`, which must not exceed ½.
pub fn reduction_ratio(rho: f64, c2: f64) -> f64 {
    rho * c2 / (1.0 - rho)
}

/// The linear-bandit form of the tolerance, `ρ ≤ min{½, 1/(4𝒞₂)}`.
pub fn linear_tolerance_holds(rho: f64, c2: f64) -> bool {
    rho <= (0.5f64).min(1.0 / (4.0 * c2))
}

pub fn beta_schedule(rho: f64, c1: f64, c2: f64, horizon: usize, delta: f64, h: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::Domain(format!("ρ = {rho} must lie in [0, 1)")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("δ = {delta} must lie in (0, 1)")));
    }
    if !(c1 > 0.0 && c2 > 0.0) {
        return Err(Error::Domain("oracle coefficients must be positive".into()));
    }
    let ratio = reduction_ratio(rho, c2);
    if ratio > 0.5 {
        return Err(Error::ReductionInapplicable { ratio });
    }
    let t = horizon as f64;
    let inner = rho / (1.0 - rho) * c1 * t.sqrt() + h * (2.0 * t * (1.0 / delta).ln()).sqrt() + h;
    Ok(inner / (1.0 - ratio))
}

/// `6𝒞₁√T + 4√(2T log 1/δ) + 4`, with `𝒞₁` already taken at `δ/T`.
pub fn wrapped_regret_bound(c1: f64, horizon: usize, delta: f64) -> f64 {
    let t = horizon as f64;
    6.0 * c1 * t.sqrt() + 4.0 * (2.0 * t * (1.0 / delta).ln()).sqrt() + 4.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionPlan {
    pub rho: f64,
    pub delta: f64,
    pub horizon: usize,
    pub c1: f64,
    pub c2: f64,
    pub beta: f64,
    pub ratio: f64,
    pub linear_tolerance: bool,
}

impl ReductionPlan {
    pub fn new(oracle: &dyn CorruptionOracle, rho: f64, delta: f64, horizon: usize) -> Result<Self> {
        let inner_delta = delta / horizon.max(1) as f64;
        let c1 = oracle.c1(inner_delta, horizon);
        let c2 = oracle.c2(inner_delta, horizon);
        let beta = beta_schedule(rho, c1, c2, horizon, delta, H)?;
        Ok(Self {
            rho,
            delta,
            horizon,
            c1,
            c2,
            beta,
            ratio: reduction_ratio(rho, c2),
            linear_tolerance: linear_tolerance_holds(rho, c2),
        })
    }

    fn attach(&self, record: &mut RunRecord, oracle: &str, prefix: &str) {
        record.push_metadata(&format!("{prefix}oracle"), oracle);
        record.push_metadata(&format!("{prefix}rho"), self.rho);
        record.push_metadata(&format!("{prefix}beta"), self.beta);
        record.push_metadata(&format!("{prefix}c1"), self.c1);
        record.push_metadata(&format!("{prefix}c2"), self.c2);
        record.push_metadata(&format!("{prefix}ratio"), self.ratio);
        record.push_metadata(&format!("{prefix}linear_tolerance"), self.linear_tolerance);
    }
}

/// Runs the oracle with `C' = β` on the misspecified environment.
pub fn reduce_and_run(
    oracle: &mut dyn CorruptionOracle,
    env: &mut dyn BanditEnv,
    rho: f64,
    delta: f64,
) -> Result<RunRecord> {
    let plan = ReductionPlan::new(oracle, rho, delta, env.horizon())?;
    let mut record = oracle
        .run(env, plan.beta, delta)
        .map_err(|e| Error::Oracle(Box::new(e)))?;
    plan.attach(&mut record, oracle.name(), "");
    Ok(record)
}

/// Doubling restarts for fixed-horizon oracles: phase `j` lasts `2^j`
/// rounds (truncated at the end) and gets its own `β`.
pub fn reduce_and_run_doubling(
    oracle: &mut dyn CorruptionOracle,
    env: &mut dyn BanditEnv,
    rho: f64,
    delta: f64,
) -> Result<RunRecord> {
    let mut phase = 0u32;
    let mut plans = Vec::new();
    while env.remaining() > 0 {
        let len = (1usize << phase.min(62)).min(env.remaining());
        let plan = ReductionPlan::new(oracle, rho, delta, len)?;
        let mut window = Window::new(env, len);
        oracle
            .run(&mut window, plan.beta, delta)
            .map_err(|e| Error::Oracle(Box::new(e)))?;
        plans.push(plan);
        phase += 1;
    }
    let mut record = env.record();
    record.push_metadata("phases", plans.len());
    for (j, plan) in plans.iter().enumerate() {
        plan.attach(&mut record, oracle.name(), &format!("phase{j}_"));
    }
    Ok(record)
}

/// A view of the next `len` rounds of an environment.
pub struct Window<'a> {
    inner: &'a mut dyn BanditEnv,
    start: usize,
    len: usize,
}

impl<'a> Window<'a> {
    pub fn new(inner: &'a mut dyn BanditEnv, len: usize) -> Self {
        let start = inner.round();
        let len = len.min(inner.remaining());
        Self { inner, start, len }
    }
}

impl BanditEnv for Window<'_> {
    fn actions(&self) -> &ActionSet {
        self.inner.actions()
    }

    fn horizon(&self) -> usize {
        self.len
    }

    fn round(&self) -> usize {
        self.inner.round() - self.start
    }

    fn pull(&mut self, chosen: usize) -> Result<f64> {
        if self.round() >= self.len {
            return Err(Error::Protocol(format!("window of {} rounds exhausted", self.len)));
        }
        self.inner.pull(chosen)
    }

    fn record(&self) -> RunRecord {
        let mut record = self.inner.record();
        record.rounds.drain(..self.start);
        record
    }
}

/// Randomized phased elimination as a corruption oracle, with
/// `𝒞₁ = 16√2·(√2/(√2−1))·√(d log(|𝒜|T/δ))` and `𝒞₂ = 8d·log₂T`.
///
/// `𝒞₁` collects the `8√(d log(|𝒜|T/δ)/m)` confidence width, doubled for
/// the two-sided gap, summed over geometric epochs; `𝒞₂` charges `2Z/m`
/// per epoch against epoch length `m`, over `log₂ T` epochs and `d` from
/// the base length.
#[derive(Debug, Clone)]
pub struct PhasedEliminationOracle {
    pub dim: usize,
    pub num_actions: usize,
    pub seed: u64,
}

impl PhasedEliminationOracle {
    pub fn for_actions(actions: &ActionSet, seed: u64) -> Self {
        Self {
            dim: actions.dim(),
            num_actions: actions.len(),
            seed,
        }
    }
}

impl CorruptionOracle for PhasedEliminationOracle {
    fn name(&self) -> &str {
        "stoch_elim"
    }

    fn c1(&self, delta: f64, horizon: usize) -> f64 {
        let s2 = std::f64::consts::SQRT_2;
        let log = (self.num_actions as f64 * horizon.max(1) as f64 / delta).ln();
        16.0 * s2 * (s2 / (s2 - 1.0)) * (self.dim as f64 * log).sqrt()
    }

    fn c2(&self, _delta: f64, horizon: usize) -> f64 {
        8.0 * self.dim as f64 * (horizon.max(2) as f64).log2()
    }

    fn run(&mut self, env: &mut dyn BanditEnv, c_prime: f64, delta: f64) -> Result<RunRecord> {
        let params = StochElimParams::new(c_prime, delta);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        Ok(elimination::stoch_elim_run(env, &params, &mut rng)?.record)
    }
}

/// Deterministic stand-in for an oracle whose linear-model regret equals
/// its guarantee exactly.
///
/// The instance has a good arm and a bad arm with misspecified gap `gap`
/// and deviation `−ρ·gap`, so the bad arm's linear gap is `(1−ρ)gap` and
/// each pull charges `ρ·gap` of corruption. The stub pulls the bad arm the
/// largest number of times `n ≤ T` with
/// `n(1−ρ)gap ≤ 𝒞₁√T + 𝒞₂·min(C', nρ·gap)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticOracle {
    pub c1: f64,
    pub c2: f64,
    pub gap: f64,
    pub rho: f64,
    pub good_arm: usize,
    pub bad_arm: usize,
}

impl SyntheticOracle {
    /// Bad-arm pulls for corruption budget `c_prime` over `horizon` rounds.
    pub fn bad_pulls(&self, c_prime: f64, horizon: usize) -> usize {
        let t = horizon as f64;
        let allowed = |n: usize| {
            let n = n as f64;
            n * (1.0 - self.rho) * self.gap <= self.c1 * t.sqrt() + self.c2 * c_prime.min(n * self.rho * self.gap)
        };
        // the constraint's slack is concave in n, so the feasible set is an interval from 0
        let (mut lo, mut hi) = (0usize, horizon);
        if allowed(hi) {
            return hi;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if allowed(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Misspecified regret of the stub run, `n·gap`.
    pub fn regret(&self, c_prime: f64, horizon: usize) -> f64 {
        self.bad_pulls(c_prime, horizon) as f64 * self.gap
    }
}

impl CorruptionOracle for SyntheticOracle {
    fn name(&self) -> &str {
        "synthetic"
    }

    fn c1(&self, _delta: f64, _horizon: usize) -> f64 {
        self.c1
    }

    fn c2(&self, _delta: f64, _horizon: usize) -> f64 {
        self.c2
    }

    fn run(&mut self, env: &mut dyn BanditEnv, c_prime: f64, _delta: f64) -> Result<RunRecord> {
        let n = self.bad_pulls(c_prime, env.horizon());
        for t in 0..env.horizon() {
            env.pull(if t < n { self.bad_arm } else { self.good_arm })?;
        }
        Ok(env.record())
    }
}
