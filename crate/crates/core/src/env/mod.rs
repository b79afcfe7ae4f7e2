//! Environments: reward schedules, corruption adversaries, misspecified
//! instances and the packing lower-bound instance.

pub mod adversary;
pub mod instance;
pub mod misspec;
pub mod packing;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ActionSet, CorruptionLedger, CorruptionPlan, RewardVector, RoundLog, RunRecord};

pub use adversary::{
    AdaptiveAdversary, Adaptivity, Adversary, AdversarySpec, AdversaryView, Corruptor,
    CorruptionProfile, PlannedFromAdaptive,
};
pub use instance::InstanceSpec;
pub use misspec::{make_gap_misspecified, DeviationProfile, DeviationSign, MisspecifiedInstance};
pub use packing::{make_packing, packing_bound, PackingInstance};

/// The learner-facing side of an environment.
pub trait BanditEnv {
    fn actions(&self) -> &ActionSet;
    fn horizon(&self) -> usize;
    /// Rounds already played.
    fn round(&self) -> usize;
    /// Plays `chosen` and returns the observed reward.
    fn pull(&mut self, chosen: usize) -> Result<f64>;
    /// Snapshot of the run so far.
    fn record(&self) -> RunRecord;

    fn remaining(&self) -> usize {
        self.horizon().saturating_sub(self.round())
    }
}

/// How `θ_t` evolves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardSchedule {
    /// Stochastic setting: `θ_t = θ*`.
    Fixed { theta: RewardVector },
    /// Oblivious adversarial setting: `θ_t = thetas[(t − 1) mod len]`.
    Cycle { thetas: Vec<RewardVector> },
}

impl RewardSchedule {
    pub fn theta_at(&self, t: usize) -> &RewardVector {
        match self {
            RewardSchedule::Fixed { theta } => theta,
            RewardSchedule::Cycle { thetas } => &thetas[(t - 1) % thetas.len()],
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, RewardSchedule::Fixed { .. })
    }

    fn check(&self, actions: &ActionSet) -> Result<()> {
        match self {
            RewardSchedule::Fixed { theta } => theta.check(actions),
            RewardSchedule::Cycle { thetas } => {
                if thetas.is_empty() {
                    return Err(Error::Invariant("empty reward cycle".into()));
                }
                thetas.iter().try_for_each(|t| t.check(actions))
            }
        }
    }
}

/// One corrupted linear-bandit run: `r_t = a_tᵀθ_t + ε_t(a_t) + ζ_t` with
/// `ζ_t ~ U[−c, c]`.
pub struct Environment {
    actions: ActionSet,
    schedule: RewardSchedule,
    corruptor: Corruptor,
    noise: f64,
    horizon: usize,
    omniscient: bool,
    seed: u64,
    rng: ChaCha8Rng,
    history: Vec<(usize, f64)>,
    ledger: CorruptionLedger,
    logs: Vec<RoundLog>,
    theta_sum: DVector<f64>,
}

impl Environment {
    pub fn new(
        actions: ActionSet,
        schedule: RewardSchedule,
        corruptor: Corruptor,
        noise: f64,
        horizon: usize,
        seed: u64,
    ) -> Result<Self> {
        schedule.check(&actions)?;
        if !(0.0..=1.0).contains(&noise) {
            return Err(Error::Domain(format!("noise scale {noise} outside [0, 1]")));
        }
        let d = actions.dim();
        Ok(Self {
            actions,
            schedule,
            corruptor,
            noise,
            horizon,
            omniscient: true,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            history: Vec::new(),
            ledger: CorruptionLedger::new(),
            logs: Vec::new(),
            theta_sum: DVector::zeros(d),
        })
    }

    /// Stochastic environment without corruption.
    pub fn stochastic(
        actions: ActionSet,
        theta: RewardVector,
        noise: f64,
        horizon: usize,
        seed: u64,
    ) -> Result<Self> {
        Self::new(
            actions,
            RewardSchedule::Fixed { theta },
            AdversarySpec::None.build(),
            noise,
            horizon,
            seed,
        )
    }

    /// Hides `θ` from the adversary.
    pub fn with_omniscient(mut self, omniscient: bool) -> Self {
        self.omniscient = omniscient;
        self
    }

    pub fn ledger(&self) -> &CorruptionLedger {
        &self.ledger
    }

    pub fn schedule(&self) -> &RewardSchedule {
        &self.schedule
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    /// Plays one round. The corruption plan is produced from the history
    /// before `chosen` is consulted; for an AA-form adversary the returned
    /// plan only carries the realized entry `ε_t(a_t)`.
    pub fn step(&mut self, chosen: usize) -> Result<(f64, CorruptionPlan)> {
        if self.logs.len() >= self.horizon {
            return Err(Error::Protocol(format!("horizon {} exceeded", self.horizon)));
        }
        let n = self.actions.len();
        if chosen >= n {
            return Err(Error::InvalidAction { index: chosen, len: n });
        }
        let t = self.logs.len() + 1;
        let theta = self.schedule.theta_at(t).clone();
        let view = AdversaryView {
            t,
            history: &self.history,
            actions: &self.actions,
            theta: self.omniscient.then_some(&theta),
            ledger: &self.ledger,
        };
        let plan = match &mut self.corruptor {
            Corruptor::Planned(adv) => {
                let plan = adv.plan(&view);
                if plan.len() != n {
                    return Err(Error::Shape(format!(
                        "adversary planned {} entries for {n} actions",
                        plan.len()
                    )));
                }
                plan
            }
            Corruptor::Adaptive(adv) => {
                let e = adv.corrupt(&view, chosen);
                let mut eps = vec![0.0; n];
                eps[chosen] = e;
                CorruptionPlan::new(eps)?
            }
        };
        let eps = plan.eps(chosen)?;
        let mean = theta.mean(&self.actions.as_slice()[chosen]);
        let zeta = if self.noise > 0.0 {
            self.rng.gen_range(-self.noise..=self.noise)
        } else {
            // keep the stream aligned regardless of the noise scale
            let _: f64 = self.rng.gen();
            0.0
        };
        let reward = mean + eps + zeta;
        self.ledger = self.ledger.record_round(&plan, chosen)?;
        self.history.push((chosen, reward));
        self.theta_sum += theta.theta();
        self.logs.push(RoundLog {
            t,
            action: chosen,
            reward,
            mean_reward: mean,
            eps_charged: eps,
            cum_regret: 0.0,
        });
        Ok((reward, plan))
    }

    /// Index of the best fixed action against `Σ_t θ_t` so far.
    pub fn best_fixed_action(&self) -> usize {
        if self.logs.is_empty() {
            return self.actions.argmax(self.schedule.theta_at(1).theta());
        }
        self.actions.argmax(&self.theta_sum)
    }
}

impl BanditEnv for Environment {
    fn actions(&self) -> &ActionSet {
        &self.actions
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn round(&self) -> usize {
        self.logs.len()
    }

    fn pull(&mut self, chosen: usize) -> Result<f64> {
        self.step(chosen).map(|(r, _)| r)
    }

    fn record(&self) -> RunRecord {
        let best = &self.actions.as_slice()[self.best_fixed_action()];
        let mut cum = 0.0;
        let rounds = self
            .logs
            .iter()
            .map(|log| {
                let theta = self.schedule.theta_at(log.t);
                cum += theta.mean(best) - log.mean_reward;
                RoundLog {
                    cum_regret: cum,
                    ..*log
                }
            })
            .collect();
        RunRecord {
            rounds,
            ledger: self.ledger,
            seed: self.seed,
            metadata: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::adversary::{BudgetedStrong, SignShift};

    fn two_arms() -> (ActionSet, RewardVector) {
        let acts = ActionSet::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let theta = RewardVector::from_slice(&[0.5, -0.2], &acts).unwrap();
        (acts, theta)
    }

    #[test]
    fn clean_environment_returns_exact_mean() {
        let (acts, theta) = two_arms();
        let mut env = Environment::stochastic(acts, theta, 0.0, 3, 7).unwrap();
        assert_eq!(env.pull(0).unwrap(), 0.5);
        assert_eq!(env.pull(1).unwrap(), -0.2);
    }

    #[test]
    fn horizon_is_enforced() {
        let (acts, theta) = two_arms();
        let mut env = Environment::stochastic(acts, theta, 1.0, 1, 7).unwrap();
        env.pull(0).unwrap();
        assert!(matches!(env.pull(0), Err(Error::Protocol(_))));
    }

    #[test]
    fn sign_shift_plan_lowers_positive_mean() {
        let (acts, theta) = two_arms();
        let corruptor = Corruptor::Planned(Box::new(PlannedFromAdaptive {
            inner: SignShift { magnitude: 0.3 },
        }));
        let mut env = Environment::new(
            acts,
            RewardSchedule::Fixed { theta },
            corruptor,
            0.0,
            2,
            1,
        )
        .unwrap();
        let (r, plan) = env.step(0).unwrap();
        assert!((r - 0.2).abs() < 1e-12);
        assert!((plan.eps(1).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn aa_ledger_only_sees_realized_corruption() {
        let (acts, theta) = two_arms();
        let corruptor = Corruptor::Adaptive(Box::new(BudgetedStrong {
            budget: 10.0,
            cap: 1.0,
            profile: CorruptionProfile::DemoteOptimal,
        }));
        let mut env =
            Environment::new(acts, RewardSchedule::Fixed { theta }, corruptor, 0.0, 4, 1).unwrap();
        for _ in 0..4 {
            env.pull(1).unwrap();
        }
        let s = env.ledger().summary();
        assert_eq!(s.c, 4.0);
        assert_eq!(s.c_inf, 4.0);
    }

    #[test]
    fn record_uses_best_fixed_comparator() {
        let acts = ActionSet::from_rows(vec![vec![1.0], vec![-1.0]]).unwrap();
        let up = RewardVector::from_slice(&[1.0], &acts).unwrap();
        let down = RewardVector::from_slice(&[-0.5], &acts).unwrap();
        let mut env = Environment::new(
            acts,
            RewardSchedule::Cycle { thetas: vec![up, down] },
            AdversarySpec::None.build(),
            0.0,
            4,
            0,
        )
        .unwrap();
        for a in [1, 1, 1, 1] {
            env.pull(a).unwrap();
        }
        // Σθ = 1.0, best fixed is action 0 earning 1.0; played earns −1.0
        let rec = env.record();
        assert!((rec.final_regret() - 2.0).abs() < 1e-12);
    }
}
