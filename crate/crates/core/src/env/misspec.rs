//! Gap-dependent misspecified instances.
//!
//! A misspecified instance has a true reward `f₀(a) = aᵀθ + Δ(a)` with
//! `|Δ(a)| ≤ ρ·Gap(a)`, `Gap(a) = f₀* − f₀(a)`. Algorithms only see it
//! through an [`Environment`] whose adversary charges `Δ(a)` as corruption
//! every round.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adversary::{Corruptor, FixedDeviation};
use super::{Environment, RewardSchedule};
use crate::error::{Error, Result};
use crate::model::{ActionSet, RewardVector, RunRecord, TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationSign {
    /// `Δ(a) = −ρ·Gap(a)`: the linear surrogate overrates suboptimal arms.
    Negative,
    /// `Δ(a) = +ρ·Gap(a)`.
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeviationProfile {
    MaxAdverse { sign: DeviationSign },
    Zero,
    RandomWithinBudget { seed: u64 },
}

impl Default for DeviationProfile {
    fn default() -> Self {
        DeviationProfile::MaxAdverse {
            sign: DeviationSign::Negative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisspecifiedInstance {
    pub actions: ActionSet,
    /// Linear surrogate `θ`.
    pub theta: RewardVector,
    /// True mean rewards `f₀(a)`.
    pub f0: Vec<f64>,
    /// `Δ(a) = f₀(a) − aᵀθ`.
    pub deviations: Vec<f64>,
    pub rho: f64,
}

impl MisspecifiedInstance {
    /// Builds an instance from explicit true means, verifying
    /// `|Δ(a)| ≤ ρ·Gap(a)` for every action.
    pub fn from_true_means(
        actions: ActionSet,
        theta: RewardVector,
        f0: Vec<f64>,
        rho: f64,
    ) -> Result<Self> {
        if f0.len() != actions.len() {
            return Err(Error::Shape("one true mean per action required".into()));
        }
        let deviations: Vec<f64> = actions
            .iter()
            .zip(&f0)
            .map(|(a, f)| f - a.dot(theta.theta()))
            .collect();
        let inst = Self {
            actions,
            theta,
            f0,
            deviations,
            rho,
        };
        inst.check()?;
        Ok(inst)
    }

    pub fn best_value(&self) -> f64 {
        self.f0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn gap(&self, index: usize) -> f64 {
        self.best_value() - self.f0[index]
    }

    pub fn gaps(&self) -> Vec<f64> {
        let best = self.best_value();
        self.f0.iter().map(|f| best - f).collect()
    }

    /// Index of the true optimum, lowest index on ties.
    pub fn optimal_action(&self) -> usize {
        let best = self.best_value();
        self.f0.iter().position(|&f| f == best).unwrap_or(0)
    }

    pub fn check(&self) -> Result<()> {
        let best = self.best_value();
        for (i, (&delta, &f)) in self.deviations.iter().zip(&self.f0).enumerate() {
            let gap = best - f;
            if delta.abs() > self.rho * gap + 1e-12 {
                return Err(Error::Invariant(format!(
                    "action {i}: |Δ| = {} exceeds ρ·Gap = {}",
                    delta.abs(),
                    self.rho * gap
                )));
            }
            if f.abs() > 1.0 + TOL {
                return Err(Error::Range(format!("true mean {f} of action {i} outside [-1, 1]")));
            }
        }
        Ok(())
    }

    /// Regret against `f₀` of the actions in `record`.
    pub fn regret(&self, record: &RunRecord) -> f64 {
        let best = self.best_value();
        record.actions_played().map(|a| best - self.f0[a]).sum()
    }

    /// An environment presenting `f₀` as `θ` plus corruption `Δ`.
    pub fn environment(&self, noise: f64, horizon: usize, seed: u64) -> Result<Environment> {
        Environment::new(
            self.actions.clone(),
            RewardSchedule::Fixed {
                theta: self.theta.clone(),
            },
            Corruptor::Planned(Box::new(FixedDeviation {
                deviations: self.deviations.clone(),
            })),
            noise,
            horizon,
            seed,
        )
    }
}

/// Builds a gap-dependent misspecified instance around the linear model
/// `θ`. The linear optimum stays optimal and keeps `Δ = 0`; for every
/// other action the deviation is `Δ(a) = s(a)·ρ·Gap(a)` where the true gap
/// solves `Gap = g_lin − s·ρ·Gap`.
pub fn make_gap_misspecified(
    actions: &ActionSet,
    theta: &RewardVector,
    rho: f64,
    shape: DeviationProfile,
) -> Result<MisspecifiedInstance> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::Domain(format!("rho = {rho} must lie in [0, 1)")));
    }
    theta.check(actions)?;
    let means: Vec<f64> = actions.iter().map(|a| theta.mean(a)).collect();
    let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut rng = match shape {
        DeviationProfile::RandomWithinBudget { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let deviations: Vec<f64> = means
        .iter()
        .map(|&m| {
            let g_lin = best - m;
            let s = match shape {
                DeviationProfile::Zero => 0.0,
                DeviationProfile::MaxAdverse { sign: DeviationSign::Negative } => -1.0,
                DeviationProfile::MaxAdverse { sign: DeviationSign::Positive } => 1.0,
                DeviationProfile::RandomWithinBudget { .. } => {
                    rng.as_mut().expect("seeded above").gen_range(-1.0..=1.0)
                }
            };
            if g_lin == 0.0 {
                return 0.0;
            }
            let gap = g_lin / (1.0 + s * rho);
            s * rho * gap
        })
        .collect();
    let f0: Vec<f64> = means.iter().zip(&deviations).map(|(m, d)| m + d).collect();
    if let Some((i, f)) = f0.iter().enumerate().find(|(_, f)| f.abs() > 1.0 + TOL) {
        return Err(Error::Range(format!(
            "deviation pushes true mean of action {i} to {f}, outside [-1, 1]"
        )));
    }
    if let Some(d) = deviations.iter().find(|d| d.abs() > 1.0) {
        return Err(Error::Range(format!("deviation {d} exceeds the corruption bound 1")));
    }
    let inst = MisspecifiedInstance {
        actions: actions.clone(),
        theta: theta.clone(),
        f0,
        deviations,
        rho,
    };
    inst.check()?;
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::BanditEnv;

    fn three_arms() -> (ActionSet, RewardVector) {
        // linear gaps {0, 0.3, 0.75}
        let acts = ActionSet::from_rows(vec![vec![1.0], vec![0.7], vec![0.25]]).unwrap();
        let theta = RewardVector::from_slice(&[1.0], &acts).unwrap();
        (acts, theta)
    }

    #[test]
    fn zero_rho_is_exactly_linear() {
        let (acts, theta) = three_arms();
        let inst = make_gap_misspecified(&acts, &theta, 0.0, DeviationProfile::default()).unwrap();
        for (a, f) in acts.iter().zip(&inst.f0) {
            assert_eq!(*f, theta.mean(a));
        }
    }

    #[test]
    fn max_adverse_hits_the_budget() {
        let (acts, theta) = three_arms();
        let inst = make_gap_misspecified(&acts, &theta, 0.25, DeviationProfile::default()).unwrap();
        let gaps = inst.gaps();
        let expect_gaps = [0.0, 0.4, 1.0];
        let expect_dev = [0.0, 0.1, 0.25];
        for i in 0..3 {
            assert!((gaps[i] - expect_gaps[i]).abs() < 1e-12);
            assert!((inst.deviations[i].abs() - expect_dev[i]).abs() < 1e-12);
            assert!((inst.deviations[i].abs() - 0.25 * gaps[i]).abs() < 1e-12);
        }
        assert_eq!(inst.deviations[inst.optimal_action()], 0.0);
    }

    #[test]
    fn rho_domain_and_range_errors() {
        let (acts, theta) = three_arms();
        assert!(matches!(
            make_gap_misspecified(&acts, &theta, 1.0, DeviationProfile::Zero),
            Err(Error::Domain(_))
        ));
        let wide = ActionSet::from_rows(vec![vec![1.0], vec![-1.0]]).unwrap();
        let th = RewardVector::from_slice(&[1.0], &wide).unwrap();
        // gap 2, Δ = −0.5·4 pushes f0 to −3
        assert!(matches!(
            make_gap_misspecified(&wide, &th, 0.5, DeviationProfile::default()),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn random_profile_stays_within_budget() {
        let (acts, theta) = three_arms();
        let inst =
            make_gap_misspecified(&acts, &theta, 0.3, DeviationProfile::RandomWithinBudget { seed: 3 })
                .unwrap();
        inst.check().unwrap();
    }

    #[test]
    fn environment_reports_true_means() {
        let (acts, theta) = three_arms();
        let inst = make_gap_misspecified(&acts, &theta, 0.25, DeviationProfile::default()).unwrap();
        let mut env = inst.environment(0.0, 3, 0).unwrap();
        for i in 0..3 {
            let r = env.pull(i).unwrap();
            assert!((r - inst.f0[i]).abs() < 1e-12);
        }
        let s = env.ledger().summary();
        assert!((s.c - 0.35).abs() < 1e-12);
    }
}
