//! Corruption adversaries.
//!
//! [`Adversary`] is the corruption-measure (CM) form: the whole plan
//! `ε_t(·)` for round `t` is fixed before the learner's action is drawn.
//! [`AdaptiveAdversary`] is the adversary-adaptivity (AA) form: the
//! corruption is decided after seeing `a_t`. [`PlannedFromAdaptive`]
//! turns the latter into the former by evaluating the adaptive rule on
//! every action against the same history.

use serde::{Deserialize, Serialize};

use crate::model::{ActionSet, CorruptionLedger, CorruptionPlan, RewardVector};

/// Public information available to an adversary at the start of round `t`.
#[derive(Debug, Clone, Copy)]
pub struct AdversaryView<'a> {
    /// 1-based round about to be played.
    pub t: usize,
    /// `(action, reward)` for rounds `1..t`.
    pub history: &'a [(usize, f64)],
    pub actions: &'a ActionSet,
    /// The round's reward vector; `None` unless the adversary is omniscient.
    pub theta: Option<&'a RewardVector>,
    pub ledger: &'a CorruptionLedger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adaptivity {
    Weak,
    StrongAsPlanned,
}

pub trait Adversary: Send {
    fn plan(&mut self, view: &AdversaryView<'_>) -> CorruptionPlan;
    fn adaptivity(&self) -> Adaptivity;
    /// Per-round bound on `max_a |ε_t(a)|` promised by a weak adversary.
    fn declared_cap(&self) -> Option<f64> {
        None
    }
}

/// Corruption decided after the action is revealed. Implementations must be
/// deterministic functions of `(view, chosen)`.
pub trait AdaptiveAdversary: Send {
    fn corrupt(&self, view: &AdversaryView<'_>, chosen: usize) -> f64;
}

/// How the corruption sign is assigned across actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionProfile {
    /// `s(a) = −sign(aᵀθ)`.
    SignFlip,
    /// `s(a*) = −1` for the optimal action, `+1` elsewhere.
    DemoteOptimal,
}

impl CorruptionProfile {
    fn sign(self, view: &AdversaryView<'_>, index: usize) -> f64 {
        let Some(theta) = view.theta else {
            return 0.0;
        };
        match self {
            CorruptionProfile::SignFlip => {
                let m = view.actions.as_slice()[index].dot(theta.theta());
                if m > 0.0 {
                    -1.0
                } else if m < 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            CorruptionProfile::DemoteOptimal => {
                if view.actions.argmax(theta.theta()) == index {
                    -1.0
                } else {
                    1.0
                }
            }
        }
    }
}

/// No corruption at all.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoCorruption;

impl Adversary for NoCorruption {
    fn plan(&mut self, view: &AdversaryView<'_>) -> CorruptionPlan {
        CorruptionPlan::zero(view.actions.len())
    }
    fn adaptivity(&self) -> Adaptivity {
        Adaptivity::Weak
    }
    fn declared_cap(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Weak adversary with a total `C∞` budget: each round it plans
/// `ε_t(a) = ε_t · s(a)` with `ε_t = min(cap, remaining budget)`.
#[derive(Debug, Clone, Copy)]
pub struct BudgetedWeak {
    pub budget: f64,
    pub cap: f64,
    pub profile: CorruptionProfile,
}

impl BudgetedWeak {
    fn level(&self, ledger: &CorruptionLedger) -> f64 {
        (self.budget - ledger.c_weak).max(0.0).min(self.cap).min(1.0)
    }
}

impl Adversary for BudgetedWeak {
    fn plan(&mut self, view: &AdversaryView<'_>) -> CorruptionPlan {
        let level = self.level(view.ledger);
        let eps = (0..view.actions.len())
            .map(|i| level * self.profile.sign(view, i))
            .collect();
        CorruptionPlan::new(eps).expect("level is clamped to [0, 1]")
    }
    fn adaptivity(&self) -> Adaptivity {
        Adaptivity::Weak
    }
    fn declared_cap(&self) -> Option<f64> {
        Some(self.cap.min(1.0))
    }
}

/// Strong adversary with a total `C` budget: it corrupts the played action
/// by `min(cap, remaining) · s(a_t)` until the budget is spent.
#[derive(Debug, Clone, Copy)]
pub struct BudgetedStrong {
    pub budget: f64,
    pub cap: f64,
    pub profile: CorruptionProfile,
}

impl AdaptiveAdversary for BudgetedStrong {
    fn corrupt(&self, view: &AdversaryView<'_>, chosen: usize) -> f64 {
        let level = (self.budget - view.ledger.c_strong)
            .max(0.0)
            .min(self.cap)
            .min(1.0);
        level * self.profile.sign(view, chosen)
    }
}

/// Strong adversary that shifts every played action's reward by a fixed
/// `−sign(aᵀθ)·magnitude`, without a budget.
#[derive(Debug, Clone, Copy)]
pub struct SignShift {
    pub magnitude: f64,
}

impl AdaptiveAdversary for SignShift {
    fn corrupt(&self, view: &AdversaryView<'_>, chosen: usize) -> f64 {
        self.magnitude.min(1.0) * CorruptionProfile::SignFlip.sign(view, chosen)
    }
}

/// CM adapter for an AA adversary: `ε'_t(a) = ε(H_{t−1}, a)`.
pub struct PlannedFromAdaptive<A> {
    pub inner: A,
}

impl<A: AdaptiveAdversary> Adversary for PlannedFromAdaptive<A> {
    fn plan(&mut self, view: &AdversaryView<'_>) -> CorruptionPlan {
        let eps = (0..view.actions.len())
            .map(|a| self.inner.corrupt(view, a))
            .collect();
        CorruptionPlan::new(eps).expect("adaptive adversaries return values in [-1, 1]")
    }
    fn adaptivity(&self) -> Adaptivity {
        Adaptivity::StrongAsPlanned
    }
}

/// Fixed per-action deviations charged every round; how a misspecified
/// reward function is presented as a corrupted linear one.
#[derive(Debug, Clone)]
pub struct FixedDeviation {
    pub deviations: Vec<f64>,
}

impl Adversary for FixedDeviation {
    fn plan(&mut self, _view: &AdversaryView<'_>) -> CorruptionPlan {
        CorruptionPlan::new(self.deviations.clone()).expect("deviations validated at construction")
    }
    fn adaptivity(&self) -> Adaptivity {
        Adaptivity::Weak
    }
    fn declared_cap(&self) -> Option<f64> {
        Some(self.deviations.iter().fold(0.0, |m, d| m.max(d.abs())))
    }
}

/// Serializable description of an adversary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversarySpec {
    None,
    Weak {
        budget: f64,
        #[serde(default = "default_cap")]
        cap: f64,
        #[serde(default = "default_profile")]
        profile: CorruptionProfile,
    },
    /// Strong adversary run through its CM adapter.
    Strong {
        budget: f64,
        #[serde(default = "default_cap")]
        cap: f64,
        #[serde(default = "default_profile")]
        profile: CorruptionProfile,
    },
    /// Strong adversary evaluated in AA form (corruption after the action).
    StrongAdaptive {
        budget: f64,
        #[serde(default = "default_cap")]
        cap: f64,
        #[serde(default = "default_profile")]
        profile: CorruptionProfile,
    },
    Deviation {
        deviations: Vec<f64>,
    },
}

fn default_cap() -> f64 {
    1.0
}

fn default_profile() -> CorruptionProfile {
    CorruptionProfile::DemoteOptimal
}

/// Either form of adversary, as held by an environment.
pub enum Corruptor {
    Planned(Box<dyn Adversary>),
    Adaptive(Box<dyn AdaptiveAdversary>),
}

impl AdversarySpec {
    pub fn build(&self) -> Corruptor {
        match self {
            AdversarySpec::None => Corruptor::Planned(Box::new(NoCorruption)),
            AdversarySpec::Weak { budget, cap, profile } => Corruptor::Planned(Box::new(BudgetedWeak {
                budget: *budget,
                cap: *cap,
                profile: *profile,
            })),
            AdversarySpec::Strong { budget, cap, profile } => {
                Corruptor::Planned(Box::new(PlannedFromAdaptive {
                    inner: BudgetedStrong {
                        budget: *budget,
                        cap: *cap,
                        profile: *profile,
                    },
                }))
            }
            AdversarySpec::StrongAdaptive { budget, cap, profile } => {
                Corruptor::Adaptive(Box::new(BudgetedStrong {
                    budget: *budget,
                    cap: *cap,
                    profile: *profile,
                }))
            }
            AdversarySpec::Deviation { deviations } => Corruptor::Planned(Box::new(FixedDeviation {
                deviations: deviations.clone(),
            })),
        }
    }
}
