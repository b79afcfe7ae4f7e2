//! Phased elimination.
//!
//! * [`stoch_elim_run`]: randomized phased elimination for corrupted
//!   stochastic bandits. Epoch `k` draws `m_k = 2^{k−1}L` actions i.i.d.
//!   from a G-optimal design over the active set, estimates
//!   `θ̂_k = (m_k G_k)⁻¹ Σ a_t r_t` and keeps the actions whose estimated
//!   gap is within `8√(d log(|𝒜|T/δ)/m_k) + 2Z/m_k`.
//! * [`misspec_elim_run`]: deterministic phased elimination for
//!   gap-dependent misspecification. Phase `ℓ` pulls each support action
//!   `⌈m_ℓ π_ℓ(a)⌉` times and eliminates with
//!   `√(4d log(|𝒜|/δ)/m_ℓ) + 2^{−ℓ}`.
//!
//! A final epoch cut short by the horizon samples from its design and does
//! not eliminate.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::{self, g_optimal_subset};
use crate::env::BanditEnv;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{ActionSet, RunRecord};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StochElimParams {
    /// Corruption input `Z` (`√d·C∞` or `d·C`).
    pub z: f64,
    pub delta: f64,
    /// Multiplier on the base epoch length `L`.
    #[serde(default = "one")]
    pub epoch_scale: f64,
    #[serde(default = "default_design_tol")]
    pub design_tol: f64,
    /// Replace huge action sets with a `6d/T`-net before the first epoch.
    #[serde(default = "yes")]
    pub covering: bool,
}

impl StochElimParams {
    pub fn new(z: f64, delta: f64) -> Self {
        Self {
            z,
            delta,
            epoch_scale: 1.0,
            design_tol: design::DEFAULT_TOL,
            covering: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MisspecElimParams {
    pub delta: f64,
    /// Constant in `m₁ = ⌈c·d·log log d·log(|𝒜|/δ)⌉ + 16`.
    #[serde(default = "default_m1_multiplier")]
    pub m1_multiplier: f64,
    #[serde(default = "default_design_tol")]
    pub design_tol: f64,
}

impl MisspecElimParams {
    pub fn new(delta: f64) -> Self {
        Self {
            delta,
            m1_multiplier: default_m1_multiplier(),
            design_tol: design::DEFAULT_TOL,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_design_tol() -> f64 {
    design::DEFAULT_TOL
}
fn default_m1_multiplier() -> f64 {
    64.0
}

/// What happened in one epoch (or phase).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochTrace {
    pub epoch: usize,
    /// Active set at the start of the epoch.
    pub active: Vec<usize>,
    /// Scheduled length `m_k` (or `m_ℓ`).
    pub scheduled: usize,
    /// Rounds actually played.
    pub played: usize,
    pub threshold: f64,
    pub theta_hat: Option<Vec<f64>>,
    /// Active set after elimination; `None` for a truncated epoch.
    pub survivors: Option<Vec<usize>>,
    pub fallback: bool,
}

#[derive(Debug, Clone)]
pub struct EliminationRun {
    pub record: RunRecord,
    pub epochs: Vec<EpochTrace>,
}

impl EliminationRun {
    /// Whether `index` stayed active through every epoch.
    pub fn retained(&self, index: usize) -> bool {
        self.epochs.iter().all(|e| {
            e.active.contains(&index) && e.survivors.as_ref().is_none_or(|s| s.contains(&index))
        })
    }
}

/// `L = ⌈d log(|𝒜|T/δ)⌉`.
pub fn base_epoch_length(d: usize, n_actions: usize, horizon: usize, delta: f64) -> usize {
    (d as f64 * log_term(n_actions, horizon, delta)).ceil() as usize
}

fn log_term(n_actions: usize, horizon: usize, delta: f64) -> f64 {
    (n_actions as f64 * horizon as f64 / delta).ln()
}

/// `8√(d log(|𝒜|T/δ)/m) + 2Z/m`.
pub fn stoch_threshold(d: usize, n_actions: usize, horizon: usize, delta: f64, z: f64, m: usize) -> f64 {
    let m = m as f64;
    8.0 * (d as f64 * log_term(n_actions, horizon, delta) / m).sqrt() + 2.0 * z / m
}

/// `m₁ = ⌈c·d·max(1, log log d)·log(|𝒜|/δ)⌉ + 16`.
pub fn misspec_m1(d: usize, n_actions: usize, delta: f64, multiplier: f64) -> usize {
    let lnln = (d as f64).ln().ln();
    let lnln = if lnln.is_finite() { lnln.max(1.0) } else { 1.0 };
    (multiplier * d as f64 * lnln * (n_actions as f64 / delta).ln()).ceil() as usize + 16
}

/// `√(4d log(|𝒜|/δ)/m) + 2^{−ℓ}`.
pub fn misspec_threshold(d: usize, n_actions: usize, delta: f64, m: usize, phase: usize) -> f64 {
    (4.0 * d as f64 / m as f64 * (n_actions as f64 / delta).ln()).sqrt() + 0.5f64.powi(phase as i32)
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("delta = {delta} must lie in (0, 1)")))
    }
}

/// Keeps the actions whose estimated gap is within `threshold`; falls back
/// to the empirical argmax if that would empty the set.
fn eliminate(actions: &ActionSet, active: &[usize], theta_hat: &DVector<f64>, threshold: f64) -> (Vec<usize>, bool) {
    let all = actions.as_slice();
    let values: Vec<f64> = active.iter().map(|&i| all[i].dot(theta_hat)).collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let kept: Vec<usize> = active
        .iter()
        .zip(&values)
        .filter(|(_, &v)| best - v <= threshold)
        .map(|(&i, _)| i)
        .collect();
    if kept.is_empty() {
        let arg = active
            .iter()
            .zip(&values)
            .fold((active[0], f64::NEG_INFINITY), |acc, (&i, &v)| if v > acc.1 { (i, v) } else { acc });
        (vec![arg.0], true)
    } else {
        (kept, false)
    }
}

/// Randomized phased elimination. `rng` drives the learner's sampling only.
pub fn stoch_elim_run<E, R>(env: &mut E, params: &StochElimParams, rng: &mut R) -> Result<EliminationRun>
where
    E: BanditEnv + ?Sized,
    R: Rng + ?Sized,
{
    check_delta(params.delta)?;
    if !(params.z >= 0.0) {
        return Err(Error::Domain(format!("Z = {} must be non-negative", params.z)));
    }
    let actions = env.actions().clone();
    let d = actions.dim();
    let horizon = env.horizon();
    let mut active: Vec<usize> = if params.covering {
        covering_net_indices_for_horizon(&actions, horizon)
    } else {
        (0..actions.len()).collect()
    };
    let n = active.len();
    let base = ((base_epoch_length(d, n, horizon, params.delta) as f64) * params.epoch_scale)
        .ceil()
        .max(1.0) as usize;

    let mut epochs = Vec::new();
    let mut k = 1;
    while env.remaining() > 0 {
        let design = g_optimal_subset(&actions, &active, params.design_tol)?;
        let scheduled = base.saturating_mul(1usize << (k - 1).min(62));
        let threshold = stoch_threshold(d, n, horizon, params.delta, params.z, scheduled);
        let mut sum = DVector::zeros(d);
        let mut played = 0;
        while played < scheduled && env.remaining() > 0 {
            let a = design.sample_with(rng.gen::<f64>());
            let r = env.pull(a)?;
            sum.axpy(r, &actions.as_slice()[a], 1.0);
            played += 1;
        }
        let mut trace = EpochTrace {
            epoch: k,
            active: active.clone(),
            scheduled,
            played,
            threshold,
            theta_hat: None,
            survivors: None,
            fallback: false,
        };
        if played == scheduled {
            let theta_hat = design.inverse().apply(&sum) / scheduled as f64;
            let (kept, fallback) = eliminate(&actions, &active, &theta_hat, threshold);
            trace.theta_hat = Some(theta_hat.iter().copied().collect());
            trace.survivors = Some(kept.clone());
            trace.fallback = fallback;
            active = kept;
        }
        epochs.push(trace);
        k += 1;
    }
    Ok(EliminationRun {
        record: env.record(),
        epochs,
    })
}

/// Phased elimination for gap-dependent misspecification. Deterministic
/// given the environment.
pub fn misspec_elim_run<E>(env: &mut E, params: &MisspecElimParams) -> Result<EliminationRun>
where
    E: BanditEnv + ?Sized,
{
    check_delta(params.delta)?;
    let actions = env.actions().clone();
    let all = actions.as_slice();
    let d = actions.dim();
    let n = actions.len();
    let mut active: Vec<usize> = (0..n).collect();
    let mut m = misspec_m1(d, n, params.delta, params.m1_multiplier);
    let mut epochs = Vec::new();
    let mut phase = 1;
    while env.remaining() > 0 {
        let design = g_optimal_subset(&actions, &active, params.design_tol)?;
        let pulls: Vec<(usize, usize)> = design
            .weights()
            .iter()
            .map(|&(i, w)| (i, (m as f64 * w).ceil() as usize))
            .collect();
        let scheduled: usize = pulls.iter().map(|&(_, u)| u).sum();
        let threshold = misspec_threshold(d, n, params.delta, m, phase);
        let mut played = 0;
        let mut means = Vec::with_capacity(pulls.len());
        'pull: for &(a, u) in &pulls {
            let mut total = 0.0;
            for _ in 0..u {
                if env.remaining() == 0 {
                    break 'pull;
                }
                total += env.pull(a)?;
                played += 1;
            }
            means.push(total / u as f64);
        }
        let mut trace = EpochTrace {
            epoch: phase,
            active: active.clone(),
            scheduled,
            played,
            threshold,
            theta_hat: None,
            survivors: None,
            fallback: false,
        };
        if played == scheduled {
            let gram = linalg::weighted_outer_sum(
                d,
                pulls.iter().map(|&(a, u)| (u as f64, &all[a])),
            );
            let mut rhs = DVector::zeros(d);
            for (&(a, u), y) in pulls.iter().zip(&means) {
                rhs.axpy(u as f64 * y, &all[a], 1.0);
            }
            let theta_hat = linalg::RangeInverse::new(&gram).apply(&rhs);
            let (kept, fallback) = eliminate(&actions, &active, &theta_hat, threshold);
            trace.theta_hat = Some(theta_hat.iter().copied().collect());
            trace.survivors = Some(kept.clone());
            trace.fallback = fallback;
            active = kept;
        }
        epochs.push(trace);
        m = m.saturating_mul(4);
        phase += 1;
    }
    Ok(EliminationRun {
        record: env.record(),
        epochs,
    })
}

/// Greedy farthest-point `radius`-net of the action set; returns indices
/// in ascending order. Every action lies within `radius` of a net point.
pub fn covering_net_indices(actions: &ActionSet, radius: f64) -> Vec<usize> {
    let all = actions.as_slice();
    let mut net = vec![0];
    let mut dist: Vec<f64> = all.iter().map(|a| (a - &all[0]).norm()).collect();
    loop {
        let (far, far_d) = dist
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        if far_d <= radius {
            break;
        }
        net.push(far);
        for (i, a) in all.iter().enumerate() {
            dist[i] = dist[i].min((a - &all[far]).norm());
        }
    }
    net.sort_unstable();
    net
}

fn covering_net_indices_for_horizon(actions: &ActionSet, horizon: usize) -> Vec<usize> {
    let d = actions.dim() as f64;
    let t = horizon.max(1) as f64;
    if (actions.len() as f64).ln() > d * t.ln() {
        covering_net_indices(actions, 6.0 * d / t)
    } else {
        (0..actions.len()).collect()
    }
}

/// Returns a `6d/T`-net of `actions` when `|𝒜| > T^d`, else `actions`.
pub fn covering_net(actions: &ActionSet, horizon: usize) -> ActionSet {
    let idx = covering_net_indices_for_horizon(actions, horizon);
    actions.subset(&idx).expect("net indices are valid")
}
