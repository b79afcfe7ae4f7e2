//! Continuous exponential weights over `conv(𝒜)` with norm-clipped
//! sampling and lazily triggered bonuses, for the strong corruption
//! measure `C`.
//!
//! Round `t`, with `S_t = Σ_{s<t} (θ̂_s − b_s)`:
//!
//! 1. Estimate `Σ_t = E[aaᵀ]` and `x_t = E[a]` under `p_t ∝ exp(η⟨a, S_t⟩)`
//!    from `M` draws.
//! 2. Keep draws with `‖a‖_{Σ_t⁻¹} ≤ √d·β`; `Σ̃_t = γI + E_{p̃_t}[aaᵀ]`.
//! 3. Draw `a_t ~ p̃_t`, play a vertex from its barycentric decomposition,
//!    and set `θ̂_t = Σ̃_t⁻¹ a_t r_t`.
//! 4. With `𝐁_t = I + [Σ̃⁻¹, −Σ̃⁻¹x; −xᵀΣ̃⁻¹, xᵀΣ̃⁻¹x]`, fire when
//!    `λ_max(𝐁_t − Σ_{τ∈𝐼} 𝐁_τ) > 0`; then `b_t = −α η S_t`, else `b_t = 0`.

pub mod hull;
pub mod sampler;

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::BanditEnv;
use crate::error::{Error, Result};
use crate::linalg::{self, RangeInverse};
use crate::model::RunRecord;

pub use hull::Polytope;
pub use sampler::LogLinearSampler;

pub const DEFAULT_MC_SAMPLES: usize = 4000;
pub const DEFAULT_ALPHA_CONST: f64 = 8.0;
/// Acceptance rates below this abort the round.
pub const MIN_ACCEPT_RATE: f64 = 0.5;
const MAX_PLAY_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CewParams {
    pub gamma: f64,
    pub alpha: f64,
    pub eta: f64,
    pub beta: f64,
    pub mc_samples: usize,
    pub horizon: usize,
    pub dim: usize,
}

/// `γ = log(T/δ)/T`, `α = 8(d√T + √d·C) log(T/δ)`,
/// `η = min{1/(160√(d³T)), 1/(32√d·α)}`, `β = 4 log(10dT)`.
pub fn cew_params(c: f64, horizon: usize, d: usize, delta: f64) -> Result<CewParams> {
    cew_params_with(c, horizon, d, delta, DEFAULT_ALPHA_CONST, DEFAULT_MC_SAMPLES)
}

pub fn cew_params_with(
    c: f64,
    horizon: usize,
    d: usize,
    delta: f64,
    alpha_const: f64,
    mc_samples: usize,
) -> Result<CewParams> {
    if !(c >= 0.0) {
        return Err(Error::Domain(format!("C = {c} must be non-negative")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("δ = {delta} must lie in (0, 1)")));
    }
    let t = horizon.max(1) as f64;
    let df = d as f64;
    let log_td = (t / delta).ln();
    let gamma = log_td / t;
    let alpha = alpha_const * (df * t.sqrt() + df.sqrt() * c) * log_td;
    let eta = (1.0 / (160.0 * (df.powi(3) * t).sqrt())).min(1.0 / (32.0 * df.sqrt() * alpha));
    let beta = 4.0 * (10.0 * df * t).ln();
    Ok(CewParams {
        gamma,
        alpha,
        eta,
        beta,
        mc_samples,
        horizon,
        dim: d,
    })
}

/// `d·log₂(4T/γ)`.
pub fn trigger_bound(params: &CewParams) -> f64 {
    params.dim as f64 * (4.0 * params.horizon.max(1) as f64 / params.gamma).log2()
}

#[derive(Debug, Clone)]
pub struct CewState {
    pub params: CewParams,
    /// `S_t`.
    pub accumulator: DVector<f64>,
    /// Rounds (1-based) at which the trigger fired.
    pub triggers: Vec<usize>,
    /// `Σ_{τ∈𝐼} 𝐁_τ`.
    pub trigger_sum: DMatrix<f64>,
    pub round: usize,
}

impl CewState {
    pub fn new(params: CewParams) -> Self {
        let d = params.dim;
        Self {
            params,
            accumulator: DVector::zeros(d),
            triggers: Vec::new(),
            trigger_sum: DMatrix::zeros(d + 1, d + 1),
            round: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CewDiagnostics {
    pub t: usize,
    pub triggered: bool,
    pub accept_rate: f64,
    pub lambda_min_b: f64,
}

impl CewDiagnostics {
    pub const CSV_HEADER: &'static str = "t,triggered,accept_rate,lambda_min_B";

    pub fn write_csv<W: Write>(rows: &[Self], mut out: W) -> Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for r in rows {
            writeln!(out, "{},{},{},{}", r.t, r.triggered as u8, r.accept_rate, r.lambda_min_b)?;
        }
        Ok(())
    }
}

/// What one round produced, beyond the state update.
#[derive(Debug, Clone)]
pub struct CewRoundLog {
    pub diagnostics: CewDiagnostics,
    pub action: DVector<f64>,
    pub vertex: usize,
    pub reward: f64,
    pub theta_hat: DVector<f64>,
    pub bonus: DVector<f64>,
}

/// Monte-Carlo moments of `p_t` and its clipped version.
#[derive(Debug, Clone)]
pub struct ClippedMoments {
    pub sigma: DMatrix<f64>,
    pub mean: DVector<f64>,
    pub sigma_tilde: DMatrix<f64>,
    pub accept_rate: f64,
    pub threshold: f64,
    sigma_range: RangeInverse,
}

impl ClippedMoments {
    /// `‖a‖²_{Σ_t⁻¹}` on the range of `Σ_t`.
    pub fn clip_norm_sq(&self, a: &DVector<f64>) -> f64 {
        self.sigma_range.quad(a)
    }

    pub fn accepts(&self, a: &DVector<f64>) -> bool {
        self.clip_norm_sq(a).sqrt() <= self.threshold
    }
}

/// Steps 1–2 from a batch of draws.
pub fn clipped_moments(draws: &[DVector<f64>], params: &CewParams) -> Result<ClippedMoments> {
    let d = params.dim;
    let m = draws.len();
    if m == 0 {
        return Err(Error::Domain("no Monte-Carlo draws".into()));
    }
    let sigma = linalg::weighted_outer_sum(d, draws.iter().map(|a| (1.0 / m as f64, a)));
    let mean = draws.iter().fold(DVector::zeros(d), |acc, a| acc + a) / m as f64;
    let sigma_range = RangeInverse::new(&sigma);
    let threshold = (d as f64).sqrt() * params.beta;
    let accepted: Vec<&DVector<f64>> = draws
        .iter()
        .filter(|a| sigma_range.quad(a).sqrt() <= threshold)
        .collect();
    let accept_rate = accepted.len() as f64 / m as f64;
    if accept_rate < MIN_ACCEPT_RATE {
        return Err(Error::ClippingAnomaly { rate: accept_rate });
    }
    let w = 1.0 / accepted.len() as f64;
    let sigma_tilde = DMatrix::identity(d, d) * params.gamma + linalg::weighted_outer_sum(d, accepted.iter().map(|a| (w, *a)));
    Ok(ClippedMoments {
        sigma,
        mean,
        sigma_tilde,
        accept_rate,
        threshold,
        sigma_range,
    })
}

/// `𝐁 = I + [Σ̃⁻¹, −Σ̃⁻¹x; −xᵀΣ̃⁻¹, xᵀΣ̃⁻¹x]`.
pub fn trigger_matrix(sigma_tilde_inv: &DMatrix<f64>, x: &DVector<f64>) -> DMatrix<f64> {
    let d = x.len();
    let sx = sigma_tilde_inv * x;
    let mut b = DMatrix::identity(d + 1, d + 1);
    let mut top = b.view_mut((0, 0), (d, d));
    top += sigma_tilde_inv;
    for i in 0..d {
        b[(i, d)] -= sx[i];
        b[(d, i)] -= sx[i];
    }
    b[(d, d)] += x.dot(&sx);
    b
}

/// One CEW round. `round_seed` fixes every Monte-Carlo draw of the round.
pub fn cew_round<E: BanditEnv + ?Sized>(
    state: &mut CewState,
    env: &mut E,
    sampler: &LogLinearSampler,
    round_seed: u64,
) -> Result<CewRoundLog> {
    let params = state.params;
    let d = params.dim;
    let grad = &state.accumulator * params.eta;
    let m = params.mc_samples;
    let draws = sampler.sample_many(&grad, round_seed, 0, m)?;
    let moments = clipped_moments(&draws, &params)?;

    let mut action = None;
    for attempt in 0..MAX_PLAY_ATTEMPTS {
        let mut rng = sampler::substream(round_seed, (m + attempt) as u64);
        let a = sampler.sample(&grad, &mut rng)?;
        if moments.accepts(&a) {
            action = Some((a, rng.gen::<f64>()));
            break;
        }
    }
    let (action, u) = action.ok_or(Error::ClippingAnomaly {
        rate: moments.accept_rate,
    })?;
    let weights = sampler.polytope().barycentric(&action)?;
    let mut vertex = weights.len() - 1;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            vertex = i;
            break;
        }
    }
    let reward = env.pull(vertex)?;

    let st_inv = linalg::spd_inverse(&moments.sigma_tilde, crate::ftrl::MIN_EIG)?;
    let theta_hat = &st_inv * &action * reward;
    let b_mat = trigger_matrix(&st_inv, &moments.mean);
    let lambda_min_b = linalg::lambda_min(&b_mat);
    let t = state.round + 1;
    let triggered = linalg::lambda_max(&(&b_mat - &state.trigger_sum)) > 0.0;
    let bonus = if triggered {
        state.triggers.push(t);
        state.trigger_sum += &b_mat;
        &state.accumulator * (-params.alpha * params.eta)
    } else {
        DVector::zeros(d)
    };
    state.accumulator += &theta_hat - &bonus;
    state.round = t;
    Ok(CewRoundLog {
        diagnostics: CewDiagnostics {
            t,
            triggered,
            accept_rate: moments.accept_rate,
            lambda_min_b,
        },
        action,
        vertex,
        reward,
        theta_hat,
        bonus,
    })
}

#[derive(Debug, Clone)]
pub struct CewRun {
    pub record: RunRecord,
    pub state: CewState,
    pub diagnostics: Vec<CewDiagnostics>,
    /// Largest entry-wise gap between `S_T` and a fresh sum of `θ̂_s − b_s`.
    pub accumulator_audit: f64,
}

impl CewRun {
    pub fn trigger_count(&self) -> usize {
        self.state.triggers.len()
    }
}

/// Runs CEW over the environment's horizon.
pub fn cew_run<E, R>(env: &mut E, c_input: f64, delta: f64, mc_samples: usize, rng: &mut R) -> Result<CewRun>
where
    E: BanditEnv + ?Sized,
    R: Rng + ?Sized,
{
    let actions = env.actions().clone();
    let params = cew_params_with(c_input, env.horizon(), actions.dim(), delta, DEFAULT_ALPHA_CONST, mc_samples)?;
    let sampler = LogLinearSampler::new(Polytope::new(&actions)?);
    cew_run_with(env, params, &sampler, rng)
}

pub fn cew_run_with<E, R>(env: &mut E, params: CewParams, sampler: &LogLinearSampler, rng: &mut R) -> Result<CewRun>
where
    E: BanditEnv + ?Sized,
    R: Rng + ?Sized,
{
    let mut state = CewState::new(params);
    let mut diagnostics = Vec::with_capacity(env.horizon());
    let mut increments = Vec::with_capacity(env.horizon());
    while env.remaining() > 0 {
        let log = cew_round(&mut state, env, sampler, rng.gen())?;
        increments.push(&log.theta_hat - &log.bonus);
        diagnostics.push(log.diagnostics);
    }
    let recomputed = increments.iter().fold(DVector::zeros(params.dim), |acc, x| acc + x);
    let accumulator_audit = (&recomputed - &state.accumulator).amax();
    Ok(CewRun {
        record: env.record(),
        state,
        diagnostics,
        accumulator_audit,
    })
}
