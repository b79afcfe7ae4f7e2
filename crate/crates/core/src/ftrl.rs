//! FTRL with a log-determinant barrier over lifted covariance matrices,
//! for adversarial linear bandits under the weak corruption measure `C∞`.
//!
//! Each round solves
//!
//! ```text
//! max_{p' ∈ Δ(𝒜)}  η⟨Ĉov(p), Θ_{t−1}⟩ + log det Ĉov(p),   p = (1−γ)p' + γρ
//! Θ_{t−1} = [[α B_{t−1}, ½ Σ_s θ̂_s], [½ Σ_s θ̂_sᵀ, 0]]
//! ```
//!
//! with Frank–Wolfe (away steps, exact line search), samples `a_t ~ p_t`,
//! forms `θ̂_t = Σ_t⁻¹ a_t r_t` and updates the bonus matrix
//! `B_t = Bonus(B_{t−1}, Σ_t)`. `ρ` is the G-optimal exploration design.
//! The previous round's bonus enters `Θ`, so no fixed point is solved.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::{self, Design};
use crate::env::BanditEnv;
use crate::error::{Error, Result};
use crate::linalg::{self, RangeInverse};
use crate::model::{ActionSet, RunRecord};

/// Smallest eigenvalue accepted for a covariance that must be inverted.
pub const MIN_EIG: f64 = 1e-12;
/// Frank–Wolfe duality-gap target.
pub const GAP_TOL: f64 = 1e-6;
pub const MAX_ITER: usize = 10_000;

/// Positive-semidefinite bonus matrix, monotone under [`bonus`].
#[derive(Debug, Clone, PartialEq)]
pub struct BonusMatrix {
    matrix: DMatrix<f64>,
    updates: usize,
}

impl BonusMatrix {
    pub fn zero(d: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(d, d),
            updates: 0,
        }
    }

    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Shape("bonus matrix must be square".into()));
        }
        if !linalg::is_psd(&matrix) {
            return Err(Error::Invariant("bonus matrix must be PSD".into()));
        }
        Ok(Self {
            matrix: linalg::symmetrize(&matrix),
            updates: 0,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn updates(&self) -> usize {
        self.updates
    }
}

/// The minimal update dominating both `B` and `Σ⁻¹`.
///
/// If `B ⪯ Σ⁻¹` the result is `Σ⁻¹`. Otherwise, with
/// `B^{−½} Σ⁻¹ B^{−½} = Σ λ_i v_i v_iᵀ`, the result is
/// `B^{½} (Σ max{λ_i, 1} v_i v_iᵀ) B^{½}`. The same construction taken on
/// the `Σ` side yields the same matrix; whichever of `B` and `Σ` is better
/// conditioned is used, which also covers a singular `B`.
pub fn bonus(b: &BonusMatrix, sigma: &DMatrix<f64>) -> Result<BonusMatrix> {
    let d = b.matrix.nrows();
    if sigma.nrows() != d || sigma.ncols() != d {
        return Err(Error::Shape(format!(
            "Σ is {}x{}, bonus is {d}x{d}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let sigma_inv = linalg::spd_inverse(sigma, MIN_EIG)?;
    let next = if linalg::lambda_min(&(&sigma_inv - &b.matrix)) >= 0.0 {
        sigma_inv
    } else {
        let (bvals, _) = linalg::sym_eigen(&b.matrix);
        let (svals, _) = linalg::sym_eigen(sigma);
        let cond_b = if bvals.min() > MIN_EIG * bvals.max().max(1.0) {
            bvals.max() / bvals.min()
        } else {
            f64::INFINITY
        };
        if cond_b <= svals.max() / svals.min() {
            let root = linalg::spectral_map(&b.matrix, f64::sqrt);
            let inv_root = linalg::spectral_map(&b.matrix, |v| 1.0 / v.sqrt());
            let inner = linalg::spectral_map(&(&inv_root * &sigma_inv * &inv_root), |l| l.max(1.0));
            linalg::symmetrize(&(&root * inner * &root))
        } else {
            let s_root = linalg::spectral_map(sigma, f64::sqrt);
            let s_inv_root = linalg::spectral_map(sigma, |v| 1.0 / v.sqrt());
            let inner = linalg::spectral_map(&(&s_root * &b.matrix * &s_root), |m| m.max(1.0));
            linalg::symmetrize(&(&s_inv_root * inner * &s_inv_root))
        }
    };
    Ok(BonusMatrix {
        matrix: next,
        updates: b.updates + 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FtrlParams {
    pub alpha: f64,
    pub eta: f64,
    pub gamma: f64,
    pub c_inf: f64,
    pub horizon: usize,
    pub delta: f64,
}

impl FtrlParams {
    /// `α = max{C∞/√(d log T), √T}`, `η = min{√(log T)/(16 C∞), √(log T / T)}`,
    /// `γ = min{d/√T, 1/2}`; `log T` is floored at `log 2`.
    pub fn new(c_inf: f64, horizon: usize, d: usize, delta: f64) -> Result<Self> {
        if !(c_inf >= 0.0) {
            return Err(Error::Domain(format!("C∞ = {c_inf} must be non-negative")));
        }
        let t = horizon.max(1) as f64;
        let log_t = t.max(2.0).ln();
        let alpha = (c_inf / (d as f64 * log_t).sqrt()).max(t.sqrt());
        let eta_corr = if c_inf > 0.0 {
            log_t.sqrt() / (16.0 * c_inf)
        } else {
            f64::INFINITY
        };
        let eta = eta_corr.min((log_t / t).sqrt());
        let gamma = (d as f64 / t.sqrt()).min(0.5);
        Ok(Self {
            alpha,
            eta,
            gamma,
            c_inf,
            horizon,
            delta,
        })
    }
}

/// Output of one FTRL solve.
#[derive(Debug, Clone)]
pub struct FtrlStep {
    /// Played distribution `p_t = (1−γ)p' + γρ`.
    pub p: Vec<f64>,
    /// The free component `p'` (warm start for the next round).
    pub p_free: Vec<f64>,
    /// `Σ_t = Σ_a p_t(a) a aᵀ`.
    pub sigma: DMatrix<f64>,
    /// `Ĉov(p_t)`, bottom-right entry 1.
    pub lifted: DMatrix<f64>,
    pub duality_gap: f64,
    pub iterations: usize,
    pub objective: f64,
}

/// Objective of the FTRL step, restricted to the span of the lifted
/// actions so that `log det` stays finite when that span is lower
/// dimensional.
pub struct FtrlObjective {
    coords: Vec<DVector<f64>>,
    linear: Vec<f64>,
    explore: Vec<f64>,
    gamma: f64,
    eta: f64,
}

impl FtrlObjective {
    pub fn new(
        actions: &ActionSet,
        estimate_sum: &DVector<f64>,
        bonus: &BonusMatrix,
        params: &FtrlParams,
        exploration: &Design,
    ) -> Result<Self> {
        let d = actions.dim();
        if estimate_sum.len() != d || bonus.matrix.nrows() != d {
            return Err(Error::Shape("estimator sum / bonus dimension mismatch".into()));
        }
        let lifted: Vec<DVector<f64>> = actions.iter().map(lift).collect();
        let spread = linalg::weighted_outer_sum(d + 1, lifted.iter().map(|z| (1.0, z)));
        let range = RangeInverse::new(&spread);
        let q = range.rank();
        let (_, vecs) = linalg::sym_eigen(&spread);
        let basis = vecs.columns(d + 1 - q, q).into_owned();
        let coords = lifted.iter().map(|z| basis.transpose() * z).collect();
        let linear = actions
            .iter()
            .map(|a| params.alpha * a.dot(&(&bonus.matrix * a)) + a.dot(estimate_sum))
            .collect();
        let mut explore = vec![0.0; actions.len()];
        for &(i, w) in exploration.weights() {
            explore[i] = w;
        }
        Ok(Self {
            coords,
            linear,
            explore,
            gamma: params.gamma,
            eta: params.eta,
        })
    }

    pub fn mix(&self, p_free: &[f64]) -> Vec<f64> {
        p_free
            .iter()
            .zip(&self.explore)
            .map(|(f, e)| (1.0 - self.gamma) * f + self.gamma * e)
            .collect()
    }

    fn lifted_cov(&self, p: &[f64]) -> DMatrix<f64> {
        let q = self.coords.first().map_or(0, |c| c.len());
        linalg::weighted_outer_sum(q, p.iter().zip(&self.coords).map(|(&w, z)| (w, z)))
    }

    /// `η Σ_a p(a) c_a + log det Ĉov(p)` on the lifted span; `−∞` if singular.
    pub fn value(&self, p_free: &[f64]) -> f64 {
        let p = self.mix(p_free);
        let lin: f64 = p.iter().zip(&self.linear).map(|(w, c)| w * c).sum();
        match self.lifted_cov(&p).cholesky() {
            Some(ch) => self.eta * lin + 2.0 * ch.l().diagonal().iter().map(|x| x.ln()).sum::<f64>(),
            None => f64::NEG_INFINITY,
        }
    }
}

fn lift(a: &DVector<f64>) -> DVector<f64> {
    let d = a.len();
    DVector::from_fn(d + 1, |i, _| if i < d { a[i] } else { 1.0 })
}

/// One FTRL solve: Frank–Wolfe with away steps over `p'`.
pub fn ftrl_step(
    estimate_sum: &DVector<f64>,
    bonus_prev: &BonusMatrix,
    params: &FtrlParams,
    actions: &ActionSet,
    exploration: &Design,
    warm_start: Option<&[f64]>,
) -> Result<FtrlStep> {
    let obj = FtrlObjective::new(actions, estimate_sum, bonus_prev, params, exploration)?;
    let n = actions.len();
    let mut w: Vec<f64> = match warm_start {
        Some(ws) if ws.len() == n => ws.to_vec(),
        _ => vec![1.0 / n as f64; n],
    };
    let scale = 1.0 - obj.gamma;
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        let p = obj.mix(&w);
        let h = obj.lifted_cov(&p);
        let chol = h
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Conditioning("lifted covariance is singular".into()))?;
        let grad: Vec<f64> = obj
            .coords
            .iter()
            .zip(&obj.linear)
            .map(|(z, c)| scale * (obj.eta * c + z.dot(&chol.solve(z))))
            .collect();
        let mean_grad: f64 = w.iter().zip(&grad).map(|(a, g)| a * g).sum();
        let (k, gk) = argmax(&grad, |_| true);
        gap = gk - mean_grad;
        if gap <= GAP_TOL {
            break;
        }
        let (j, gj) = argmin(&grad, |i| w[i] > 0.0);
        iterations += 1;
        let toward = gk - mean_grad >= mean_grad - gj || w[j] >= 1.0;
        // direction in p'-space, as (vertex, sign, max step)
        let (vertex, sign, max_step) = if toward {
            (k, 1.0, 1.0)
        } else {
            (j, -1.0, w[j] / (1.0 - w[j]))
        };
        // H(τ) = H + τ·sign·scale·(z z ᵀ − H_free)
        let h_free = obj.lifted_cov(&w);
        let zv = &obj.coords[vertex];
        let dir = (zv * zv.transpose() - h_free) * (sign * scale);
        let lin_slope = sign
            * scale
            * obj.eta
            * (obj.linear[vertex] - w.iter().zip(&obj.linear).map(|(a, c)| a * c).sum::<f64>());
        let l_inv = chol
            .l()
            .try_inverse()
            .ok_or_else(|| Error::Conditioning("Cholesky factor not invertible".into()))?;
        let mu = linalg::sym_eigen(&(&l_inv * dir * l_inv.transpose())).0;
        let tau = line_search(lin_slope, mu.as_slice(), max_step);
        if tau <= 0.0 {
            break;
        }
        for x in w.iter_mut() {
            *x *= 1.0 - sign * tau;
        }
        w[vertex] += sign * tau;
        if !toward && (tau - max_step).abs() <= 1e-15 * max_step.max(1.0) {
            w[vertex] = 0.0;
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x = x.max(0.0) / total);
    }
    if gap > GAP_TOL {
        return Err(Error::Optimization { iterations, gap });
    }
    let p = obj.mix(&w);
    let d = actions.dim();
    let sigma = linalg::weighted_outer_sum(d, p.iter().zip(actions.iter()).map(|(&pi, a)| (pi, a)));
    let lifted = lifted_cov_full(&p, actions);
    let objective = obj.value(&w);
    Ok(FtrlStep {
        p,
        p_free: w,
        sigma,
        lifted,
        duality_gap: gap,
        iterations,
        objective,
    })
}

/// `Ĉov(p) = E_{a∼p}[(a,1)(a,1)ᵀ]`.
pub fn lifted_cov_full(p: &[f64], actions: &ActionSet) -> DMatrix<f64> {
    let d = actions.dim();
    let lifted: Vec<DVector<f64>> = actions.iter().map(lift).collect();
    linalg::weighted_outer_sum(d + 1, p.iter().zip(&lifted).map(|(&w, z)| (w, z)))
}

fn argmax(v: &[f64], keep: impl Fn(usize) -> bool) -> (usize, f64) {
    v.iter()
        .enumerate()
        .filter(|(i, _)| keep(*i))
        .fold((usize::MAX, f64::NEG_INFINITY), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc })
}

fn argmin(v: &[f64], keep: impl Fn(usize) -> bool) -> (usize, f64) {
    v.iter()
        .enumerate()
        .filter(|(i, _)| keep(*i))
        .fold((usize::MAX, f64::INFINITY), |acc, (i, &x)| if x < acc.1 { (i, x) } else { acc })
}

/// Maximizes `τ·slope + Σ log(1 + τ μ_i)` over `[0, max_step]`.
fn line_search(slope: f64, mu: &[f64], max_step: f64) -> f64 {
    let deriv = |tau: f64| -> f64 {
        let mut s = slope;
        for &m in mu {
            let den = 1.0 + tau * m;
            if den <= 0.0 {
                return f64::NEG_INFINITY;
            }
            s += m / den;
        }
        s
    };
    if deriv(0.0) <= 0.0 {
        return 0.0;
    }
    if deriv(max_step) >= 0.0 {
        return max_step;
    }
    let (mut lo, mut hi) = (0.0, max_step);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if deriv(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * max_step.max(1e-300) {
            break;
        }
    }
    lo
}

/// `θ̂ = Σ⁻¹ a r`.
pub fn estimate_theta(sigma: &DMatrix<f64>, action: &DVector<f64>, reward: f64) -> Result<DVector<f64>> {
    let (vals, _) = linalg::sym_eigen(sigma);
    if !(vals.min() >= MIN_EIG) {
        return Err(Error::Conditioning(format!(
            "Σ has minimum eigenvalue {:.3e}",
            vals.min()
        )));
    }
    let chol = sigma
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Conditioning("Σ is not positive definite".into()))?;
    Ok(chol.solve(action) * reward)
}

/// Per-round audit quantities kept when [`LogdetOptions::audit`] is set.
#[derive(Debug, Clone, Default)]
pub struct LogdetAudit {
    /// `Σ_t⁻¹` for every round.
    pub sigma_inverses: Vec<DMatrix<f64>>,
    /// `(Tr(Σ_t(B_t − B_{t−1})), log det B_t − log det B_{t−1})` for `t ≥ 2`.
    pub telescoping: Vec<(f64, f64)>,
    /// `min_a (p_t(a) − γ ρ(a))` per round.
    pub feasibility_slack: Vec<f64>,
    pub max_duality_gap: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LogdetOptions {
    pub audit: bool,
}

#[derive(Debug, Clone)]
pub struct LogdetRun {
    pub record: RunRecord,
    pub params: FtrlParams,
    pub final_bonus: BonusMatrix,
    pub audit: Option<LogdetAudit>,
    /// `p_1`, the first round's distribution.
    pub first_distribution: Vec<f64>,
}

/// Full FTRL loop over the environment's horizon.
pub fn logdet_run<E, R>(
    env: &mut E,
    c_inf_input: f64,
    delta: f64,
    options: LogdetOptions,
    rng: &mut R,
) -> Result<LogdetRun>
where
    E: BanditEnv + ?Sized,
    R: Rng + ?Sized,
{
    let actions = env.actions().clone();
    let d = actions.dim();
    let horizon = env.horizon();
    let params = FtrlParams::new(c_inf_input, horizon, d, delta)?;
    let exploration = design::g_optimal(&actions, design::DEFAULT_TOL)?;
    if exploration.rank() < d {
        return Err(Error::Domain("log-det FTRL needs an action set spanning R^d".into()));
    }
    let mut explore = vec![0.0; actions.len()];
    for &(i, w) in exploration.weights() {
        explore[i] = w;
    }
    let mut bonus_prev = BonusMatrix::zero(d);
    let mut estimate_sum = DVector::zeros(d);
    let mut warm: Option<Vec<f64>> = None;
    let mut audit = options.audit.then(LogdetAudit::default);
    let mut first_distribution = Vec::new();

    while env.remaining() > 0 {
        let step = ftrl_step(
            &estimate_sum,
            &bonus_prev,
            &params,
            &actions,
            &exploration,
            warm.as_deref(),
        )?;
        let bonus_next = bonus(&bonus_prev, &step.sigma)?;
        if first_distribution.is_empty() {
            first_distribution = step.p.clone();
        }
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = actions.len() - 1;
        for (i, &pi) in step.p.iter().enumerate() {
            acc += pi;
            if u < acc {
                chosen = i;
                break;
            }
        }
        let reward = env.pull(chosen)?;
        let theta_hat = estimate_theta(&step.sigma, &actions.as_slice()[chosen], reward)?;
        estimate_sum += theta_hat;

        if let Some(audit) = audit.as_mut() {
            audit.sigma_inverses.push(linalg::spd_inverse(&step.sigma, MIN_EIG)?);
            if bonus_prev.updates > 0 {
                let trace = (&step.sigma * (bonus_next.matrix() - bonus_prev.matrix())).trace();
                let logdet = linalg::log_det_spd(bonus_next.matrix()) - linalg::log_det_spd(bonus_prev.matrix());
                audit.telescoping.push((trace, logdet));
            }
            let slack = step
                .p
                .iter()
                .zip(&explore)
                .map(|(p, e)| p - params.gamma * e)
                .fold(f64::INFINITY, f64::min);
            audit.feasibility_slack.push(slack);
            audit.max_duality_gap = audit.max_duality_gap.max(step.duality_gap);
        }
        bonus_prev = bonus_next;
        warm = Some(step.p_free);
    }
    Ok(LogdetRun {
        record: env.record(),
        params,
        final_bonus: bonus_prev,
        audit,
        first_distribution,
    })
}
