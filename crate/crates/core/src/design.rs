//! Approximate G-optimal designs with bounded support.
//!
//! The solver is Frank–Wolfe with away steps on `log det G(π)`, run in the
//! coordinates of the actions' span so rank-deficient sets work. By the
//! Kiefer–Wolfowitz theorem the D-optimal design is G-optimal with
//! `max_a ‖a‖²_{G⁻¹} = rank`. After convergence the smallest weights are
//! pruned greedily while the leverage stays within `2·rank`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, RangeInverse};
use crate::model::ActionSet;

/// Default Frank–Wolfe tolerance: stop once `g(π) ≤ rank·(1 + tol)`.
pub const DEFAULT_TOL: f64 = 1e-3;

const MAX_ITER: usize = 100_000;
const SPAN_TOL: f64 = 1e-8;

/// `4d·max(1, log log d) + 16`, rounded down.
pub fn support_bound(d: usize) -> usize {
    let lnln = (d as f64).ln().ln();
    let factor = if lnln.is_finite() { lnln.max(1.0) } else { 1.0 };
    (4.0 * d as f64 * factor + 16.0).floor() as usize
}

/// A sparse distribution over actions with its covariance `G(π)`.
#[derive(Debug, Clone)]
pub struct Design {
    /// `(action index, weight)`, sorted by index, all weights positive.
    weights: Vec<(usize, f64)>,
    covariance: DMatrix<f64>,
    inverse: RangeInverse,
    leverage_max: f64,
    rank: usize,
}

impl Design {
    pub fn weights(&self) -> &[(usize, f64)] {
        &self.weights
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.weights
            .binary_search_by_key(&index, |&(i, _)| i)
            .map_or(0.0, |k| self.weights[k].1)
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights.iter().map(|&(i, _)| i)
    }

    pub fn support_size(&self) -> usize {
        self.weights.len()
    }

    /// `G(π) = Σ π(a) a aᵀ`.
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// `g(π) = max_a ‖a‖²_{G(π)⁺}` over the actions the design was built on.
    pub fn leverage_max(&self) -> f64 {
        self.leverage_max
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Pseudo-inverse of `G(π)` on its range.
    pub fn inverse(&self) -> &RangeInverse {
        &self.inverse
    }

    /// `aᵀ G(π)⁺ a`; `a` must lie in the span of the design's support.
    pub fn leverage(&self, a: &DVector<f64>) -> Result<f64> {
        let residual = self.inverse.residual(a);
        if residual > SPAN_TOL {
            return Err(Error::Span { residual });
        }
        Ok(self.inverse.quad(a))
    }

    /// Draws an action index from the design using a uniform variate `u`.
    pub fn sample_with(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for &(i, w) in &self.weights {
            acc += w;
            if u < acc {
                return i;
            }
        }
        self.weights.last().map(|&(i, _)| i).unwrap_or(0)
    }

    fn from_weights(actions: &ActionSet, weights: Vec<(usize, f64)>, candidates: &[usize]) -> Self {
        let all = actions.as_slice();
        let covariance = linalg::weighted_outer_sum(
            actions.dim(),
            weights.iter().map(|&(i, w)| (w, &all[i])),
        );
        let inverse = RangeInverse::new(&covariance);
        let leverage_max = candidates
            .iter()
            .map(|&i| inverse.quad(&all[i]))
            .fold(0.0, f64::max);
        let rank = inverse.rank();
        Self {
            weights,
            covariance,
            inverse,
            leverage_max,
            rank,
        }
    }
}

/// Approximate G-optimal design over the whole action set.
pub fn g_optimal(actions: &ActionSet, tol: f64) -> Result<Design> {
    let all: Vec<usize> = (0..actions.len()).collect();
    g_optimal_subset(actions, &all, tol)
}

/// Approximate G-optimal design over `actions[indices]`; weights are keyed
/// by the original indices.
pub fn g_optimal_subset(actions: &ActionSet, indices: &[usize], tol: f64) -> Result<Design> {
    if indices.is_empty() {
        return Err(Error::Domain("cannot design over an empty action set".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance {tol} must be positive")));
    }
    for &i in indices {
        actions.get(i)?;
    }
    let mut idx = indices.to_vec();
    idx.sort_unstable();
    idx.dedup();
    let all = actions.as_slice();

    // orthonormal basis of the span
    let spread = linalg::weighted_outer_sum(actions.dim(), idx.iter().map(|&i| (1.0, &all[i])));
    let span = RangeInverse::new(&spread);
    let r = span.rank();
    if r == 0 {
        return Err(Error::Domain("actions span only the origin".into()));
    }
    let basis = span_basis(&spread, r);
    let coords: Vec<DVector<f64>> = idx.iter().map(|&i| basis.transpose() * &all[i]).collect();

    let weights = frank_wolfe(&coords, r, tol)?;
    let weights = prune(&coords, r, weights);

    let sparse: Vec<(usize, f64)> = idx
        .iter()
        .zip(&weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&i, &w)| (i, w))
        .collect();
    Ok(Design::from_weights(actions, sparse, &idx))
}

fn span_basis(m: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    let (_, vecs) = linalg::sym_eigen(m);
    let n = vecs.ncols();
    vecs.columns(n - r, r).into_owned()
}

fn leverages(coords: &[DVector<f64>], w: &[f64], r: usize) -> Option<Vec<f64>> {
    let g = linalg::weighted_outer_sum(r, coords.iter().zip(w).map(|(x, &wi)| (wi, x)));
    let chol = g.cholesky()?;
    Some(
        coords
            .iter()
            .map(|x| x.dot(&chol.solve(x)))
            .collect(),
    )
}

fn frank_wolfe(coords: &[DVector<f64>], r: usize, tol: f64) -> Result<Vec<f64>> {
    let n = coords.len();
    let rf = r as f64;
    let mut w = vec![1.0 / n as f64; n];
    for _ in 0..MAX_ITER {
        let lev = leverages(coords, &w, r)
            .ok_or_else(|| Error::Conditioning("design covariance lost rank".into()))?;
        // toward vertex: largest leverage, lowest index on ties
        let (k, g) = lev
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &l)| if l > acc.1 { (i, l) } else { acc });
        if g <= rf * (1.0 + tol) {
            return Ok(w);
        }
        // away vertex: smallest leverage within the support
        let (j, lj) = lev
            .iter()
            .enumerate()
            .filter(|(i, _)| w[*i] > 0.0)
            .fold((usize::MAX, f64::INFINITY), |acc, (i, &l)| if l < acc.1 { (i, l) } else { acc });

        if g - rf >= rf - lj || j == usize::MAX || w[j] >= 1.0 {
            let tau = (g - rf) / (rf * (g - 1.0));
            for x in w.iter_mut() {
                *x *= 1.0 - tau;
            }
            w[k] += tau;
        } else {
            let drop = -w[j] / (1.0 - w[j]);
            let tau = if lj > 1.0 {
                ((lj - rf) / (rf * (lj - 1.0))).max(drop)
            } else {
                drop
            };
            for x in w.iter_mut() {
                *x *= 1.0 - tau;
            }
            w[j] += tau;
            if tau == drop {
                w[j] = 0.0;
            }
        }
    }
    let lev = leverages(coords, &w, r).unwrap_or_default();
    let g = lev.iter().copied().fold(0.0, f64::max);
    if g <= 2.0 * rf {
        Ok(w)
    } else {
        Err(Error::Optimization {
            iterations: MAX_ITER,
            gap: g - rf,
        })
    }
}

/// Drops the smallest weights while the support exceeds its bound (or the
/// weight is negligible) and the leverage stays within `2r`.
fn prune(coords: &[DVector<f64>], r: usize, mut w: Vec<f64>) -> Vec<f64> {
    let limit = 2.0 * r as f64;
    let bound = support_bound(r);
    let mut order: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
    order.sort_by(|&a, &b| w[a].total_cmp(&w[b]).then(a.cmp(&b)));
    for i in order {
        let support = w.iter().filter(|&&x| x > 0.0).count();
        if support <= r {
            break;
        }
        if support <= bound && w[i] > 1e-9 {
            break;
        }
        let mut trial = w.clone();
        trial[i] = 0.0;
        let total: f64 = trial.iter().sum();
        trial.iter_mut().for_each(|x| *x /= total);
        if let Some(lev) = leverages(coords, &trial, r) {
            if lev.iter().all(|&l| l <= limit) {
                w = trial;
            }
        }
    }
    w
}
