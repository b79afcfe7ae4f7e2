//! Geometry of `conv(𝒜)`: affine-hull coordinates, facet enumeration and
//! barycentric decomposition.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::ActionSet;

const AFFINE_TOL: f64 = 1e-10;
const FACET_TOL: f64 = 1e-9;
/// Upper limit on the number of vertex subsets examined for facets.
pub const MAX_FACET_CANDIDATES: usize = 5_000_000;

/// `conv(𝒜)` in coordinates of its affine hull: `a = center + basis·z`.
#[derive(Debug, Clone)]
pub struct Polytope {
    center: DVector<f64>,
    basis: DMatrix<f64>,
    vertices: Vec<DVector<f64>>,
    /// Half-spaces `n·z ≤ b` describing the hull in `z` coordinates.
    facets: Vec<(DVector<f64>, f64)>,
    lower: DVector<f64>,
    upper: DVector<f64>,
    originals: Vec<DVector<f64>>,
}

impl Polytope {
    pub fn new(actions: &ActionSet) -> Result<Self> {
        let n = actions.len();
        let d = actions.dim();
        let center = actions.iter().fold(DVector::zeros(d), |acc, a| acc + a) / n as f64;
        let diffs = DMatrix::from_fn(n, d, |i, j| actions.as_slice()[i][j] - center[j]);
        let svd = diffs.svd(false, true);
        let v_t = svd.v_t.expect("requested V");
        let top = svd.singular_values.max().max(1.0);
        let mut order: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > AFFINE_TOL * top)
            .collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let k = order.len();
        let basis = DMatrix::from_fn(d, k, |r, c| v_t[(order[c], r)]);
        let vertices: Vec<DVector<f64>> = actions.iter().map(|a| basis.transpose() * (a - &center)).collect();
        let mut lower = DVector::from_element(k, f64::INFINITY);
        let mut upper = DVector::from_element(k, f64::NEG_INFINITY);
        for z in &vertices {
            for j in 0..k {
                lower[j] = lower[j].min(z[j]);
                upper[j] = upper[j].max(z[j]);
            }
        }
        let facets = if k >= 2 { enumerate_facets(&vertices, k)? } else { Vec::new() };
        Ok(Self {
            center,
            basis,
            vertices,
            facets,
            lower,
            upper,
            originals: actions.iter().cloned().collect(),
        })
    }

    /// Dimension of the affine hull.
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.center.len()
    }

    pub fn facets(&self) -> &[(DVector<f64>, f64)] {
        &self.facets
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    pub fn bounding_box(&self) -> (&DVector<f64>, &DVector<f64>) {
        (&self.lower, &self.upper)
    }

    pub fn to_ambient(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.center + &self.basis * z
    }

    /// Projects an ambient vector (e.g. a gradient) onto hull coordinates.
    pub fn project_direction(&self, g: &DVector<f64>) -> DVector<f64> {
        self.basis.transpose() * g
    }

    pub fn contains_local(&self, z: &DVector<f64>) -> bool {
        match self.dim() {
            0 => true,
            1 => z[0] >= self.lower[0] - FACET_TOL && z[0] <= self.upper[0] + FACET_TOL,
            _ => self.facets.iter().all(|(n, b)| n.dot(z) <= b + FACET_TOL),
        }
    }

    /// `[t⁻, t⁺]` such that `z + t·u` stays in the hull.
    pub fn chord(&self, z: &DVector<f64>, u: &DVector<f64>) -> (f64, f64) {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (n, b) in &self.facets {
            let nu = n.dot(u);
            let slack = b - n.dot(z);
            if nu > 1e-15 {
                hi = hi.min(slack / nu);
            } else if nu < -1e-15 {
                lo = lo.max(slack / nu);
            }
        }
        (lo.min(0.0), hi.max(0.0))
    }

    /// Weights `λ ∈ Δ(𝒜)` with `Σ λ_i a_i = a`, solved as an `ℓ₁`-residual LP.
    pub fn barycentric(&self, a: &DVector<f64>) -> Result<Vec<f64>> {
        let n = self.originals.len();
        if n == 1 {
            return Ok(vec![1.0]);
        }
        let d = a.len();
        let mut lp = Problem::new(OptimizationDirection::Minimize);
        let lambda: Vec<_> = (0..n).map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
        for j in 0..d {
            let plus = lp.add_var(1.0, (0.0, f64::INFINITY));
            let minus = lp.add_var(1.0, (0.0, f64::INFINITY));
            let mut terms: Vec<_> = lambda.iter().enumerate().map(|(i, &v)| (v, self.originals[i][j])).collect();
            terms.push((plus, -1.0));
            terms.push((minus, 1.0));
            lp.add_constraint(terms, ComparisonOp::Eq, a[j]);
        }
        lp.add_constraint(lambda.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
        let sol = lp
            .solve()
            .map_err(|e| Error::Domain(format!("barycentric decomposition failed: {e}")))?;
        let mut w: Vec<f64> = lambda.iter().map(|&v| sol[v].max(0.0)).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        Ok(w)
    }
}

/// Brute-force facet enumeration over `k`-subsets of the vertices; fine for
/// the small vertex counts and dimensions the sampler is used with.
fn enumerate_facets(vertices: &[DVector<f64>], k: usize) -> Result<Vec<(DVector<f64>, f64)>> {
    let n = vertices.len();
    let candidates = binomial(n, k);
    if candidates > MAX_FACET_CANDIDATES as f64 {
        return Err(Error::Capacity {
            message: format!("facet enumeration over C({n},{k}) subsets"),
            achieved: 0,
        });
    }
    let mut facets: Vec<(DVector<f64>, f64)> = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if let Some((normal, b)) = hyperplane(vertices, &idx, k) {
            let side: Vec<f64> = vertices.iter().map(|v| normal.dot(v) - b).collect();
            let sign = if side.iter().all(|&s| s <= FACET_TOL) {
                Some(1.0)
            } else if side.iter().all(|&s| s >= -FACET_TOL) {
                Some(-1.0)
            } else {
                None
            };
            if let Some(s) = sign {
                let (normal, b) = (normal * s, b * s);
                let duplicate = facets
                    .iter()
                    .any(|(m, c)| (m - &normal).amax() < 1e-9 && (c - b).abs() < 1e-9);
                if !duplicate {
                    facets.push((normal, b));
                }
            }
        }
        // next combination
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(facets);
            }
            i -= 1;
            if idx[i] < n - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn hyperplane(vertices: &[DVector<f64>], idx: &[usize], k: usize) -> Option<(DVector<f64>, f64)> {
    let base = &vertices[idx[0]];
    let diffs = DMatrix::from_fn(k, k, |r, c| if r + 1 < k { vertices[idx[r + 1]][c] - base[c] } else { 0.0 });
    let svd = diffs.svd(false, true);
    let v_t = svd.v_t?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let scale = svd.singular_values[order[0]].max(1e-300);
    if k > 1 && svd.singular_values[order[k - 2]] <= 1e-9 * scale {
        return None;
    }
    let normal: DVector<f64> = v_t.row(order[k - 1]).transpose();
    let b = normal.dot(base);
    Some((normal, b))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
