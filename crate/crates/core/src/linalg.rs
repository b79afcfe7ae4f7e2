//! Dense symmetric-matrix utilities shared by the design, FTRL and CEW code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Minimum-eigenvalue tolerance for PSD checks.
pub const PSD_TOL: f64 = 1e-8;

/// Relative eigenvalue cutoff used when restricting to a matrix's range.
pub const RANK_CUTOFF: f64 = 1e-10;

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigen-decomposition of the symmetric part of `m`, eigenvalues ascending.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

pub fn lambda_min(m: &DMatrix<f64>) -> f64 {
    sym_eigen(m).0.min()
}

pub fn lambda_max(m: &DMatrix<f64>) -> f64 {
    sym_eigen(m).0.max()
}

pub fn is_psd(m: &DMatrix<f64>) -> bool {
    lambda_min(m) >= -PSD_TOL
}

/// `a ⪰ b` in the Loewner order, up to [`PSD_TOL`].
pub fn dominates(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    is_psd(&(a - b))
}

/// Applies `f` to the eigenvalues of a symmetric matrix.
pub fn spectral_map(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen(m);
    let mapped = DMatrix::from_diagonal(&vals.map(f));
    symmetrize(&(&vecs * mapped * vecs.transpose()))
}

/// Inverse of a symmetric positive-definite matrix; fails when
/// `λ_min < min_eig`.
pub fn spd_inverse(m: &DMatrix<f64>, min_eig: f64) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sym_eigen(m);
    let lo = vals.min();
    if !(lo >= min_eig) {
        return Err(Error::Conditioning(format!(
            "minimum eigenvalue {lo:.3e} below {min_eig:.1e}"
        )));
    }
    let inv = DMatrix::from_diagonal(&vals.map(|v| 1.0 / v));
    Ok(symmetrize(&(&vecs * inv * vecs.transpose())))
}

pub fn log_det_spd(m: &DMatrix<f64>) -> f64 {
    sym_eigen(m).0.iter().map(|v| v.ln()).sum()
}

/// Pseudo-inverse of a PSD matrix restricted to its numerical range.
///
/// Eigenvalues below `RANK_CUTOFF * λ_max` are treated as zero; `basis`
/// holds an orthonormal basis of the retained range.
#[derive(Debug, Clone)]
pub struct RangeInverse {
    basis: DMatrix<f64>,
    inv_vals: DVector<f64>,
}

impl RangeInverse {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let (vals, vecs) = sym_eigen(m);
        let top = vals.max().max(0.0);
        let keep: Vec<usize> = (0..vals.len())
            .filter(|&i| top > 0.0 && vals[i] > RANK_CUTOFF * top)
            .collect();
        let mut basis = DMatrix::zeros(m.nrows(), keep.len());
        for (j, &i) in keep.iter().enumerate() {
            basis.set_column(j, &vecs.column(i));
        }
        let inv_vals = DVector::from_iterator(keep.len(), keep.iter().map(|&i| 1.0 / vals[i]));
        Self { basis, inv_vals }
    }

    pub fn rank(&self) -> usize {
        self.inv_vals.len()
    }

    /// Distance from `v` to the retained range.
    pub fn residual(&self, v: &DVector<f64>) -> f64 {
        let coords = self.basis.transpose() * v;
        (v - &self.basis * coords).norm()
    }

    /// `M⁺ v`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let coords = self.basis.transpose() * v;
        &self.basis * coords.component_mul(&self.inv_vals)
    }

    /// `vᵀ M⁺ v`.
    pub fn quad(&self, v: &DVector<f64>) -> f64 {
        let coords = self.basis.transpose() * v;
        coords
            .iter()
            .zip(self.inv_vals.iter())
            .map(|(c, w)| c * c * w)
            .sum()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        &self.basis * DMatrix::from_diagonal(&self.inv_vals) * self.basis.transpose()
    }
}

/// `Σ w_i x_i x_iᵀ`.
pub fn weighted_outer_sum<'a>(
    dim: usize,
    items: impl IntoIterator<Item = (f64, &'a DVector<f64>)>,
) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(dim, dim);
    for (w, x) in items {
        out.ger(w, x, x, 1.0);
    }
    out
}
