//! Small dense and structured linear algebra: diagonal-plus-rank-one
//! solves, least-norm/pseudo-inverse solutions, weighted
//! sketch-and-project projections and eigenvalue helpers.
//!
//! The dense routines back the reference engine and the diagnostic
//! solvers; they are deliberately O(p³) and meant for desk-scale
//! dimensions only. The structured solve is the O(d) workhorse of the
//! GLM solvers.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::model::{GlmProblem, SparseRow};

/// Relative singular-value cutoff for pseudo-inverse truncation.
pub const PINV_CUTOFF: f64 = 1e-12;
/// Relative residual tolerance for consistency checks on solved systems.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("diagonal entry {index} is not positive ({value})")]
    NonPositiveDiagonal { index: usize, value: f64 },
    #[error("rank-one denominator {0} is numerically zero")]
    DegenerateRankOne(f64),
    #[error("system is inconsistent: residual {residual} exceeds {tol}")]
    Inconsistent { residual: f64, tol: f64 },
    #[error("metric matrix is not symmetric positive definite")]
    NotSpd,
    #[error("all eigenvalues fall below the positivity cutoff")]
    NoPositiveEigenvalue,
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

/// `Diag(diag) + scale · u uᵀ`, the shifted GLM Hessian
/// `μ I + λ ∇²R(w) + φ'' a aᵀ` in its natural representation.
#[derive(Debug, Clone)]
pub struct DiagRank1<'a> {
    pub diag: &'a [f64],
    pub scale: f64,
    pub u: &'a SparseRow,
}

impl DiagRank1<'_> {
    /// `M x` for testing round-trips.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.diag.iter().zip(x).map(|(d, v)| d * v).collect();
        let ux = self.u.dot(x);
        self.u.add_scaled_into(self.scale * ux, &mut out);
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.diag.len();
        let mut m = DMatrix::from_diagonal(&DVector::from_column_slice(self.diag));
        for (i, vi) in self.u.iter() {
            for (j, vj) in self.u.iter() {
                m[(i, j)] += self.scale * vi * vj;
            }
        }
        debug_assert_eq!(m.nrows(), d);
        m
    }
}

/// Solves `(Diag(diag) + scale · u uᵀ) x = rhs` by the Sherman–Morrison
/// identity in O(d + nnz(u)):
/// `x = D⁻¹ rhs − scale ⟨â, rhs⟩ / (1 + scale ⟨â, u⟩) · â` with `â = D⁻¹ u`.
pub fn solve_diag_rank1(m: &DiagRank1, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if m.diag.len() != rhs.len() {
        return Err(LinalgError::Shape(format!(
            "diag has {} entries, rhs has {}",
            m.diag.len(),
            rhs.len()
        )));
    }
    for (index, &value) in m.diag.iter().enumerate() {
        if !(value > 0.0) {
            return Err(LinalgError::NonPositiveDiagonal { index, value });
        }
    }
    let mut x: Vec<f64> = m.diag.iter().zip(rhs).map(|(d, r)| r / d).collect();
    if m.scale != 0.0 && m.u.nnz() > 0 {
        // â is supported on u's pattern only.
        let mut u_hat_dot_rhs = 0.0;
        let mut u_hat_dot_u = 0.0;
        for (i, v) in m.u.iter() {
            let hat = v / m.diag[i];
            u_hat_dot_rhs += hat * rhs[i];
            u_hat_dot_u += hat * v;
        }
        let denom = 1.0 + m.scale * u_hat_dot_u;
        // Cannot occur for PSD inputs; the guard documents intent.
        if denom <= 1e-14 {
            return Err(LinalgError::DegenerateRankOne(denom));
        }
        let coeff = m.scale * u_hat_dot_rhs / denom;
        for (i, v) in m.u.iter() {
            x[i] -= coeff * v / m.diag[i];
        }
    }
    Ok(x)
}

/// Moore–Penrose pseudo-inverse via SVD with relative cutoff
/// `PINV_CUTOFF · σ_max`.
pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = PINV_CUTOFF * smax;
    let u = svd.u.as_ref().expect("svd with u");
    let vt = svd.v_t.as_ref().expect("svd with v_t");
    let mut sigma_inv = DMatrix::zeros(vt.nrows(), u.ncols());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            sigma_inv[(k, k)] = 1.0 / s;
        }
    }
    vt.transpose() * sigma_inv * u.transpose()
}

/// Least-norm solution `A† b` of a consistent system, with a post-hoc
/// residual check `‖A x − b‖ ≤ RESIDUAL_TOL · ‖b‖`.
pub fn least_norm_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>, LinalgError> {
    if a.nrows() != b.len() {
        return Err(LinalgError::Shape(format!(
            "matrix has {} rows, rhs has {}",
            a.nrows(),
            b.len()
        )));
    }
    let x = pinv(a) * b;
    let residual = (a * &x - b).norm();
    let tol = RESIDUAL_TOL * b.norm();
    if residual > tol {
        return Err(LinalgError::Inconsistent { residual, tol });
    }
    Ok(x)
}

/// Weighted sketch-and-project solution
/// `x* = W⁻¹ Aᵀ S (Sᵀ A W⁻¹ Aᵀ S)† Sᵀ b`,
/// the unique minimizer of `½‖x‖²_W` subject to `Sᵀ A x = Sᵀ b`.
pub fn weighted_sketch_project(
    a: &DMatrix<f64>,
    s: &DMatrix<f64>,
    w: &DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<DVector<f64>, LinalgError> {
    if a.nrows() != s.nrows() || a.nrows() != b.len() || w.nrows() != a.ncols() {
        return Err(LinalgError::Shape(format!(
            "A is {}x{}, S is {}x{}, W is {}x{}, b has {}",
            a.nrows(),
            a.ncols(),
            s.nrows(),
            s.ncols(),
            w.nrows(),
            w.ncols(),
            b.len()
        )));
    }
    let chol = Cholesky::new(w.clone()).ok_or(LinalgError::NotSpd)?;
    let at_s = a.transpose() * s; // p × τ
    let w_inv_at_s = chol.solve(&at_s);
    let gram = at_s.transpose() * &w_inv_at_s; // τ × τ, symmetric PSD
    let stb = s.transpose() * b;
    Ok(&w_inv_at_s * (pinv(&gram) * stb))
}

/// Smallest eigenvalue strictly above `1e-10 · λ_max` of a symmetric
/// PSD matrix (symmetrized internally).
pub fn min_pos_eig(m: &DMatrix<f64>) -> Result<f64, LinalgError> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let lam_max = eig.eigenvalues.max();
    if !(lam_max > 0.0) {
        return Err(LinalgError::NoPositiveEigenvalue);
    }
    let cutoff = 1e-10 * lam_max;
    eig.eigenvalues
        .iter()
        .copied()
        .filter(|&l| l > cutoff)
        .fold(None, |acc: Option<f64>, l| {
            Some(acc.map_or(l, |a| a.min(l)))
        })
        .ok_or(LinalgError::NoPositiveEigenvalue)
}

/// `W^{-1/2}` of a symmetric positive definite matrix via its
/// eigendecomposition.
pub fn spd_inv_sqrt(w: &DMatrix<f64>) -> Result<DMatrix<f64>, LinalgError> {
    let sym = (w + w.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(LinalgError::NotSpd);
    }
    let mut scaled = eig.eigenvectors.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= 1.0 / eig.eigenvalues[k].sqrt();
    }
    Ok(&scaled * eig.eigenvectors.transpose())
}

/// Dense per-term GLM Hessian
/// `∇²f_i(w) = λ ∇²R(w) + φ''_i(⟨a_i, w⟩) a_i a_iᵀ`,
/// assembled for the desk-scale dense paths (reference engine, SNM,
/// identity-metric diagnostics).
pub fn dense_hessian_fi(problem: &GlmProblem, i: usize, w: &[f64]) -> DMatrix<f64> {
    let d = problem.d();
    let mut hess_diag = vec![0.0; d];
    problem.reg().hess_diag_into(w, &mut hess_diag);
    let (_, _, phi2) = problem.loss_at(i, problem.margin(i, w));
    let mut m = DMatrix::from_diagonal(&DVector::from_vec(hess_diag));
    let row = problem.row(i);
    for (a, va) in row.iter() {
        for (b, vb) in row.iter() {
            m[(a, b)] += phi2 * va * vb;
        }
    }
    m
}
