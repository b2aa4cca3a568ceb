//! SNM: the stochastic Newton method built on variable splitting.
//!
//! Each data point keeps its own copy `α_i` of the iterate. A step
//! solves the full Newton system assembled *at the copies*,
//!
//! `w ← (Σ ∇²f_i(α_i))⁻¹ Σ [∇²f_i(α_i) α_i − ∇f_i(α_i)]`,
//!
//! then refreshes one sampled copy `α_j ← w`. Both sums are maintained
//! incrementally: two Sherman–Morrison rank-one updates on the inverse
//! for L2 regularizers, a dense refactorization otherwise. Building the
//! initial sums costs one effective pass, which the pass counter
//! reports honestly.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::SeedableRng;
use rand_pcg::Pcg64;

use crate::model::GlmProblem;
use crate::solvers::{draw_index, SolverError};

pub struct SnmState {
    w: Vec<f64>,
    alphas: Vec<f64>,
    /// Σ ∇²f_i(α_i); kept only on the dense-refactorization path.
    hess_sum: Option<DMatrix<f64>>,
    /// (Σ ∇²f_i(α_i))⁻¹; kept only on the L2 rank-one-update path.
    hess_inv: Option<DMatrix<f64>>,
    /// Σ [∇²f_i(α_i) α_i − ∇f_i(α_i)]
    rhs_sum: DVector<f64>,
    rng: Pcg64,
    accesses: u64,
    n: usize,
    d: usize,
}

/// Per-point right-hand-side contribution `∇²f_i(α) α − ∇f_i(α)`.
///
/// Separability gives `λ(R''(α) ⊙ α − R'(α)) + (φ''(r) r − φ'(r)) a`
/// with `r = ⟨a, α⟩`; the regularizer part vanishes identically for L2.
fn rhs_contribution(problem: &GlmProblem, i: usize, alpha: &[f64]) -> DVector<f64> {
    let d = problem.d();
    let reg = problem.reg();
    let row = problem.row(i);
    let r = row.dot(alpha);
    let (_, phi1, phi2) = problem.loss_at(i, r);
    let mut out = DVector::zeros(d);
    if !reg.is_l2() {
        for k in 0..d {
            let (_, r1, r2) = reg.point(alpha[k]);
            out[k] = r2 * alpha[k] - r1;
        }
    }
    let c = phi2 * r - phi1;
    for (k, v) in row.iter() {
        out[k] += c * v;
    }
    out
}

fn add_hess_contribution(m: &mut DMatrix<f64>, problem: &GlmProblem, i: usize, alpha: &[f64], sign: f64) {
    let reg = problem.reg();
    let row = problem.row(i);
    let (_, _, phi2) = problem.loss_at(i, row.dot(alpha));
    for k in 0..problem.d() {
        m[(k, k)] += sign * reg.point(alpha[k]).2;
    }
    for (a, va) in row.iter() {
        for (b, vb) in row.iter() {
            m[(a, b)] += sign * phi2 * va * vb;
        }
    }
}

/// Sherman–Morrison update of a maintained inverse:
/// `(K + c a aᵀ)⁻¹ = K⁻¹ − c (K⁻¹a)(K⁻¹a)ᵀ / (1 + c aᵀ K⁻¹ a)`.
fn sherman_morrison_inverse(
    inv: &mut DMatrix<f64>,
    a: &DVector<f64>,
    c: f64,
) -> Result<(), SolverError> {
    if c == 0.0 {
        return Ok(());
    }
    let ka = &*inv * a;
    let denom = 1.0 + c * a.dot(&ka);
    if denom.abs() <= 1e-14 {
        return Err(SolverError::SingularHessianSum);
    }
    let coeff = c / denom;
    // inv -= coeff * ka kaᵀ
    for r in 0..inv.nrows() {
        for s in 0..inv.ncols() {
            inv[(r, s)] -= coeff * ka[r] * ka[s];
        }
    }
    Ok(())
}

impl SnmState {
    pub fn new(problem: &GlmProblem, seed: u64) -> Result<Self, SolverError> {
        let (n, d) = (problem.n(), problem.d());
        let mut state = SnmState {
            w: vec![0.0; d],
            alphas: vec![0.0; n * d],
            hess_sum: None,
            hess_inv: None,
            rhs_sum: DVector::zeros(d),
            rng: Pcg64::seed_from_u64(seed),
            accesses: 0,
            n,
            d,
        };
        state.rebuild_sums(problem)?;
        Ok(state)
    }

    /// Recomputes both maintained sums from scratch; costs one pass.
    fn rebuild_sums(&mut self, problem: &GlmProblem) -> Result<(), SolverError> {
        let mut hess = DMatrix::zeros(self.d, self.d);
        let mut rhs = DVector::zeros(self.d);
        for i in 0..self.n {
            let alpha = self.alpha(i).to_vec();
            add_hess_contribution(&mut hess, problem, i, &alpha, 1.0);
            rhs += rhs_contribution(problem, i, &alpha);
        }
        self.accesses += self.n as u64;
        self.rhs_sum = rhs;
        if problem.reg().is_l2() {
            let chol = Cholesky::new(hess).ok_or(SolverError::SingularHessianSum)?;
            self.hess_inv = Some(chol.inverse());
            self.hess_sum = None;
        } else {
            self.hess_sum = Some(hess);
            self.hess_inv = None;
        }
        Ok(())
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn alpha(&self, i: usize) -> &[f64] {
        &self.alphas[i * self.d..(i + 1) * self.d]
    }

    pub fn data_accesses(&self) -> u64 {
        self.accesses
    }

    pub fn add_accesses(&mut self, k: u64) {
        self.accesses += k;
    }

    /// Overrides the copies (testing hook) and rebuilds the sums.
    pub fn set_state(&mut self, problem: &GlmProblem, alphas: &[Vec<f64>]) -> Result<(), SolverError> {
        assert_eq!(alphas.len(), self.n);
        for (i, a) in alphas.iter().enumerate() {
            self.alphas[i * self.d..(i + 1) * self.d].copy_from_slice(a);
        }
        self.rebuild_sums(problem)
    }

    pub fn step(&mut self, problem: &GlmProblem) -> Result<(), SolverError> {
        let w_new = match (&self.hess_inv, &self.hess_sum) {
            (Some(inv), _) => inv * &self.rhs_sum,
            (None, Some(sum)) => Cholesky::new(sum.clone())
                .ok_or(SolverError::SingularHessianSum)?
                .solve(&self.rhs_sum),
            (None, None) => unreachable!("one representation is always maintained"),
        };
        self.w.copy_from_slice(w_new.as_slice());

        let j = draw_index(&mut self.rng, self.n);
        self.accesses += 1;
        let old = self.alpha(j).to_vec();

        self.rhs_sum -= rhs_contribution(problem, j, &old);
        self.rhs_sum += rhs_contribution(problem, j, &self.w);

        let row = problem.row(j);
        if let Some(inv) = self.hess_inv.as_mut() {
            let mut a = DVector::zeros(self.d);
            for (k, v) in row.iter() {
                a[k] = v;
            }
            let phi2_old = problem.loss_at(j, row.dot(&old)).2;
            let phi2_new = problem.loss_at(j, row.dot(&self.w)).2;
            sherman_morrison_inverse(inv, &a, -phi2_old)?;
            sherman_morrison_inverse(inv, &a, phi2_new)?;
        } else {
            let hess = self.hess_sum.as_mut().expect("dense path keeps the sum");
            add_hess_contribution(hess, problem, j, &old, -1.0);
            let w = self.w.clone();
            add_hess_contribution(hess, problem, j, &w, 1.0);
        }

        self.alphas[j * self.d..(j + 1) * self.d].copy_from_slice(&self.w);
        Ok(())
    }
}
