//! SAN-id: the SAN projection taken under the plain Euclidean metric
//! instead of the sampled-Hessian metric.
//!
//! A diagnostic variant: the Newton branch solves a dense `d × d`
//! system `(I + ∇²f_j(w)²) δ = α_j - ∇f_j(w)` rather than an O(d)
//! structured one, so it is capped at desk-scale dimensions.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::SeedableRng;
use rand_pcg::Pcg64;

use crate::linalg::dense_hessian_fi;
use crate::model::GlmProblem;
use crate::solvers::{draw_san_event, SolverError};
use crate::vecops::{axpy, scale};

pub struct SanIdState {
    w: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bar: Vec<f64>,
    gamma: f64,
    p: f64,
    rng: Pcg64,
    accesses: u64,
    n: usize,
    d: usize,
}

impl SanIdState {
    pub fn new(problem: &GlmProblem, gamma: f64, p: f64, seed: u64) -> Self {
        let (n, d) = (problem.n(), problem.d());
        SanIdState {
            w: vec![0.0; d],
            alphas: vec![0.0; n * d],
            alpha_bar: vec![0.0; d],
            gamma,
            p,
            rng: Pcg64::seed_from_u64(seed),
            accesses: 0,
            n,
            d,
        }
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

    pub fn set_state(&mut self, w: &[f64], alphas: &[Vec<f64>]) {
        self.w.copy_from_slice(w);
        self.alpha_bar.fill(0.0);
        for (i, a) in alphas.iter().enumerate() {
            self.alphas[i * self.d..(i + 1) * self.d].copy_from_slice(a);
            axpy(1.0 / self.n as f64, a, &mut self.alpha_bar);
        }
    }

    pub fn step(&mut self, problem: &GlmProblem) -> Result<(), SolverError> {
        match draw_san_event(&mut self.rng, self.p, self.n) {
            None => {
                for i in 0..self.n {
                    let start = i * self.d;
                    for k in 0..self.d {
                        self.alphas[start + k] -= self.gamma * self.alpha_bar[k];
                    }
                }
                scale(1.0 - self.gamma, &mut self.alpha_bar);
            }
            Some(j) => {
                let hess = dense_hessian_fi(problem, j, &self.w);
                let grad = problem.grad_fi(j, &self.w)?;
                // residual α_j - ∇f_j(w)
                let res = DVector::from_fn(self.d, |k, _| self.alpha(j)[k] - grad[k]);
                let m = DMatrix::identity(self.d, self.d) + &hess * &hess;
                let delta = Cholesky::new(m)
                    .ok_or(SolverError::SingularHessianSum)?
                    .solve(&res);
                // α_j ← α_j - γδ;  w ← w + γ H δ
                let w_move = &hess * &delta;
                let start = j * self.d;
                for k in 0..self.d {
                    self.alphas[start + k] -= self.gamma * delta[k];
                    self.w[k] += self.gamma * w_move[k];
                    self.alpha_bar[k] -= self.gamma / self.n as f64 * delta[k];
                }
                self.accesses += 1;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Loss, Regularizer, SparseRow};
    use approx::assert_relative_eq;

    fn half_square() -> GlmProblem {
        GlmProblem::new(
            vec![SparseRow::dense(&[1.0]), SparseRow::dense(&[1.0])],
            vec![0.0, 0.0],
            1,
            Loss::Squared,
            Regularizer::l2(0.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn textbook_step() {
        // 1-d f_j(w) = ½w², w = 1, α_j = 0:
        // α_j' = 0 - (1+1)⁻¹(0-1) = 0.5;  w' = 1 - 1·(0.5-0) = 0.5.
        let problem = half_square();
        let mut state = SanIdState::new(&problem, 1.0, 1e-12, 0);
        state.set_state(&[1.0], &[vec![0.0], vec![0.0]]);
        let before = state.data_accesses();
        state.step(&problem).unwrap();
        assert_eq!(state.data_accesses(), before + 1);
        assert_relative_eq!(state.w()[0], 0.5, max_relative = 1e-12);
        let moved: f64 = (0..2).map(|i| state.alpha(i)[0]).sum();
        assert_relative_eq!(moved, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn zero_residual_does_not_move() {
        let problem = half_square();
        let mut state = SanIdState::new(&problem, 1.0, 1e-12, 0);
        let w = [0.3];
        let g = problem.grad_fi(0, &w).unwrap();
        state.set_state(&w, &[g.clone(), g]);
        state.step(&problem).unwrap();
        assert_relative_eq!(state.w()[0], 0.3, max_relative = 1e-14);
    }
}
