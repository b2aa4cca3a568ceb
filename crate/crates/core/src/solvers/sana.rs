//! SANA: simultaneous projection onto the averaging constraint and one
//! linearized residual equation.
//!
//! Every step keeps `Σ α_i = 0` invariant, making the Newton system's
//! right-hand side an unbiased gradient estimate, at the price of
//! touching all `n` auxiliary vectors per iteration.

use rand::SeedableRng;
use rand_pcg::Pcg64;

use crate::linalg::{solve_diag_rank1, DiagRank1};
use crate::model::GlmProblem;
use crate::solvers::{draw_index, SolverError};
use crate::vecops::axpy;

const SUM_TOL: f64 = 1e-8;

pub struct SanaState {
    w: Vec<f64>,
    alphas: Vec<f64>,
    gamma: f64,
    rng: Pcg64,
    accesses: u64,
    n: usize,
    d: usize,
}

impl SanaState {
    pub fn new(problem: &GlmProblem, gamma: f64, seed: u64) -> Self {
        let (n, d) = (problem.n(), problem.d());
        SanaState {
            w: vec![0.0; d],
            alphas: vec![0.0; n * d],
            gamma,
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

    /// Overrides the state (testing hook). The α's must sum to zero.
    pub fn set_state(&mut self, w: &[f64], alphas: &[Vec<f64>]) -> Result<(), SolverError> {
        assert_eq!(w.len(), self.d);
        assert_eq!(alphas.len(), self.n);
        self.w.copy_from_slice(w);
        for (i, a) in alphas.iter().enumerate() {
            self.alphas[i * self.d..(i + 1) * self.d].copy_from_slice(a);
        }
        self.check_sum()
    }

    /// `‖Σ α_i‖` (should stay at rounding level for a healthy state).
    pub fn alpha_sum_norm(&self) -> f64 {
        let mut sum = vec![0.0; self.d];
        for i in 0..self.n {
            axpy(1.0, self.alpha(i), &mut sum);
        }
        sum.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn check_sum(&self) -> Result<(), SolverError> {
        let s = self.alpha_sum_norm();
        if s > SUM_TOL {
            return Err(SolverError::StateCorruption(format!(
                "SANA requires Σα = 0, found ‖Σα‖ = {s:.3e}"
            )));
        }
        Ok(())
    }

    pub fn step(&mut self, problem: &GlmProblem) -> Result<(), SolverError> {
        self.check_sum()?;
        let j = draw_index(&mut self.rng, self.n);
        let mu = (self.n as f64 - 1.0) / self.n as f64;
        let reg = problem.reg();
        let row = problem.row(j);
        let (_, phi1, phi2) = problem.loss_at(j, row.dot(&self.w));

        // g = ∇f_j(w) - α_j
        let mut g = vec![0.0; self.d];
        reg.grad_into(&self.w, &mut g);
        row.add_scaled_into(phi1, &mut g);
        axpy(-1.0, self.alpha(j), &mut g);

        let mut diag = vec![0.0; self.d];
        reg.hess_diag_into(&self.w, &mut diag);
        for entry in &mut diag {
            *entry += mu;
        }
        let m = DiagRank1 {
            diag: &diag,
            scale: phi2,
            u: row,
        };
        let mut dir = solve_diag_rank1(&m, &g)?;
        for x in &mut dir {
            *x = -*x;
        }

        axpy(self.gamma, &dir, &mut self.w);
        // α_j moves against the crowd so the sum is conserved exactly:
        // -γμ d + (n-1)(γ/n) d = 0.
        let spread = self.gamma / self.n as f64;
        for i in 0..self.n {
            let start = i * self.d;
            let c = if i == j { -self.gamma * mu } else { spread };
            axpy(c, &dir, &mut self.alphas[start..start + self.d]);
        }
        self.accesses += 1;
        Ok(())
    }
}
