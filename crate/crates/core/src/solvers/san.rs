//! SAN: the stochastic average Newton method.
//!
//! With probability `p` the step projects the auxiliary vectors onto
//! their averaging constraint; otherwise it takes a Newton–Raphson step
//! on one sampled residual equation `∇f_j(w) = α_j` under the metric
//! induced by `∇²f_j(w)`, which costs one diagonal-plus-rank-one solve.

use rand::SeedableRng;
use rand_pcg::Pcg64;

use crate::linalg::{solve_diag_rank1, DiagRank1};
use crate::model::GlmProblem;
use crate::solvers::{draw_san_event, SolverError};
use crate::vecops::{axpy, scale};

/// Newton direction `d = -(I + ∇²f_j(w))⁻¹ (∇f_j(w) - α_j)` through the
/// Sherman–Morrison solve; works for any separable regularizer.
pub fn san_direction(
    problem: &GlmProblem,
    j: usize,
    w: &[f64],
    alpha_j: &[f64],
) -> Result<Vec<f64>, SolverError> {
    let d = problem.d();
    let reg = problem.reg();
    let row = problem.row(j);
    let (_, phi1, phi2) = problem.loss_at(j, row.dot(w));

    // g = ∇f_j(w) - α_j
    let mut g = vec![0.0; d];
    reg.grad_into(w, &mut g);
    row.add_scaled_into(phi1, &mut g);
    axpy(-1.0, alpha_j, &mut g);

    let mut diag = vec![0.0; d];
    reg.hess_diag_into(w, &mut diag);
    for entry in &mut diag {
        *entry += 1.0;
    }

    let m = DiagRank1 {
        diag: &diag,
        scale: phi2,
        u: row,
    };
    let mut dir = solve_diag_rank1(&m, &g)?;
    scale(-1.0, &mut dir);
    Ok(dir)
}

/// Same direction specialized to `R(w) = ½‖w‖²`, where the solve
/// collapses to a few dot products.
pub fn san_direction_ridge(
    problem: &GlmProblem,
    j: usize,
    w: &[f64],
    alpha_j: &[f64],
) -> Result<Vec<f64>, SolverError> {
    if !problem.reg().is_l2() {
        return Err(SolverError::InvalidConfig(
            "ridge direction requires an L2 regularizer".into(),
        ));
    }
    let lambda = problem.reg().lambda();
    let row = problem.row(j);
    let r = row.dot(w);
    let (_, phi1, phi2) = problem.loss_at(j, r);
    let norm_sq = row.norm_sq();
    let a_dot_alpha = row.dot(alpha_j);

    // d = -g/(1+λ) + φ'' ⟨a, g⟩ / ((1+λ)(1+λ+φ''‖a‖²)) a,
    // with g = λw + φ' a - α_j and ⟨a, g⟩ = λr + φ'‖a‖² - ⟨a, α_j⟩.
    let g_dot_a = lambda * r + phi1 * norm_sq - a_dot_alpha;
    let coeff = phi2 * g_dot_a / ((1.0 + lambda) * (1.0 + lambda + phi2 * norm_sq));

    let inv = 1.0 / (1.0 + lambda);
    let mut dir: Vec<f64> = w
        .iter()
        .zip(alpha_j)
        .map(|(&wi, &ai)| (ai - lambda * wi) * inv)
        .collect();
    row.add_scaled_into(coeff - phi1 * inv, &mut dir);
    Ok(dir)
}

pub struct SanState {
    w: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bar: Vec<f64>,
    gamma: f64,
    p: f64,
    ridge: bool,
    rng: Pcg64,
    accesses: u64,
    n: usize,
    d: usize,
}

impl SanState {
    /// Fresh state with `w = 0`, `α_i = 0`, matching the experiment
    /// protocol's zero initialization.
    pub fn new(problem: &GlmProblem, gamma: f64, p: f64, ridge: bool, seed: u64) -> Self {
        let (n, d) = (problem.n(), problem.d());
        SanState {
            w: vec![0.0; d],
            alphas: vec![0.0; n * d],
            alpha_bar: vec![0.0; d],
            gamma,
            p,
            ridge,
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

    pub fn alpha_bar(&self) -> &[f64] {
        &self.alpha_bar
    }

    pub fn data_accesses(&self) -> u64 {
        self.accesses
    }

    pub fn add_accesses(&mut self, k: u64) {
        self.accesses += k;
    }

    /// Overrides the state (testing hook); recomputes the maintained mean.
    pub fn set_state(&mut self, w: &[f64], alphas: &[Vec<f64>]) {
        assert_eq!(w.len(), self.d);
        assert_eq!(alphas.len(), self.n);
        self.w.copy_from_slice(w);
        self.alpha_bar.fill(0.0);
        for (i, a) in alphas.iter().enumerate() {
            self.alphas[i * self.d..(i + 1) * self.d].copy_from_slice(a);
            axpy(1.0 / self.n as f64, a, &mut self.alpha_bar);
        }
    }

    /// `‖ᾱ - (1/n) Σ α_i‖` of the maintained running mean.
    pub fn alpha_bar_drift(&self) -> f64 {
        let mut mean = vec![0.0; self.d];
        for i in 0..self.n {
            axpy(1.0 / self.n as f64, self.alpha(i), &mut mean);
        }
        mean.iter()
            .zip(&self.alpha_bar)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn step(&mut self, problem: &GlmProblem) -> Result<(), SolverError> {
        match draw_san_event(&mut self.rng, self.p, self.n) {
            None => {
                // Averaging branch: project the α's onto their mean-zero
                // constraint; touches no data row.
                for i in 0..self.n {
                    let start = i * self.d;
                    for k in 0..self.d {
                        self.alphas[start + k] -= self.gamma * self.alpha_bar[k];
                    }
                }
                scale(1.0 - self.gamma, &mut self.alpha_bar);
            }
            Some(j) => {
                let alpha_j = self.alpha(j).to_vec();
                let dir = if self.ridge {
                    san_direction_ridge(problem, j, &self.w, &alpha_j)?
                } else {
                    san_direction(problem, j, &self.w, &alpha_j)?
                };
                axpy(self.gamma, &dir, &mut self.w);
                let start = j * self.d;
                axpy(-self.gamma, &dir, &mut self.alphas[start..start + self.d]);
                axpy(-self.gamma / self.n as f64, &dir, &mut self.alpha_bar);
                self.accesses += 1;
            }
        }
        Ok(())
    }
}
