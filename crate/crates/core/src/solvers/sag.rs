//! SAG baseline: stochastic average gradient with a zero-initialized
//! gradient table and the rule-of-thumb step size `1/L_max`.

use rand::SeedableRng;
use rand_pcg::Pcg64;

use crate::model::GlmProblem;
use crate::solvers::draw_index;
use crate::vecops::axpy;

pub struct SagState {
    w: Vec<f64>,
    grads: Vec<f64>,
    grad_sum: Vec<f64>,
    gamma: f64,
    rng: Pcg64,
    accesses: u64,
    n: usize,
    d: usize,
}

impl SagState {
    pub fn new(problem: &GlmProblem, gamma: f64, seed: u64) -> Self {
        let (n, d) = (problem.n(), problem.d());
        SagState {
            w: vec![0.0; d],
            grads: vec![0.0; n * d],
            grad_sum: vec![0.0; d],
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

    pub fn stored_grad(&self, i: usize) -> &[f64] {
        &self.grads[i * self.d..(i + 1) * self.d]
    }

    pub fn data_accesses(&self) -> u64 {
        self.accesses
    }

    pub fn add_accesses(&mut self, k: u64) {
        self.accesses += k;
    }

    /// `‖grad_sum - Σ g_i‖` drift of the maintained table sum.
    pub fn grad_sum_drift(&self) -> f64 {
        let mut sum = vec![0.0; self.d];
        for i in 0..self.n {
            axpy(1.0, self.stored_grad(i), &mut sum);
        }
        sum.iter()
            .zip(&self.grad_sum)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn step(&mut self, problem: &GlmProblem) {
        let j = draw_index(&mut self.rng, self.n);
        let mut g_new = vec![0.0; self.d];
        problem.grad_fi_into(j, &self.w, &mut g_new);
        let start = j * self.d;
        let stored = &mut self.grads[start..start + self.d];
        for ((sum, new), old) in self.grad_sum.iter_mut().zip(&g_new).zip(stored.iter()) {
            *sum += new - old;
        }
        stored.copy_from_slice(&g_new);
        axpy(-self.gamma / self.n as f64, &self.grad_sum, &mut self.w);
        self.accesses += 1;
    }
}
