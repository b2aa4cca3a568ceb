//! SVRG baseline: variance reduction through periodic full-gradient
//! snapshots, inner loop length `n` by default, step size `1/L_max`.

use rand::SeedableRng;
use rand_pcg::Pcg64;

use crate::model::GlmProblem;
use crate::solvers::draw_index;

pub struct SvrgState {
    w: Vec<f64>,
    snapshot_w: Vec<f64>,
    snapshot_grad: Vec<f64>,
    inner_len: usize,
    inner_count: usize,
    gamma: f64,
    rng: Pcg64,
    accesses: u64,
    n: usize,
    d: usize,
}

impl SvrgState {
    pub fn new(problem: &GlmProblem, gamma: f64, inner_len: usize, seed: u64) -> Self {
        let (n, d) = (problem.n(), problem.d());
        SvrgState {
            w: vec![0.0; d],
            snapshot_w: vec![0.0; d],
            snapshot_grad: vec![0.0; d],
            inner_len,
            inner_count: 0,
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

    pub fn snapshot(&self) -> (&[f64], &[f64]) {
        (&self.snapshot_w, &self.snapshot_grad)
    }

    pub fn data_accesses(&self) -> u64 {
        self.accesses
    }

    pub fn add_accesses(&mut self, k: u64) {
        self.accesses += k;
    }

    pub fn set_w(&mut self, w: &[f64]) {
        self.w.copy_from_slice(w);
    }

    pub fn step(&mut self, problem: &GlmProblem) {
        if self.inner_count.is_multiple_of(self.inner_len) {
            // Snapshot refresh at the inner-loop boundary with the
            // current iterate; one effective pass.
            self.snapshot_w.copy_from_slice(&self.w);
            let (_, g) = problem.full_objective_and_grad(&self.snapshot_w);
            self.snapshot_grad = g;
            self.accesses += self.n as u64;
        }
        let j = draw_index(&mut self.rng, self.n);
        let mut g_cur = vec![0.0; self.d];
        problem.grad_fi_into(j, &self.w, &mut g_cur);
        let mut g_snap = vec![0.0; self.d];
        problem.grad_fi_into(j, &self.snapshot_w, &mut g_snap);
        for k in 0..self.d {
            self.w[k] -= self.gamma * (g_cur[k] - g_snap[k] + self.snapshot_grad[k]);
        }
        self.accesses += 2;
        self.inner_count += 1;
    }
}
