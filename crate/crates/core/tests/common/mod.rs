//! Shared helpers for the integration suites: seeded random problems,
//! an independent dense Newton minimizer, and comparison utilities.

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_pcg::Pcg64;

use sansolve::linalg::dense_hessian_fi;
use sansolve::model::{GlmProblem, Loss, Regularizer, SparseRow};

/// Random dense logistic + L2 problem with `λ = 1/n`.
#[allow(dead_code)]
pub fn random_logistic_l2(rng: &mut Pcg64, n: usize, d: usize) -> GlmProblem {
    let rows: Vec<SparseRow> = (0..n)
        .map(|_| {
            let vals: Vec<f64> = (0..d).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
            SparseRow::dense(&vals)
        })
        .collect();
    let labels: Vec<f64> = (0..n)
        .map(|_| if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 })
        .collect();
    GlmProblem::new(
        rows,
        labels,
        d,
        Loss::Logistic,
        Regularizer::l2(1.0 / n as f64).unwrap(),
    )
    .unwrap()
}

/// Full-batch damped-free Newton iteration; an oracle minimizer for
/// small strongly convex problems (quadratic local convergence drives
/// the gradient to rounding level in a handful of iterations).
#[allow(dead_code)]
pub fn newton_minimize(problem: &GlmProblem, iters: usize) -> Vec<f64> {
    let d = problem.d();
    let n = problem.n() as f64;
    let mut w = vec![0.0; d];
    for _ in 0..iters {
        let (_, g) = problem.full_objective_and_grad(&w);
        let mut hess = DMatrix::zeros(d, d);
        for i in 0..problem.n() {
            hess += dense_hessian_fi(problem, i, &w);
        }
        hess /= n;
        let delta = hess
            .cholesky()
            .expect("strongly convex problem")
            .solve(&DVector::from_column_slice(&g));
        for k in 0..d {
            w[k] -= delta[k];
        }
    }
    w
}

/// Per-coordinate relative gap with an absolute floor of one.
#[allow(dead_code)] // not every test target uses every helper
pub fn max_coord_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / (1.0 + x.abs().max(y.abs())))
        .fold(0.0, f64::max)
}

#[allow(dead_code)]
pub fn seeded(seed: u64) -> Pcg64 {
    Pcg64::seed_from_u64(seed)
}
