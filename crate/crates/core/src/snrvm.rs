//! Dense reference engine for the variable-metric sketched
//! Newton–Raphson iteration
//!
//! `x⁺ = x − γ W⁻¹ ∇F(x) S (Sᵀ ∇F(x)ᵀ W⁻¹ ∇F(x) S)† Sᵀ F(x)`,
//!
//! together with the function-splitting system built from a GLM, the
//! finite sketch distributions matching the SAN/SANA samplers, the
//! surrogate `f̂` used as a Lyapunov quantity, the spectral rate
//! quantity ρ, and a Monte-Carlo contraction experiment on linear
//! systems. Everything here is deliberately dense and O(p³): it is an
//! oracle for the O(d) solvers, not a production path.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_pcg::Pcg64;
use thiserror::Error;

use crate::linalg::{
    dense_hessian_fi, min_pos_eig, pinv, spd_inv_sqrt, weighted_sketch_project, LinalgError,
    RESIDUAL_TOL,
};
use crate::model::GlmProblem;
use crate::solvers::{draw_index, draw_san_event};

/// Default cap on the stacked dimension `(n+1)d` of dense systems.
pub const DENSE_CAP: usize = 1024;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("dense system dimension {dim} exceeds cap {cap}")]
    DimCap { dim: usize, cap: usize },
    #[error("sketched system is inconsistent (residual {residual:.3e})")]
    Inconsistent { residual: f64 },
    #[error("system matrix is singular")]
    Singular,
    #[error("distribution not usable here: {0}")]
    BadDistribution(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A square nonlinear system at desk scale: the residual `F(x)` and the
/// matrix `∇F(x)` (transposed Jacobian, so the Newton system reads
/// `∇F(x)ᵀ (x' - x) = -F(x)`).
pub trait DenseSystem {
    fn dim(&self) -> usize;
    fn residual(&self, x: &DVector<f64>) -> DVector<f64>;
    fn grad_matrix(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

/// The function-splitting system of a GLM on the stacked state
/// `x = [w; α_1; …; α_n]`:
///
/// `F(x) = [(1/n) Σ α_i ; ∇f_1(w) − α_1 ; … ; ∇f_n(w) − α_n]`.
pub struct FunctionSplitSystem<'a> {
    problem: &'a GlmProblem,
}

/// Builds the function-splitting system, refusing stacked dimensions
/// beyond [`DENSE_CAP`].
pub fn build_function_splitting(problem: &GlmProblem) -> Result<FunctionSplitSystem<'_>, EngineError> {
    let dim = (problem.n() + 1) * problem.d();
    if dim > DENSE_CAP {
        return Err(EngineError::DimCap {
            dim,
            cap: DENSE_CAP,
        });
    }
    Ok(FunctionSplitSystem { problem })
}

impl<'a> FunctionSplitSystem<'a> {
    pub fn problem(&self) -> &'a GlmProblem {
        self.problem
    }

    pub fn n(&self) -> usize {
        self.problem.n()
    }

    pub fn d(&self) -> usize {
        self.problem.d()
    }

    /// Stacks `(w, α_1..α_n)` into an engine state vector.
    pub fn pack(&self, w: &[f64], alphas: &[Vec<f64>]) -> DVector<f64> {
        let d = self.d();
        let mut x = DVector::zeros(self.dim());
        x.rows_mut(0, d).copy_from_slice(w);
        for (i, a) in alphas.iter().enumerate() {
            x.rows_mut((i + 1) * d, d).copy_from_slice(a);
        }
        x
    }

    pub fn unpack_w(&self, x: &DVector<f64>) -> Vec<f64> {
        x.rows(0, self.d()).iter().copied().collect()
    }

    pub fn unpack_alpha(&self, x: &DVector<f64>, i: usize) -> Vec<f64> {
        x.rows((i + 1) * self.d(), self.d()).iter().copied().collect()
    }
}

impl DenseSystem for FunctionSplitSystem<'_> {
    fn dim(&self) -> usize {
        (self.n() + 1) * self.d()
    }

    fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        let (n, d) = (self.n(), self.d());
        let w = self.unpack_w(x);
        let mut out = DVector::zeros(self.dim());
        for i in 0..n {
            let grad = self
                .problem
                .grad_fi(i, &w)
                .expect("index within range by construction");
            for k in 0..d {
                let alpha_ik = x[(i + 1) * d + k];
                out[k] += alpha_ik / n as f64;
                out[(i + 1) * d + k] = grad[k] - alpha_ik;
            }
        }
        out
    }

    fn grad_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let (n, d) = (self.n(), self.d());
        let w = self.unpack_w(x);
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for i in 0..n {
            let hess = dense_hessian_fi(self.problem, i, &w);
            let block = (i + 1) * d;
            for r in 0..d {
                for c in 0..d {
                    m[(r, block + c)] = hess[(r, c)];
                }
                m[(block + r, r)] = 1.0 / n as f64;
                m[(block + r, block + r)] = -1.0;
            }
        }
        m
    }
}

/// A linear system `F(x) = A x − b` with `∇F = Aᵀ`; quadratic
/// objectives land here.
pub struct LinearSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl DenseSystem for LinearSystem {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x - &self.b
    }

    fn grad_matrix(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.a.transpose()
    }
}

/// One draw from a sketch distribution: the sketching matrix `S`
/// (equation space) and the SPD metric `W` (variable space).
pub struct SketchSample {
    pub s: DMatrix<f64>,
    pub w: DMatrix<f64>,
}

/// A proper finite distribution over `(S, W)` pairs.
pub enum SketchDistribution<'a> {
    /// Averaging row with probability `p`, otherwise one sampled
    /// residual row under the sampled-Hessian metric.
    San { problem: &'a GlmProblem, p: f64 },
    /// Same sketches as `San` but with the identity metric throughout.
    SanIdentity { problem: &'a GlmProblem, p: f64 },
    /// Averaging row and one residual row together, probability `1/n` each.
    Sana { problem: &'a GlmProblem },
    /// The full Newton system, identity metric.
    Full { dim: usize },
    /// Coordinate sketch `S = e_i` with probability `A_ii / tr(A)` and
    /// metric `W = A`, for SPD `A`.
    Coordinate { a: &'a DMatrix<f64> },
}

impl<'a> SketchDistribution<'a> {
    pub fn san(problem: &'a GlmProblem, p: f64) -> Self {
        SketchDistribution::San { problem, p }
    }

    pub fn san_identity(problem: &'a GlmProblem, p: f64) -> Self {
        SketchDistribution::SanIdentity { problem, p }
    }

    pub fn sana(problem: &'a GlmProblem) -> Self {
        SketchDistribution::Sana { problem }
    }

    pub fn full(dim: usize) -> Self {
        SketchDistribution::Full { dim }
    }

    pub fn coordinate(a: &'a DMatrix<f64>) -> Self {
        SketchDistribution::Coordinate { a }
    }

    /// True when neither the sketches nor the metric depend on the
    /// current state (needed by the contraction experiment).
    pub fn is_state_independent(&self) -> bool {
        matches!(
            self,
            SketchDistribution::Full { .. } | SketchDistribution::Coordinate { .. }
        )
    }

    /// Draws one `(S, W)` pair, consuming randomness in the same order
    /// as the matching solver (branch coin first, then row index).
    pub fn sample(&self, x: &DVector<f64>, rng: &mut Pcg64) -> SketchSample {
        match self {
            SketchDistribution::San { problem, p } => {
                match draw_san_event(rng, *p, problem.n()) {
                    None => san_average_sample(problem),
                    Some(j) => san_row_sample(problem, x, j, true),
                }
            }
            SketchDistribution::SanIdentity { problem, p } => {
                match draw_san_event(rng, *p, problem.n()) {
                    None => san_average_sample(problem),
                    Some(j) => san_row_sample(problem, x, j, false),
                }
            }
            SketchDistribution::Sana { problem } => {
                let j = draw_index(rng, problem.n());
                sana_sample(problem, x, j)
            }
            SketchDistribution::Full { dim } => SketchSample {
                s: DMatrix::identity(*dim, *dim),
                w: DMatrix::identity(*dim, *dim),
            },
            SketchDistribution::Coordinate { a } => {
                let trace = a.trace();
                let u: f64 = rng.random::<f64>() * trace;
                let mut acc = 0.0;
                let mut pick = a.nrows() - 1;
                for i in 0..a.nrows() {
                    acc += a[(i, i)];
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                coordinate_sample(a, pick)
            }
        }
    }

    /// Enumerates every outcome with its probability.
    pub fn enumerate(&self, x: &DVector<f64>) -> Vec<(f64, SketchSample)> {
        match self {
            SketchDistribution::San { problem, p } => {
                let n = problem.n();
                let mut out = vec![(*p, san_average_sample(problem))];
                for j in 0..n {
                    out.push(((1.0 - p) / n as f64, san_row_sample(problem, x, j, true)));
                }
                out
            }
            SketchDistribution::SanIdentity { problem, p } => {
                let n = problem.n();
                let mut out = vec![(*p, san_average_sample(problem))];
                for j in 0..n {
                    out.push(((1.0 - p) / n as f64, san_row_sample(problem, x, j, false)));
                }
                out
            }
            SketchDistribution::Sana { problem } => {
                let n = problem.n();
                (0..n)
                    .map(|j| (1.0 / n as f64, sana_sample(problem, x, j)))
                    .collect()
            }
            SketchDistribution::Full { dim } => vec![(
                1.0,
                SketchSample {
                    s: DMatrix::identity(*dim, *dim),
                    w: DMatrix::identity(*dim, *dim),
                },
            )],
            SketchDistribution::Coordinate { a } => {
                let trace = a.trace();
                (0..a.nrows())
                    .map(|i| (a[(i, i)] / trace, coordinate_sample(a, i)))
                    .collect()
            }
        }
    }
}

fn block_selector(n_blocks: usize, d: usize, blocks: &[usize]) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(n_blocks * d, blocks.len() * d);
    for (c, &blk) in blocks.iter().enumerate() {
        for k in 0..d {
            s[(blk * d + k, c * d + k)] = 1.0;
        }
    }
    s
}

fn san_average_sample(problem: &GlmProblem) -> SketchSample {
    let (n, d) = (problem.n(), problem.d());
    SketchSample {
        s: block_selector(n + 1, d, &[0]),
        w: DMatrix::identity((n + 1) * d, (n + 1) * d),
    }
}

fn hessian_metric(problem: &GlmProblem, x: &DVector<f64>, j: usize) -> DMatrix<f64> {
    let (n, d) = (problem.n(), problem.d());
    let w_vec: Vec<f64> = x.rows(0, d).iter().copied().collect();
    let hess = dense_hessian_fi(problem, j, &w_vec);
    let mut w = DMatrix::identity((n + 1) * d, (n + 1) * d);
    for r in 0..d {
        for c in 0..d {
            w[(r, c)] = hess[(r, c)];
        }
    }
    w
}

fn san_row_sample(
    problem: &GlmProblem,
    x: &DVector<f64>,
    j: usize,
    hessian_metric_on: bool,
) -> SketchSample {
    let (n, d) = (problem.n(), problem.d());
    let s = block_selector(n + 1, d, &[j + 1]);
    let w = if hessian_metric_on {
        hessian_metric(problem, x, j)
    } else {
        DMatrix::identity((n + 1) * d, (n + 1) * d)
    };
    SketchSample { s, w }
}

fn sana_sample(problem: &GlmProblem, x: &DVector<f64>, j: usize) -> SketchSample {
    let (n, d) = (problem.n(), problem.d());
    SketchSample {
        s: block_selector(n + 1, d, &[0, j + 1]),
        w: hessian_metric(problem, x, j),
    }
}

fn coordinate_sample(a: &DMatrix<f64>, i: usize) -> SketchSample {
    let mut s = DMatrix::zeros(a.nrows(), 1);
    s[(i, 0)] = 1.0;
    SketchSample {
        s,
        w: a.clone(),
    }
}

/// One sketched-and-projected Newton step with relaxation `gamma`.
pub fn snrvm_step(
    sys: &dyn DenseSystem,
    x: &DVector<f64>,
    sketch: &SketchSample,
    gamma: f64,
) -> Result<DVector<f64>, EngineError> {
    let f = sys.residual(x);
    let grad = sys.grad_matrix(x);
    let a = grad.transpose();
    let b = -f;
    let u = weighted_sketch_project(&a, &sketch.s, &sketch.w, &b)?;
    let rhs = sketch.s.transpose() * &b;
    let residual = (sketch.s.transpose() * (&a * &u) - &rhs).norm();
    if residual > RESIDUAL_TOL * rhs.norm() && residual > 1e-30 {
        return Err(EngineError::Inconsistent { residual });
    }
    Ok(x + gamma * u)
}

/// The surrogate `f̂(x) = ½ ‖F(x)‖²` in the pseudo-inverse metric
/// `(∇F(x_anchor)ᵀ W⁻¹ ∇F(x_anchor))†`. For an invertible linear system
/// it equals `½ ‖x − x*‖²_W`.
pub fn surrogate_fhat(
    sys: &dyn DenseSystem,
    x_eval: &DVector<f64>,
    x_anchor: &DVector<f64>,
    w_metric: &DMatrix<f64>,
) -> Result<f64, EngineError> {
    let grad = sys.grad_matrix(x_anchor);
    let chol = Cholesky::new(w_metric.clone()).ok_or(LinalgError::NotSpd)?;
    let m = grad.transpose() * chol.solve(&grad);
    let f = sys.residual(x_eval);
    Ok(0.5 * f.dot(&(pinv(&m) * &f)))
}

/// `H(x) = E[S (Sᵀ ∇F(x)ᵀ W⁻¹ ∇F(x) S)† Sᵀ]`, assembled by enumerating
/// the finite distribution.
pub fn h_matrix(
    sys: &dyn DenseSystem,
    dist: &SketchDistribution,
    x: &DVector<f64>,
) -> Result<DMatrix<f64>, EngineError> {
    let grad = sys.grad_matrix(x);
    let p_dim = sys.dim();
    let mut h = DMatrix::zeros(p_dim, p_dim);
    for (prob, sketch) in dist.enumerate(x) {
        let gs = &grad * &sketch.s;
        let chol = Cholesky::new(sketch.w.clone()).ok_or(LinalgError::NotSpd)?;
        let m = gs.transpose() * chol.solve(&gs);
        h += prob * &sketch.s * pinv(&m) * sketch.s.transpose();
    }
    Ok(h)
}

/// The contraction quantity
/// `ρ(x) = min_i λ⁺_min(W_i^{-1/2} ∇F(x) H(x) ∇F(x)ᵀ W_i^{-1/2})`
/// over the outcomes of the distribution.
pub fn rho_at(
    sys: &dyn DenseSystem,
    dist: &SketchDistribution,
    x: &DVector<f64>,
) -> Result<f64, EngineError> {
    let grad = sys.grad_matrix(x);
    let h = h_matrix(sys, dist, x)?;
    let core = &grad * h * grad.transpose();
    let mut rho = f64::INFINITY;
    for (_, sketch) in dist.enumerate(x) {
        let wis = spd_inv_sqrt(&sketch.w)?;
        let t = &wis * &core * &wis;
        rho = rho.min(min_pos_eig(&t)?);
    }
    Ok(rho)
}

/// Result of a Monte-Carlo contraction run on a linear system.
pub struct ContractionReport {
    /// Analytic rate quantity of the distribution at `x0`.
    pub rho: f64,
    /// Fitted per-step geometric decay of the mean squared W-distance.
    pub empirical_rate: f64,
    /// `mean over chains of ‖x^k − x*‖²_W`, for `k = 0..=steps`.
    pub mean_sq_dist: Vec<f64>,
    /// Ratios `mean_{k+1} / mean_k` while the mean stays above the
    /// fit floor.
    pub per_step_factors: Vec<f64>,
}

impl ContractionReport {
    /// Empirical decay within statistical slack of the analytic bound.
    pub fn within_bound(&self, slack: f64) -> bool {
        self.empirical_rate <= (1.0 - self.rho) + slack
            && self
                .per_step_factors
                .iter()
                .all(|&f| f <= (1.0 - self.rho) + slack)
    }
}

/// Runs `trials` independent chains of the sketched iteration on a
/// linear system with a state-independent distribution and constant
/// metric, and fits the geometric decay of `E‖x^k − x*‖²_W`.
pub fn contraction_experiment(
    lin: &LinearSystem,
    dist: &SketchDistribution,
    x0: &DVector<f64>,
    steps: usize,
    trials: usize,
    gamma: f64,
    seed: u64,
) -> Result<ContractionReport, EngineError> {
    if !dist.is_state_independent() {
        return Err(EngineError::BadDistribution(
            "contraction experiment needs a state-independent sketch and constant metric".into(),
        ));
    }
    let outcomes = dist.enumerate(x0);
    let w_metric = outcomes
        .first()
        .map(|(_, sk)| sk.w.clone())
        .ok_or_else(|| EngineError::BadDistribution("empty distribution".into()))?;
    for (_, sk) in &outcomes {
        if (&sk.w - &w_metric).norm() > 1e-12 * w_metric.norm() {
            return Err(EngineError::BadDistribution(
                "metric varies across outcomes".into(),
            ));
        }
    }
    let x_star = lin
        .a
        .clone()
        .lu()
        .solve(&lin.b)
        .ok_or(EngineError::Singular)?;
    let rho = rho_at(lin, dist, x0)?;

    let mut master = Pcg64::seed_from_u64(seed);
    let chain_seeds: Vec<u64> = (0..trials).map(|_| master.random()).collect();
    let mut sums = vec![0.0; steps + 1];
    for chain_seed in chain_seeds {
        let mut rng = Pcg64::seed_from_u64(chain_seed);
        let mut x = x0.clone();
        for (k, slot) in sums.iter_mut().enumerate() {
            let e = &x - &x_star;
            *slot += e.dot(&(&w_metric * &e));
            if k < steps {
                let sketch = dist.sample(&x, &mut rng);
                x = snrvm_step(lin, &x, &sketch, gamma)?;
            }
        }
    }
    let means: Vec<f64> = sums.iter().map(|s| s / trials as f64).collect();

    // Least-squares fit of ln(mean_k) over the prefix that stays above
    // a relative floor; the slope's exponential is the per-step factor.
    let floor = means[0] * 1e-12;
    let mut pts: Vec<(f64, f64)> = Vec::new();
    let mut factors = Vec::new();
    for (k, &m) in means.iter().enumerate() {
        if m <= floor || m <= 0.0 {
            break;
        }
        pts.push((k as f64, m.ln()));
        if k > 0 {
            factors.push(m / means[k - 1]);
        }
    }
    let empirical_rate = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        ((n * sxy - sx * sy) / (n * sxx - sx * sx)).exp()
    } else {
        0.0
    };

    Ok(ContractionReport {
        rho,
        empirical_rate,
        mean_sq_dist: means,
        per_step_factors: factors,
    })
}
