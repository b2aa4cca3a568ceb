//! Six incremental solvers behind one stepping contract.
//!
//! The Newton family — SAN, SANA, SAN-id and SNM — works on augmented
//! states that pair the iterate `w` with one auxiliary vector per data
//! point; SAG and SVRG are the first-order variance-reduced baselines.
//! Every step touches at most one data row, and a shared data-access
//! counter turns into the effective-pass x-axis: the number of
//! single-row gradient/Hessian evaluations divided by `n`.
//!
//! Randomness discipline: each solver owns one 64-bit-seeded PCG
//! generator, and draws happen in a fixed order (branch coin first,
//! then the uniform row index) so that runs replay exactly and the
//! dense reference engine can consume an identical stream.

mod sag;
mod san;
mod san_id;
mod sana;
mod snm;
mod svrg;

pub use sag::SagState;
pub use san::{san_direction, san_direction_ridge, SanState};
pub use san_id::SanIdState;
pub use sana::SanaState;
pub use snm::SnmState;
pub use svrg::SvrgState;

use std::time::Instant;

use rand::RngExt;
use rand_pcg::Pcg64;
use thiserror::Error;

use crate::linalg::LinalgError;
use crate::model::{GlmProblem, ModelError};
use crate::trace::{TerminalStatus, Trace, TraceRow};
use crate::vecops;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("solver state corrupted: {0}")]
    StateCorruption(String),
    #[error("dense solve dimension {d} exceeds cap {cap}")]
    DenseCap { d: usize, cap: usize },
    #[error("Hessian sum is singular")]
    SingularHessianSum,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    San,
    Sana,
    SanId,
    Snm,
    Sag,
    Svrg,
}

impl SolverKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverKind::San => "san",
            SolverKind::Sana => "sana",
            SolverKind::SanId => "san_id",
            SolverKind::Snm => "snm",
            SolverKind::Sag => "sag",
            SolverKind::Svrg => "svrg",
        }
    }

    /// Newton-family solvers take a relaxation step size in (0, 1];
    /// the gradient baselines take any positive step size.
    pub fn is_newton_family(&self) -> bool {
        matches!(
            self,
            SolverKind::San | SolverKind::Sana | SolverKind::SanId | SolverKind::Snm
        )
    }
}

impl std::str::FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "san" => Ok(SolverKind::San),
            "sana" => Ok(SolverKind::Sana),
            "san_id" | "san-id" => Ok(SolverKind::SanId),
            "snm" => Ok(SolverKind::Snm),
            "sag" => Ok(SolverKind::Sag),
            "svrg" => Ok(SolverKind::Svrg),
            other => Err(format!("unknown solver `{other}`")),
        }
    }
}

/// Solver selection plus optional overrides; `None` fields resolve to
/// the protocol defaults at construction time: `γ = 1` and
/// `p = 1/(n+1)` for the Newton family, `γ = 1/L_max` for SAG/SVRG,
/// inner loop length `n` for SVRG.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub gamma: Option<f64>,
    pub p: Option<f64>,
    pub svrg_inner: Option<usize>,
    pub seed: u64,
    /// Use the closed-form ridge direction for SAN; `None` picks it
    /// automatically when the regularizer is L2.
    pub san_ridge: Option<bool>,
    /// Dense-solve dimension cap for the SAN-id diagnostic.
    pub san_id_dense_cap: usize,
}

impl SolverConfig {
    pub fn new(kind: SolverKind) -> Self {
        SolverConfig {
            kind,
            gamma: None,
            p: None,
            svrg_inner: None,
            seed: 0,
            san_ridge: None,
            san_id_dense_cap: 256,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn p(mut self, p: f64) -> Self {
        self.p = Some(p);
        self
    }
}

/// Stop as soon as `‖∇f(w)‖ ≤ grad_tol` or the effective-pass budget
/// `max_passes` is exhausted, whichever happens first.
#[derive(Debug, Clone, Copy)]
pub struct StopRule {
    pub grad_tol: f64,
    pub max_passes: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            grad_tol: 1e-6,
            max_passes: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Checkpoint spacing on the effective-pass axis.
    pub checkpoint_every: f64,
    /// When set, each checkpoint's full-gradient evaluation is charged
    /// to the pass counter (one pass). Off by default: the x-axis then
    /// tracks optimization work only.
    pub count_checkpoint_cost: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            checkpoint_every: 1.0,
            count_checkpoint_cost: false,
        }
    }
}

/// Branch draw shared by SAN/SAN-id and the reference engine's sketch
/// samplers: coin first, then the row index. `None` means the
/// averaging branch fired.
pub(crate) fn draw_san_event(rng: &mut Pcg64, p: f64, n: usize) -> Option<usize> {
    let u: f64 = rng.random();
    if u < p {
        None
    } else {
        Some(rng.random_range(0..n))
    }
}

pub(crate) fn draw_index(rng: &mut Pcg64, n: usize) -> usize {
    rng.random_range(0..n)
}

// Newton-family relaxation: the nominal range is (0, 1], but grid
// sweeps probe mild over-relaxation up to 1.3, so validation admits
// the usual (0, 2) relaxation interval.
fn check_gamma_newton(gamma: f64) -> Result<f64, SolverError> {
    if gamma > 0.0 && gamma < 2.0 {
        Ok(gamma)
    } else {
        Err(SolverError::InvalidConfig(format!(
            "Newton-family step size must lie in (0, 2), got {gamma}"
        )))
    }
}

fn check_gamma_positive(gamma: f64) -> Result<f64, SolverError> {
    if gamma > 0.0 {
        Ok(gamma)
    } else {
        Err(SolverError::InvalidConfig(format!(
            "step size must be positive, got {gamma}"
        )))
    }
}

fn check_p(p: f64) -> Result<f64, SolverError> {
    if p > 0.0 && p < 1.0 {
        Ok(p)
    } else {
        Err(SolverError::InvalidConfig(format!(
            "averaging probability must lie in (0, 1), got {p}"
        )))
    }
}

/// One of the six solvers, dispatched behind a uniform step contract.
pub enum Solver {
    San(SanState),
    Sana(SanaState),
    SanId(SanIdState),
    Snm(SnmState),
    Sag(SagState),
    Svrg(SvrgState),
}

impl Solver {
    pub fn new(problem: &GlmProblem, cfg: &SolverConfig) -> Result<Self, SolverError> {
        let n = problem.n();
        match cfg.kind {
            SolverKind::San => {
                let gamma = check_gamma_newton(cfg.gamma.unwrap_or(1.0))?;
                let p = check_p(cfg.p.unwrap_or(1.0 / (n as f64 + 1.0)))?;
                let ridge = cfg.san_ridge.unwrap_or_else(|| problem.reg().is_l2());
                if ridge && !problem.reg().is_l2() {
                    return Err(SolverError::InvalidConfig(
                        "ridge fast path requires an L2 regularizer".into(),
                    ));
                }
                Ok(Solver::San(SanState::new(problem, gamma, p, ridge, cfg.seed)))
            }
            SolverKind::Sana => {
                let gamma = check_gamma_newton(cfg.gamma.unwrap_or(1.0))?;
                Ok(Solver::Sana(SanaState::new(problem, gamma, cfg.seed)))
            }
            SolverKind::SanId => {
                let gamma = check_gamma_newton(cfg.gamma.unwrap_or(1.0))?;
                let p = check_p(cfg.p.unwrap_or(1.0 / (n as f64 + 1.0)))?;
                if problem.d() > cfg.san_id_dense_cap {
                    return Err(SolverError::DenseCap {
                        d: problem.d(),
                        cap: cfg.san_id_dense_cap,
                    });
                }
                Ok(Solver::SanId(SanIdState::new(problem, gamma, p, cfg.seed)))
            }
            SolverKind::Snm => {
                check_gamma_newton(cfg.gamma.unwrap_or(1.0))?;
                Ok(Solver::Snm(SnmState::new(problem, cfg.seed)?))
            }
            SolverKind::Sag => {
                let gamma = check_gamma_positive(cfg.gamma.unwrap_or(1.0 / problem.lmax()))?;
                Ok(Solver::Sag(SagState::new(problem, gamma, cfg.seed)))
            }
            SolverKind::Svrg => {
                let gamma = check_gamma_positive(cfg.gamma.unwrap_or(1.0 / problem.lmax()))?;
                let inner = cfg.svrg_inner.unwrap_or(n);
                if inner == 0 {
                    return Err(SolverError::InvalidConfig(
                        "SVRG inner loop length must be at least 1".into(),
                    ));
                }
                Ok(Solver::Svrg(SvrgState::new(problem, gamma, inner, cfg.seed)))
            }
        }
    }

    pub fn step(&mut self, problem: &GlmProblem) -> Result<(), SolverError> {
        match self {
            Solver::San(s) => s.step(problem),
            Solver::Sana(s) => s.step(problem),
            Solver::SanId(s) => s.step(problem),
            Solver::Snm(s) => s.step(problem),
            Solver::Sag(s) => {
                s.step(problem);
                Ok(())
            }
            Solver::Svrg(s) => {
                s.step(problem);
                Ok(())
            }
        }
    }

    pub fn w(&self) -> &[f64] {
        match self {
            Solver::San(s) => s.w(),
            Solver::Sana(s) => s.w(),
            Solver::SanId(s) => s.w(),
            Solver::Snm(s) => s.w(),
            Solver::Sag(s) => s.w(),
            Solver::Svrg(s) => s.w(),
        }
    }

    pub fn data_accesses(&self) -> u64 {
        match self {
            Solver::San(s) => s.data_accesses(),
            Solver::Sana(s) => s.data_accesses(),
            Solver::SanId(s) => s.data_accesses(),
            Solver::Snm(s) => s.data_accesses(),
            Solver::Sag(s) => s.data_accesses(),
            Solver::Svrg(s) => s.data_accesses(),
        }
    }

    pub fn add_accesses(&mut self, k: u64) {
        match self {
            Solver::San(s) => s.add_accesses(k),
            Solver::Sana(s) => s.add_accesses(k),
            Solver::SanId(s) => s.add_accesses(k),
            Solver::Snm(s) => s.add_accesses(k),
            Solver::Sag(s) => s.add_accesses(k),
            Solver::Svrg(s) => s.add_accesses(k),
        }
    }

    pub fn passes(&self, n: usize) -> f64 {
        self.data_accesses() as f64 / n as f64
    }
}

const PASS_EPS: f64 = 1e-9;

/// Drives the configured solver, checkpointing `‖∇f‖` and `f` every
/// `checkpoint_every` effective passes, until the stop rule fires.
pub fn run(
    problem: &GlmProblem,
    cfg: &SolverConfig,
    stop: &StopRule,
    opts: &RunOptions,
) -> Result<Trace, SolverError> {
    run_with_final(problem, cfg, stop, opts).map(|(trace, _)| trace)
}

/// Like [`run`], additionally returning the final iterate.
pub fn run_with_final(
    problem: &GlmProblem,
    cfg: &SolverConfig,
    stop: &StopRule,
    opts: &RunOptions,
) -> Result<(Trace, Vec<f64>), SolverError> {
    if !(stop.grad_tol > 0.0) || !(stop.max_passes >= 0.0) {
        return Err(SolverError::InvalidConfig(format!(
            "stop rule needs grad_tol > 0 and max_passes >= 0, got {stop:?}"
        )));
    }
    if !(opts.checkpoint_every > 0.0) {
        return Err(SolverError::InvalidConfig(
            "checkpoint spacing must be positive".into(),
        ));
    }

    let n = problem.n();
    let mut solver = Solver::new(problem, cfg)?;
    let started = Instant::now();
    let mut rows: Vec<TraceRow> = Vec::new();

    let take_checkpoint = |solver: &mut Solver, rows: &mut Vec<TraceRow>| -> f64 {
        let (fval, grad) = problem.full_objective_and_grad(solver.w());
        let grad_norm = vecops::norm(&grad);
        rows.push(TraceRow {
            pass: solver.passes(n),
            grad_norm,
            fval,
            wall_s: started.elapsed().as_secs_f64(),
        });
        if opts.count_checkpoint_cost {
            solver.add_accesses(n as u64);
        }
        grad_norm
    };

    let mut grad_norm = take_checkpoint(&mut solver, &mut rows);
    let mut next_cp = opts.checkpoint_every;
    while next_cp <= solver.passes(n) + PASS_EPS {
        next_cp += opts.checkpoint_every;
    }

    let status = loop {
        if grad_norm <= stop.grad_tol {
            break TerminalStatus::GradTol;
        }
        if solver.passes(n) + PASS_EPS >= stop.max_passes {
            break TerminalStatus::MaxPasses;
        }
        loop {
            solver.step(problem)?;
            let p = solver.passes(n);
            if p + PASS_EPS >= next_cp || p + PASS_EPS >= stop.max_passes {
                break;
            }
        }
        grad_norm = take_checkpoint(&mut solver, &mut rows);
        while next_cp <= solver.passes(n) + PASS_EPS {
            next_cp += opts.checkpoint_every;
        }
    };

    let w = solver.w().to_vec();
    Ok((Trace { rows, status }, w))
}
