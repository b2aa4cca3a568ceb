//! Incremental second-order solvers for regularized generalized linear
//! models, built around a function-splitting reformulation of the
//! stationarity conditions: the iterate `w` is augmented with one
//! auxiliary vector `α_i` per data point and the solvers apply
//! subsampled Newton–Raphson steps to the resulting system.
//!
//! The crate provides
//!
//! * [`model`] — scalar loss/regularizer calculus and GLM problems;
//! * [`linalg`] — structured and small dense linear algebra;
//! * [`data_io`] — LibSVM parsing, preprocessing and synthetic problems;
//! * [`solvers`] — SAN, SANA, SAN-id, SNM plus SAG and SVRG baselines
//!   behind one stepping contract with effective-pass accounting;
//! * [`snrvm`] — a dense reference implementation of the variable-metric
//!   sketched Newton–Raphson iteration, used as a correctness oracle and
//!   for empirical contraction-rate experiments;
//! * [`trace`] — run traces, aggregation and threshold queries.
//!
//! ```
//! use sansolve::data_io::synth_logistic;
//! use sansolve::{run, RunOptions, SolverConfig, SolverKind, StopRule, TerminalStatus};
//!
//! let problem = synth_logistic(500, 10, 1, 1.0);
//! let cfg = SolverConfig::new(SolverKind::San).seed(1);
//! let trace = run(&problem, &cfg, &StopRule::default(), &RunOptions::default()).unwrap();
//! assert_eq!(trace.status, TerminalStatus::GradTol);
//! assert!(trace.rows.last().unwrap().grad_norm <= 1e-6);
//! ```

// Guards of the form `!(x > 0.0)` are deliberate: they reject NaN along
// with the out-of-range values, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data_io;
pub mod linalg;
pub mod model;
pub mod snrvm;
pub mod solvers;
pub mod trace;
pub(crate) mod vecops;

pub use model::{GlmProblem, Loss, ModelError, RegKind, Regularizer, SparseRow};
pub use solvers::{run, run_with_final, RunOptions, SolverConfig, SolverError, SolverKind, StopRule};
pub use trace::{TerminalStatus, Trace, TraceRow};
