//! Python bindings: problem construction (synthetic or LibSVM), full
//! objective evaluation and solver runs with trace output.

use std::io::BufReader;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use sansolve::data_io::{parse_libsvm, preprocess, synth_logistic, PreprocessOptions};
use sansolve::model::{GlmProblem, Loss, RegKind, Regularizer};
use sansolve::solvers::{run_with_final, RunOptions, SolverConfig, SolverKind, StopRule};

/// A regularized GLM instance (immutable once built).
#[pyclass(frozen, name = "Problem")]
struct PyProblem {
    inner: GlmProblem,
}

#[pymethods]
impl PyProblem {
    /// Number of data points.
    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    /// Feature dimension.
    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    /// Largest per-term smoothness constant (sets the 1/L_max baseline
    /// step size).
    fn lmax(&self) -> f64 {
        self.inner.lmax()
    }

    /// Full objective value and gradient at `w`.
    fn objective(&self, w: Vec<f64>) -> PyResult<(f64, Vec<f64>)> {
        if w.len() != self.inner.d() {
            return Err(PyValueError::new_err(format!(
                "w has length {}, problem dimension is {}",
                w.len(),
                self.inner.d()
            )));
        }
        Ok(self.inner.full_objective_and_grad(&w))
    }

    fn grad_norm(&self, w: Vec<f64>) -> PyResult<f64> {
        self.objective(w)
            .map(|(_, g)| g.iter().map(|x| x * x).sum::<f64>().sqrt())
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(n={}, d={}, loss={:?})",
            self.inner.n(),
            self.inner.d(),
            self.inner.loss()
        )
    }
}

/// Trace of one solver run.
#[pyclass(frozen, name = "RunResult")]
struct PyRunResult {
    #[pyo3(get)]
    rows: Vec<(f64, f64, f64, f64)>,
    #[pyo3(get)]
    status: String,
    #[pyo3(get)]
    w: Vec<f64>,
}

#[pymethods]
impl PyRunResult {
    /// Effective passes consumed when the run stopped.
    fn final_pass(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.0)
    }

    fn final_grad_norm(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.1)
    }

    fn __repr__(&self) -> String {
        format!(
            "RunResult(status={}, passes={}, grad_norm={:.3e})",
            self.status,
            self.final_pass(),
            self.final_grad_norm()
        )
    }
}

fn reg_from_args(kind: &str, reg_weight: f64, delta: f64) -> PyResult<Regularizer> {
    let kind = match kind {
        "l2" => RegKind::L2,
        "pseudo_huber" => RegKind::PseudoHuber { delta },
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown regularizer `{other}` (expected l2 or pseudo_huber)"
            )))
        }
    };
    Regularizer::new(kind, reg_weight).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Deterministic synthetic logistic problem (L2, λ = 1/n).
#[pyfunction]
#[pyo3(signature = (n, d, seed, margin_scale=1.0))]
fn synth_problem(n: usize, d: usize, seed: u64, margin_scale: f64) -> PyResult<PyProblem> {
    if n < 2 || d < 1 {
        return Err(PyValueError::new_err("need n >= 2 and d >= 1"));
    }
    Ok(PyProblem {
        inner: synth_logistic(n, d, seed, margin_scale),
    })
}

/// Loads a LibSVM text file and builds a regularized GLM.
///
/// `reg_weight=None` means the conventional λ = 1/n.
#[pyfunction]
#[pyo3(signature = (path, loss="logistic", regularizer="l2", reg_weight=None, delta=1.0, add_intercept=true, map_labels=true))]
#[allow(clippy::too_many_arguments)]
fn load_libsvm(
    path: &str,
    loss: &str,
    regularizer: &str,
    reg_weight: Option<f64>,
    delta: f64,
    add_intercept: bool,
    map_labels: bool,
) -> PyResult<PyProblem> {
    let file = std::fs::File::open(path)
        .map_err(|e| PyIOError::new_err(format!("cannot open {path}: {e}")))?;
    let raw = parse_libsvm(BufReader::new(file))
        .map_err(|e| PyValueError::new_err(format!("{path}: {e}")))?;
    let prep = preprocess(
        &raw,
        &PreprocessOptions {
            add_intercept,
            map_labels,
        },
    )
    .map_err(|e| PyValueError::new_err(format!("{path}: {e}")))?;
    let loss = match loss {
        "logistic" => Loss::Logistic,
        "squared" => Loss::Squared,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown loss `{other}` (expected logistic or squared)"
            )))
        }
    };
    let lambda = reg_weight.unwrap_or(1.0 / prep.rows.len() as f64);
    let reg = reg_from_args(regularizer, lambda, delta)?;
    GlmProblem::new(prep.rows, prep.labels, prep.d, loss, reg)
        .map(|inner| PyProblem { inner })
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Runs one solver on a problem and returns its checkpoint trace.
///
/// `solver` is one of san, sana, san_id, snm, sag, svrg. Unset `gamma`
/// and `p` fall back to the protocol defaults (γ = 1 and p = 1/(n+1)
/// for the Newton family, γ = 1/L_max for SAG/SVRG).
#[pyfunction]
#[pyo3(signature = (problem, solver="san", seed=0, gamma=None, p=None, svrg_inner=None, grad_tol=1e-6, max_passes=50.0, checkpoint_every=1.0))]
#[allow(clippy::too_many_arguments)]
fn run_solver(
    problem: &PyProblem,
    solver: &str,
    seed: u64,
    gamma: Option<f64>,
    p: Option<f64>,
    svrg_inner: Option<usize>,
    grad_tol: f64,
    max_passes: f64,
    checkpoint_every: f64,
) -> PyResult<PyRunResult> {
    let kind: SolverKind = solver.parse().map_err(PyValueError::new_err)?;
    let mut cfg = SolverConfig::new(kind).seed(seed);
    cfg.gamma = gamma;
    cfg.p = p;
    cfg.svrg_inner = svrg_inner;
    let stop = StopRule {
        grad_tol,
        max_passes,
    };
    let opts = RunOptions {
        checkpoint_every,
        count_checkpoint_cost: false,
    };
    let (trace, w) = run_with_final(&problem.inner, &cfg, &stop, &opts)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(PyRunResult {
        rows: trace
            .rows
            .iter()
            .map(|r| (r.pass, r.grad_norm, r.fval, r.wall_s))
            .collect(),
        status: trace.status.as_str().to_string(),
        w,
    })
}

/// Scalar loss evaluation `(value, first, second derivative)`.
#[pyfunction]
fn loss_eval(loss: &str, t: f64, y: f64) -> PyResult<(f64, f64, f64)> {
    let loss = match loss {
        "logistic" => Loss::Logistic,
        "squared" => Loss::Squared,
        other => return Err(PyValueError::new_err(format!("unknown loss `{other}`"))),
    };
    Ok(loss.eval(t, y))
}

#[pymodule]
fn sansolve_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(synth_problem, m)?)?;
    m.add_function(wrap_pyfunction!(load_libsvm, m)?)?;
    m.add_function(wrap_pyfunction!(run_solver, m)?)?;
    m.add_function(wrap_pyfunction!(loss_eval, m)?)?;
    Ok(())
}
