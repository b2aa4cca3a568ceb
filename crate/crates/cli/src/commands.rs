//! The four subcommands: `run` (trace CSVs plus per-solver aggregate),
//! `grid` (mean-passes-to-threshold sweep), `rate` (contraction-rate
//! report on quadratics) and `fetch-data` (optional dataset download).

use std::collections::BTreeMap;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_pcg::Pcg64;

use crate::config::{
    default_baseline_gamma_grid, default_newton_gamma_grid, ExperimentConfig, MatrixSpec,
    ProblemSpec, RateSpec,
};
use crate::csv_io;
use crate::CliError;
use sansolve::data_io::{parse_libsvm, preprocess, synth_logistic, PreprocessOptions};
use sansolve::model::GlmProblem;
use sansolve::snrvm::{contraction_experiment, LinearSystem, SketchDistribution};
use sansolve::solvers::{run, RunOptions, SolverError, StopRule};
use sansolve::trace::{aggregate, TerminalStatus, Trace};

pub struct CommonArgs {
    pub out_dir: PathBuf,
    pub data_dir: PathBuf,
    pub jobs: Option<usize>,
    pub seed_base: Option<u64>,
}

fn solver_error(e: SolverError) -> CliError {
    match e {
        SolverError::InvalidConfig(msg) => CliError::Config(msg),
        other => CliError::Numeric(other.to_string()),
    }
}

fn build_problem(cfg: &ExperimentConfig, data_dir: &Path) -> Result<GlmProblem, CliError> {
    match &cfg.problem {
        ProblemSpec::Synthetic {
            n,
            d,
            seed,
            margin_scale,
        } => {
            if cfg.loss != crate::config::LossSpec::Logistic {
                return Err(CliError::Config(
                    "synthetic problems are logistic; drop the loss override".into(),
                ));
            }
            if *n < 2 || *d < 1 {
                return Err(CliError::Config("synthetic problems need n >= 2, d >= 1".into()));
            }
            let base = synth_logistic(*n, *d, *seed, *margin_scale);
            // Re-wrap with the configured regularizer when it differs
            // from the generator's default λ = 1/n L2.
            let reg = cfg.regularizer.build(base.n())?;
            let rows = (0..base.n()).map(|i| base.row(i).clone()).collect();
            let labels = (0..base.n()).map(|i| base.label(i)).collect();
            GlmProblem::new(rows, labels, base.d(), base.loss(), reg)
                .map_err(|e| CliError::Config(e.to_string()))
        }
        ProblemSpec::Libsvm {
            path,
            add_intercept,
            map_labels,
        } => {
            let candidate = PathBuf::from(path);
            let resolved = if candidate.is_file() {
                candidate
            } else {
                data_dir.join(path)
            };
            let file = std::fs::File::open(&resolved).map_err(|e| {
                CliError::Data(format!("cannot open dataset {}: {e}", resolved.display()))
            })?;
            let raw = parse_libsvm(BufReader::new(file))
                .map_err(|e| CliError::Data(format!("{}: {e}", resolved.display())))?;
            let opts = PreprocessOptions {
                add_intercept: *add_intercept,
                map_labels: *map_labels,
            };
            let prep = preprocess(&raw, &opts)
                .map_err(|e| CliError::Data(format!("{}: {e}", resolved.display())))?;
            let reg = cfg.regularizer.build(prep.rows.len())?;
            GlmProblem::new(prep.rows, prep.labels, prep.d, cfg.loss.into(), reg)
                .map_err(|e| CliError::Data(e.to_string()))
        }
    }
}

fn in_pool<T: Send>(jobs: Option<usize>, work: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match jobs {
        None | Some(0) => Ok(work()),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Config(format!("cannot build a {k}-thread pool: {e}")))
            .map(|pool| pool.install(work)),
    }
}

/// Runs every configured (solver, seed) pair, writing one trace CSV per
/// pair and a per-solver aggregate with the median line and min/max
/// envelope across seeds.
pub fn cmd_run(cfg: &ExperimentConfig, args: &CommonArgs) -> Result<(), CliError> {
    if cfg.solvers.is_empty() {
        return Err(CliError::Config("config lists no solvers".into()));
    }
    if cfg.seeds == 0 {
        return Err(CliError::Config("config needs at least one seed".into()));
    }
    let problem = build_problem(cfg, &args.data_dir)?;
    let lmax = problem.lmax();
    let seed_base = args.seed_base.unwrap_or(cfg.seed_base);
    let stop: StopRule = cfg.stop.into();
    let opts = RunOptions {
        checkpoint_every: cfg.checkpoint_every,
        count_checkpoint_cost: false,
    };

    let mut jobs_list = Vec::new();
    for spec in &cfg.solvers {
        for k in 0..cfg.seeds {
            let seed = seed_base + k as u64;
            jobs_list.push((spec.kind()?, spec.build(lmax, seed)?, seed));
        }
    }

    let results: Vec<Result<(String, u64, Trace), CliError>> = in_pool(args.jobs, || {
        use rayon::prelude::*;
        jobs_list
            .par_iter()
            .map(|(kind, solver_cfg, seed)| {
                let trace = run(&problem, solver_cfg, &stop, &opts).map_err(solver_error)?;
                Ok((kind.as_str().to_string(), *seed, trace))
            })
            .collect()
    })?;

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", args.out_dir.display())))?;

    let mut by_solver: BTreeMap<String, Vec<(u64, Trace)>> = BTreeMap::new();
    for result in results {
        let (solver, seed, trace) = result?;
        let path = args.out_dir.join(format!("{solver}_seed{seed}.csv"));
        csv_io::atomic_write(&path, &csv_io::trace_csv(&solver, seed, &trace))?;
        by_solver.entry(solver).or_default().push((seed, trace));
    }
    for (solver, runs) in &by_solver {
        let traces: Vec<&Trace> = runs.iter().map(|(_, t)| t).collect();
        let rows = aggregate(&traces);
        let path = args.out_dir.join(format!("{solver}_aggregate.csv"));
        csv_io::atomic_write(&path, &csv_io::aggregate_csv(solver, &rows))?;
    }
    Ok(())
}

/// Mean effective passes to the threshold over `repeats` seeds for each
/// grid cell; cells that miss the pass budget (or cannot run, like
/// averaging probabilities at or above 1) come out as the `X` sentinel.
pub fn cmd_grid(cfg: &ExperimentConfig, args: &CommonArgs) -> Result<(), CliError> {
    let grid = cfg
        .grid
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no `grid` section".into()))?;
    let kind: sansolve::solvers::SolverKind = grid.solver.parse().map_err(CliError::Config)?;
    if grid.repeats == 0 {
        return Err(CliError::Config("grid needs repeats >= 1".into()));
    }
    let problem = build_problem(cfg, &args.data_dir)?;
    let n = problem.n() as f64;
    let lmax = problem.lmax();
    let seed_base = args.seed_base.unwrap_or(cfg.seed_base);
    let stop = StopRule {
        grad_tol: grid.threshold,
        max_passes: cfg.stop.max_passes,
    };
    let opts = RunOptions {
        checkpoint_every: cfg.checkpoint_every,
        count_checkpoint_cost: false,
    };

    let newton = kind.is_newton_family();
    let gammas = grid.gamma_grid.clone().unwrap_or_else(|| {
        if newton {
            default_newton_gamma_grid()
        } else {
            default_baseline_gamma_grid()
        }
    });
    let p_rows: Vec<Option<f64>> = if newton {
        grid.p_grid_over_n.iter().map(|&m| Some(m)).collect()
    } else {
        vec![None]
    };

    let mut cell_jobs = Vec::new();
    for (r, p_mult) in p_rows.iter().enumerate() {
        for (c, &gamma) in gammas.iter().enumerate() {
            cell_jobs.push((r, c, *p_mult, gamma));
        }
    }

    let cells: Vec<(usize, usize, Option<f64>)> = in_pool(args.jobs, || {
        use rayon::prelude::*;
        cell_jobs
            .par_iter()
            .map(|&(r, c, p_mult, gamma)| {
                let p = p_mult.map(|m| m / n);
                if let Some(p) = p {
                    if !(0.0 < p && p < 1.0) {
                        return (r, c, None);
                    }
                }
                let mut total = 0.0;
                for k in 0..grid.repeats {
                    let mut solver_cfg = sansolve::solvers::SolverConfig::new(kind)
                        .seed(seed_base + k as u64);
                    solver_cfg.p = p;
                    solver_cfg.gamma = Some(if newton { gamma } else { gamma / lmax });
                    match run(&problem, &solver_cfg, &stop, &opts) {
                        Ok(trace) if trace.status == TerminalStatus::GradTol => {
                            total += trace.final_pass();
                        }
                        _ => return (r, c, None),
                    }
                }
                (r, c, Some(total / grid.repeats as f64))
            })
            .collect()
    })?;

    let mut matrix = vec![vec![None; gammas.len()]; p_rows.len()];
    for (r, c, value) in cells {
        matrix[r][c] = value;
    }
    let row_labels: Vec<String> = p_rows
        .iter()
        .map(|p| p.map_or_else(|| "-".to_string(), |m| m.to_string()))
        .collect();

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", args.out_dir.display())))?;
    let path = args.out_dir.join(format!("grid_{}.csv", kind.as_str()));
    csv_io::atomic_write(&path, &csv_io::grid_csv(&row_labels, &gammas, &matrix))
}

fn build_matrix(spec: &MatrixSpec) -> Result<DMatrix<f64>, CliError> {
    match spec {
        MatrixSpec::Diag { entries } => {
            if entries.is_empty() || entries.iter().any(|&e| e.is_nan() || e <= 0.0) {
                return Err(CliError::Config(
                    "diagonal rate matrices need positive entries".into(),
                ));
            }
            Ok(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
        }
        MatrixSpec::RandomSpd { dim, seed } => {
            if *dim == 0 {
                return Err(CliError::Config("rate matrix dimension must be positive".into()));
            }
            let mut rng = Pcg64::seed_from_u64(*seed);
            let g = DMatrix::from_fn(*dim, *dim, |_, _| 2.0 * rng.random::<f64>() - 1.0);
            Ok(&g * g.transpose() + DMatrix::identity(*dim, *dim) * 0.1)
        }
    }
}

/// Contraction-rate report: analytic ρ of the sketch distribution on an
/// SPD quadratic against the Monte-Carlo decay of `E‖x − x*‖²_W`.
pub fn cmd_rate(cfg: &ExperimentConfig, args: &CommonArgs) -> Result<(), CliError> {
    let rate: &RateSpec = cfg
        .rate
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no `rate` section".into()))?;
    let a = build_matrix(&rate.matrix)?;
    if a.clone().cholesky().is_none() {
        return Err(CliError::Config("rate matrix is not SPD".into()));
    }
    let dim = a.nrows();
    let lin = LinearSystem {
        a: a.clone(),
        b: DVector::zeros(dim),
    };
    let dist = match rate.sketch.as_str() {
        "coordinate" => SketchDistribution::coordinate(&a),
        "full" => SketchDistribution::full(dim),
        other => {
            return Err(CliError::Config(format!(
                "unknown sketch `{other}` (expected coordinate or full)"
            )))
        }
    };
    let x0 = DVector::from_element(dim, 1.0);
    let report = contraction_experiment(
        &lin,
        &dist,
        &x0,
        rate.steps,
        rate.trials,
        rate.gamma,
        rate.seed,
    )
    .map_err(|e| CliError::Numeric(e.to_string()))?;

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", args.out_dir.display())))?;
    let csv = csv_io::rate_csv(&csv_io::RateRow {
        sketch: &rate.sketch,
        dim,
        steps: rate.steps,
        trials: rate.trials,
        gamma: rate.gamma,
        rho: report.rho,
        empirical_rate: report.empirical_rate,
        slack: rate.slack,
        pass: report.within_bound(rate.slack),
    });
    csv_io::atomic_write(&args.out_dir.join("rate.csv"), &csv)?;
    println!(
        "rho {} empirical {} {}",
        report.rho,
        report.empirical_rate,
        if report.within_bound(rate.slack) {
            "pass"
        } else {
            "FAIL"
        }
    );
    Ok(())
}

const DATASET_URLS: &[(&str, &str, bool)] = &[
    (
        "mushrooms",
        "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary/mushrooms",
        false,
    ),
    (
        "phishing",
        "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary/phishing",
        false,
    ),
    (
        "ijcnn1",
        "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary/ijcnn1.bz2",
        true,
    ),
    (
        "covtype",
        "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary/covtype.libsvm.binary.scale.bz2",
        true,
    ),
    (
        "real-sim",
        "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary/real-sim.bz2",
        true,
    ),
    (
        "rcv1",
        "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary/rcv1_train.binary.bz2",
        true,
    ),
    (
        "webspam",
        "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary/webspam_wc_normalized_unigram.svm.bz2",
        true,
    ),
    (
        "epsilon",
        "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary/epsilon_normalized.bz2",
        true,
    ),
];

/// Downloads LibSVM datasets into the data directory via `curl`
/// (decompressing with `bunzip2` where needed). The solvers themselves
/// never touch the network; this is strictly an optional convenience.
pub fn cmd_fetch(data_dir: &Path, names: &[String]) -> Result<(), CliError> {
    let default_names = ["mushrooms".to_string(), "phishing".to_string()];
    let wanted: &[String] = if names.is_empty() { &default_names } else { names };
    std::fs::create_dir_all(data_dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", data_dir.display())))?;
    for name in wanted {
        let Some(&(_, url, compressed)) = DATASET_URLS.iter().find(|(n, _, _)| n == name) else {
            return Err(CliError::Config(format!(
                "unknown dataset `{name}`; known: {}",
                DATASET_URLS
                    .iter()
                    .map(|(n, _, _)| *n)
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        };
        let target = data_dir.join(name);
        if target.is_file() {
            println!("{name}: already present");
            continue;
        }
        let download = if compressed {
            target.with_extension("bz2")
        } else {
            target.clone()
        };
        println!("{name}: fetching {url}");
        let status = std::process::Command::new("curl")
            .args(["-fsSL", url, "-o"])
            .arg(&download)
            .status()
            .map_err(|e| CliError::Data(format!("cannot spawn curl: {e}")))?;
        if !status.success() {
            return Err(CliError::Data(format!("curl failed for {url} ({status})")));
        }
        if compressed {
            let status = std::process::Command::new("bunzip2")
                .arg(&download)
                .status()
                .map_err(|e| CliError::Data(format!("cannot spawn bunzip2: {e}")))?;
            if !status.success() {
                return Err(CliError::Data(format!(
                    "bunzip2 failed for {} ({status})",
                    download.display()
                )));
            }
            // bunzip2 drops the .bz2 suffix, which is exactly `target`.
        }
        println!("{name}: saved to {}", target.display());
    }
    Ok(())
}
