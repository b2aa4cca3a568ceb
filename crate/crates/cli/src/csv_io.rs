//! CSV emission. Floats go through Rust's shortest-round-trip
//! formatting, so medians recomputed from the files match the in-memory
//! aggregation bit for bit. Files are written to a temporary sibling
//! and renamed into place.

use std::fmt::Write as _;
use std::path::Path;

use crate::CliError;
use sansolve::trace::{AggregateRow, Trace};

pub fn atomic_write(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)
        .and_then(|()| std::fs::rename(&tmp, path))
        .map_err(|e| CliError::Data(format!("writing {}: {e}", path.display())))
}

pub const TRACE_HEADER: &str = "solver,seed,pass,grad_norm,fval,wall_s";

pub fn trace_csv(solver: &str, seed: u64, trace: &Trace) -> String {
    let mut out = String::new();
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for row in &trace.rows {
        writeln!(
            out,
            "{solver},{seed},{},{},{},{}",
            row.pass, row.grad_norm, row.fval, row.wall_s
        )
        .expect("string write");
    }
    out
}

pub const AGGREGATE_HEADER: &str =
    "solver,pass,seeds,grad_norm_median,grad_norm_min,grad_norm_max,fval_median,fval_min,fval_max";

pub fn aggregate_csv(solver: &str, rows: &[AggregateRow]) -> String {
    let mut out = String::new();
    out.push_str(AGGREGATE_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{solver},{},{},{},{},{},{},{},{}",
            r.pass,
            r.seeds,
            r.grad_norm_median,
            r.grad_norm_min,
            r.grad_norm_max,
            r.fval_median,
            r.fval_min,
            r.fval_max
        )
        .expect("string write");
    }
    out
}

/// Grid matrix: one row per averaging-probability value (`-` for the
/// solvers that have none), one column per step-size value. Cells hold
/// the mean effective passes to the threshold, or `X` when a repeat
/// failed to get there within the pass budget.
pub fn grid_csv(row_labels: &[String], col_labels: &[f64], cells: &[Vec<Option<f64>>]) -> String {
    let mut out = String::from("p_over_n");
    for c in col_labels {
        write!(out, ",{c}").expect("string write");
    }
    out.push('\n');
    for (label, row) in row_labels.iter().zip(cells) {
        out.push_str(label);
        for cell in row {
            match cell {
                Some(v) => write!(out, ",{v}").expect("string write"),
                None => out.push_str(",X"),
            }
        }
        out.push('\n');
    }
    out
}

pub const RATE_HEADER: &str = "sketch,dim,steps,trials,gamma,rho,empirical_rate,bound,pass";

pub struct RateRow<'a> {
    pub sketch: &'a str,
    pub dim: usize,
    pub steps: usize,
    pub trials: usize,
    pub gamma: f64,
    pub rho: f64,
    pub empirical_rate: f64,
    pub slack: f64,
    pub pass: bool,
}

pub fn rate_csv(row: &RateRow) -> String {
    let bound = 1.0 - row.rho + row.slack;
    format!(
        "{RATE_HEADER}\n{},{},{},{},{},{},{},{bound},{}\n",
        row.sketch,
        row.dim,
        row.steps,
        row.trials,
        row.gamma,
        row.rho,
        row.empirical_rate,
        if row.pass { "pass" } else { "fail" }
    )
}
