//! Run traces: per-checkpoint records, terminal status, multi-seed
//! aggregation and threshold queries.

/// One checkpoint: effective passes consumed so far, gradient norm,
/// objective value and wall-clock seconds since the run started.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub pass: f64,
    pub grad_norm: f64,
    pub fval: f64,
    pub wall_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalStatus {
    /// Gradient norm fell below the stop tolerance.
    GradTol,
    /// The effective-pass budget ran out first.
    MaxPasses,
}

impl TerminalStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            TerminalStatus::GradTol => "grad_tol",
            TerminalStatus::MaxPasses => "max_passes",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub status: TerminalStatus,
}

impl Trace {
    /// First checkpoint pass at which the gradient norm is at or below
    /// `tol`, if any.
    pub fn passes_to_threshold(&self, tol: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.grad_norm <= tol)
            .map(|r| r.pass)
    }

    pub fn final_pass(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.pass)
    }

    /// Gradient norm at the last checkpoint whose pass does not exceed
    /// `pass` (the curve is piecewise constant between checkpoints).
    pub fn grad_norm_at(&self, pass: f64) -> Option<f64> {
        self.rows
            .iter()
            .take_while(|r| r.pass <= pass)
            .last()
            .map(|r| r.grad_norm)
    }
}

/// Median/min/max envelope of one statistic across seeds at a shared
/// checkpoint pass.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub pass: f64,
    pub seeds: usize,
    pub grad_norm_median: f64,
    pub grad_norm_min: f64,
    pub grad_norm_max: f64,
    pub fval_median: f64,
    pub fval_min: f64,
    pub fval_max: f64,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Per-pass median and min/max envelope across seeds. Checkpoints fall
/// on a shared pass grid, so rows are grouped by exact pass value;
/// seeds that stopped early simply drop out of later rows.
pub fn aggregate(traces: &[&Trace]) -> Vec<AggregateRow> {
    let mut passes: Vec<f64> = traces
        .iter()
        .flat_map(|t| t.rows.iter().map(|r| r.pass))
        .collect();
    passes.sort_by(f64::total_cmp);
    passes.dedup();

    let mut out = Vec::with_capacity(passes.len());
    for &pass in &passes {
        let mut gns: Vec<f64> = Vec::new();
        let mut fvs: Vec<f64> = Vec::new();
        for t in traces {
            if let Some(row) = t.rows.iter().find(|r| r.pass == pass) {
                gns.push(row.grad_norm);
                fvs.push(row.fval);
            }
        }
        if gns.is_empty() {
            continue;
        }
        gns.sort_by(f64::total_cmp);
        fvs.sort_by(f64::total_cmp);
        out.push(AggregateRow {
            pass,
            seeds: gns.len(),
            grad_norm_median: median(&gns),
            grad_norm_min: gns[0],
            grad_norm_max: gns[gns.len() - 1],
            fval_median: median(&fvs),
            fval_min: fvs[0],
            fval_max: fvs[fvs.len() - 1],
        });
    }
    out
}
