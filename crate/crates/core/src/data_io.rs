//! LibSVM-format parsing, preprocessing (intercept column, label
//! mapping) and seeded synthetic problem generation.
//!
//! The loader performs no scaling or normalization: whatever numbers
//! are in the file are the numbers in the dataset. Downloads are the
//! business of a separate fetch step; nothing here touches the network.

use std::io::BufRead;

use rand::{RngExt, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rand_pcg::Pcg64;
use thiserror::Error;

use crate::model::{GlmProblem, Loss, ModelError, Regularizer, SparseRow};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}, column {col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("label mapping needs exactly two distinct labels, found {0}")]
    LabelArity(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A parsed LibSVM file: labels, rows of 1-based `(index, value)` pairs
/// in file order, and the largest feature index seen anywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub labels: Vec<f64>,
    pub rows: Vec<Vec<(u32, f64)>>,
    pub max_index: u32,
}

#[derive(Debug, Clone, Copy)]
pub struct PreprocessOptions {
    /// Append a constant-one feature as the last coordinate.
    pub add_intercept: bool,
    /// Map the smaller of the two label values to -1, the larger to +1.
    pub map_labels: bool,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            add_intercept: true,
            map_labels: true,
        }
    }
}

/// Preprocessed dataset: 0-based sparse rows, labels and dimension,
/// ready to pair with a loss and regularizer.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub rows: Vec<SparseRow>,
    pub labels: Vec<f64>,
    pub d: usize,
}

fn parse_err(line: usize, col: usize, message: impl Into<String>) -> DataError {
    DataError::Parse {
        line,
        col,
        message: message.into(),
    }
}

/// Parses LibSVM text: each nonempty line is `<label> (<idx>:<val>)*`
/// with 1-based strictly increasing indices; `#` starts a comment that
/// runs to the end of the line.
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<RawDataset, DataError> {
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    let mut max_index = 0u32;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let data = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line[..],
        };
        if data.trim().is_empty() {
            continue;
        }

        let mut tokens = data.split_whitespace();
        let label_tok = tokens.next().expect("nonempty line has a first token");
        let col_of = |tok: &str| data.find(tok).map_or(1, |p| p + 1);
        let label: f64 = label_tok
            .parse()
            .map_err(|_| parse_err(lineno, col_of(label_tok), format!("bad label `{label_tok}`")))?;
        if !label.is_finite() {
            return Err(parse_err(lineno, col_of(label_tok), "label is not finite"));
        }

        let mut row: Vec<(u32, f64)> = Vec::new();
        let mut cursor = 0usize;
        for tok in tokens {
            // Locate the token for column reporting; search from the cursor
            // so repeated tokens are attributed to the right position.
            let col = data[cursor..].find(tok).map_or(1, |p| cursor + p + 1);
            cursor = col - 1 + tok.len();
            let (idx_str, val_str) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, col, format!("expected idx:val, got `{tok}`")))?;
            let idx: u32 = idx_str
                .parse()
                .map_err(|_| parse_err(lineno, col, format!("bad feature index `{idx_str}`")))?;
            if idx < 1 {
                return Err(parse_err(lineno, col, "feature indices are 1-based"));
            }
            let val: f64 = val_str
                .parse()
                .map_err(|_| parse_err(lineno, col, format!("bad feature value `{val_str}`")))?;
            if !val.is_finite() {
                return Err(parse_err(lineno, col, "feature value is not finite"));
            }
            if let Some(&(prev, _)) = row.last() {
                if idx <= prev {
                    return Err(parse_err(
                        lineno,
                        col,
                        format!("indices must be strictly increasing ({prev} then {idx})"),
                    ));
                }
            }
            max_index = max_index.max(idx);
            row.push((idx, val));
        }
        labels.push(label);
        rows.push(row);
    }

    Ok(RawDataset {
        labels,
        rows,
        max_index,
    })
}

/// Writes a dataset back out in canonical LibSVM form (shortest
/// round-trip float formatting, one space between tokens).
pub fn write_libsvm<W: std::io::Write>(mut out: W, data: &RawDataset) -> std::io::Result<()> {
    for (label, row) in data.labels.iter().zip(&data.rows) {
        write!(out, "{label}")?;
        for (idx, val) in row {
            write!(out, " {idx}:{val}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Converts a raw dataset into solver-ready form: 0-based indices,
/// optional trailing intercept coordinate fixed at 1.0, and labels
/// mapped onto `{-1, +1}` (smallest label to -1).
pub fn preprocess(raw: &RawDataset, opts: &PreprocessOptions) -> Result<Preprocessed, DataError> {
    let base_d = raw.max_index as usize;
    let d = base_d + usize::from(opts.add_intercept);

    let mut labels = raw.labels.clone();
    if opts.map_labels {
        let mut distinct: Vec<f64> = labels.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() != 2 {
            return Err(DataError::LabelArity(distinct.len()));
        }
        let (lo, hi) = (distinct[0], distinct[1]);
        for y in &mut labels {
            *y = if *y == lo { -1.0 } else { 1.0 };
        }
        let _ = hi;
    }

    let mut rows = Vec::with_capacity(raw.rows.len());
    for raw_row in &raw.rows {
        let mut indices: Vec<u32> = raw_row.iter().map(|&(i, _)| i - 1).collect();
        let mut values: Vec<f64> = raw_row.iter().map(|&(_, v)| v).collect();
        if opts.add_intercept {
            indices.push(base_d as u32);
            values.push(1.0);
        }
        rows.push(SparseRow::new(indices, values)?);
    }

    Ok(Preprocessed { rows, labels, d })
}

/// Deterministic synthetic logistic problem: rows are i.i.d. normal
/// entries scaled by `margin_scale / √d`, labels come from a planted
/// weight vector with 5% flips, regularization is L2 with `λ = 1/n`.
///
/// Draw order is fixed (planted vector, then rows, then flips) so a
/// given seed yields the same problem on every run.
pub fn synth_logistic(n: usize, d: usize, seed: u64, margin_scale: f64) -> GlmProblem {
    assert!(n >= 2 && d >= 1, "synthetic problems need n >= 2, d >= 1");
    let mut rng = Pcg64::seed_from_u64(seed);
    let planted: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let scale = margin_scale / (d as f64).sqrt();
    let rows: Vec<SparseRow> = (0..n)
        .map(|_| {
            let vals: Vec<f64> = (0..d)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    scale * z
                })
                .collect();
            SparseRow::dense(&vals)
        })
        .collect();
    let labels: Vec<f64> = rows
        .iter()
        .map(|row| {
            let clean = if row.dot(&planted) >= 0.0 { 1.0 } else { -1.0 };
            if rng.random::<f64>() < 0.05 {
                -clean
            } else {
                clean
            }
        })
        .collect();
    let reg = Regularizer::l2(1.0 / n as f64).expect("nonnegative lambda");
    GlmProblem::new(rows, labels, d, Loss::Logistic, reg).expect("valid synthetic problem")
}
