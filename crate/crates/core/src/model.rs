//! Scalar loss and separable-regularizer calculus for regularized
//! generalized linear models.
//!
//! A problem is a finite sum `f(w) = (1/n) Σ f_i(w)` with
//! `f_i(w) = φ_i(⟨a_i, w⟩) + λ R(w)`, where `φ_i` is a scalar loss
//! attached to the sparse data row `a_i` and `R` is a separable
//! regularizer. Per-term Hessians are never materialized as dense
//! matrices here; they are exposed through their diagonal-plus-rank-one
//! structure (regularizer diagonal, scalar `φ''`, data row).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("row index {index} out of range ({n} data points)")]
    RowIndex { index: usize, n: usize },
    #[error("feature index {index} out of bounds for dimension {d}")]
    FeatureIndex { index: usize, d: usize },
    #[error("a problem needs n >= 1 data points and d >= 1 features")]
    EmptyProblem,
    #[error("{labels} labels for {rows} rows")]
    LabelCount { labels: usize, rows: usize },
    #[error("logistic labels must be -1 or +1, got {0}")]
    BadLabel(f64),
    #[error("regularization weight must be nonnegative, got {0}")]
    NegativeLambda(f64),
    #[error("pseudo-Huber delta must be positive, got {0}")]
    BadDelta(f64),
    #[error("sparse row indices must be strictly increasing")]
    UnsortedRow,
    #[error("sparse row has {indices} indices but {values} values")]
    RowShape { indices: usize, values: usize },
}

/// Numerically stable sigmoid `1 / (1 + e^{-z})`.
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softplus `ln(1 + e^z)`, branching at zero so the
/// exponential argument is never positive.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Scalar loss family applied to the margin `t = ⟨a_i, w⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    /// `φ(t) = ln(1 + e^{-y t})` with label `y ∈ {-1, +1}`.
    Logistic,
    /// `φ(t) = ½ (t - y)²` with a real-valued target `y`.
    Squared,
}

impl Loss {
    /// Evaluates `(φ(t), φ'(t), φ''(t))`.
    ///
    /// The logistic branch goes through softplus/sigmoid so margins up
    /// to `|t| = 1e3` stay finite and overflow-free.
    pub fn eval(self, t: f64, y: f64) -> (f64, f64, f64) {
        match self {
            Loss::Logistic => {
                let z = -y * t;
                let s = sigmoid(z);
                (softplus(z), -y * s, s * (1.0 - s))
            }
            Loss::Squared => {
                let r = t - y;
                (0.5 * r * r, r, 1.0)
            }
        }
    }

    /// Coefficient `c` in the per-term smoothness bound `L_i = c ‖a_i‖² + λ`.
    fn smoothness_coeff(self) -> f64 {
        match self {
            Loss::Logistic => 0.25,
            Loss::Squared => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegKind {
    /// `R_j(t) = ½ t²`.
    L2,
    /// `R_j(t) = δ² (√(1 + (t/δ)²) - 1)`, smooth L1/L2 interpolation.
    PseudoHuber { delta: f64 },
}

/// A λ-weighted separable regularizer `λ R(w) = λ Σ_j R_j(w_j)`.
///
/// All evaluations fold the weight λ in, so the returned Hessian
/// diagonal has strictly positive entries whenever `λ > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularizer {
    kind: RegKind,
    lambda: f64,
}

impl Regularizer {
    pub fn l2(lambda: f64) -> Result<Self, ModelError> {
        Self::new(RegKind::L2, lambda)
    }

    pub fn pseudo_huber(delta: f64, lambda: f64) -> Result<Self, ModelError> {
        if !(delta > 0.0) {
            return Err(ModelError::BadDelta(delta));
        }
        Self::new(RegKind::PseudoHuber { delta }, lambda)
    }

    pub fn new(kind: RegKind, lambda: f64) -> Result<Self, ModelError> {
        if !(lambda >= 0.0) {
            return Err(ModelError::NegativeLambda(lambda));
        }
        if let RegKind::PseudoHuber { delta } = kind {
            if !(delta > 0.0) {
                return Err(ModelError::BadDelta(delta));
            }
        }
        Ok(Regularizer { kind, lambda })
    }

    pub fn kind(&self) -> RegKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_l2(&self) -> bool {
        matches!(self.kind, RegKind::L2)
    }

    /// λ-weighted `(R_j(t), R'_j(t), R''_j(t))` for one coordinate.
    pub fn point(&self, t: f64) -> (f64, f64, f64) {
        let (v, d1, d2) = match self.kind {
            RegKind::L2 => (0.5 * t * t, t, 1.0),
            RegKind::PseudoHuber { delta } => {
                let q = t / delta;
                let root = (1.0 + q * q).sqrt();
                (
                    delta * delta * (root - 1.0),
                    t / root,
                    1.0 / (root * root * root),
                )
            }
        };
        (self.lambda * v, self.lambda * d1, self.lambda * d2)
    }

    /// Full evaluation `(λ R(w), λ ∇R(w), diag(λ ∇²R(w)))`.
    pub fn eval(&self, w: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let mut value = 0.0;
        let mut grad = vec![0.0; w.len()];
        let mut hess = vec![0.0; w.len()];
        for (j, &t) in w.iter().enumerate() {
            let (v, d1, d2) = self.point(t);
            value += v;
            grad[j] = d1;
            hess[j] = d2;
        }
        (value, grad, hess)
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        w.iter().map(|&t| self.point(t).0).sum()
    }

    /// Writes λ ∇R(w) into `out`.
    pub fn grad_into(&self, w: &[f64], out: &mut [f64]) {
        for (o, &t) in out.iter_mut().zip(w) {
            *o = self.point(t).1;
        }
    }

    /// Writes diag(λ ∇²R(w)) into `out`.
    pub fn hess_diag_into(&self, w: &[f64], out: &mut [f64]) {
        for (o, &t) in out.iter_mut().zip(w) {
            *o = self.point(t).2;
        }
    }
}

/// Sparse feature row stored as parallel index/value arrays with
/// strictly increasing indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseRow {
    pub fn new(indices: Vec<u32>, values: Vec<f64>) -> Result<Self, ModelError> {
        if indices.len() != values.len() {
            return Err(ModelError::RowShape {
                indices: indices.len(),
                values: values.len(),
            });
        }
        if indices.windows(2).any(|p| p[0] >= p[1]) {
            return Err(ModelError::UnsortedRow);
        }
        Ok(SparseRow { indices, values })
    }

    /// Dense convenience constructor; zeros are kept.
    pub fn dense(values: &[f64]) -> Self {
        SparseRow {
            indices: (0..values.len() as u32).collect(),
            values: values.to_vec(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| (i as usize, v))
    }

    pub fn dot(&self, w: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * w[i]).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `out += c * a` on the row's support.
    pub fn add_scaled_into(&self, c: f64, out: &mut [f64]) {
        for (i, v) in self.iter() {
            out[i] += c * v;
        }
    }

    fn max_index(&self) -> Option<u32> {
        self.indices.last().copied()
    }
}

/// A regularized GLM instance: sparse rows, labels, loss family and
/// λ-weighted regularizer.
#[derive(Debug, Clone)]
pub struct GlmProblem {
    rows: Vec<SparseRow>,
    labels: Vec<f64>,
    loss: Loss,
    reg: Regularizer,
    dim: usize,
}

impl GlmProblem {
    pub fn new(
        rows: Vec<SparseRow>,
        labels: Vec<f64>,
        dim: usize,
        loss: Loss,
        reg: Regularizer,
    ) -> Result<Self, ModelError> {
        if rows.is_empty() || dim == 0 {
            return Err(ModelError::EmptyProblem);
        }
        if rows.len() != labels.len() {
            return Err(ModelError::LabelCount {
                labels: labels.len(),
                rows: rows.len(),
            });
        }
        for row in &rows {
            if let Some(m) = row.max_index() {
                if m as usize >= dim {
                    return Err(ModelError::FeatureIndex {
                        index: m as usize,
                        d: dim,
                    });
                }
            }
        }
        if loss == Loss::Logistic {
            if let Some(&y) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
                return Err(ModelError::BadLabel(y));
            }
        }
        Ok(GlmProblem {
            rows,
            labels,
            loss,
            reg,
            dim,
        })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn d(&self) -> usize {
        self.dim
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    pub fn reg(&self) -> &Regularizer {
        &self.reg
    }

    pub fn row(&self, i: usize) -> &SparseRow {
        &self.rows[i]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn margin(&self, i: usize, w: &[f64]) -> f64 {
        self.rows[i].dot(w)
    }

    /// `(φ_i(t), φ'_i(t), φ''_i(t))` at a given margin.
    pub fn loss_at(&self, i: usize, t: f64) -> (f64, f64, f64) {
        self.loss.eval(t, self.labels[i])
    }

    /// `f_i(w) = φ_i(⟨a_i, w⟩) + λ R(w)`.
    pub fn fi(&self, i: usize, w: &[f64]) -> f64 {
        self.loss_at(i, self.margin(i, w)).0 + self.reg.value(w)
    }

    /// `∇f_i(w) = λ ∇R(w) + φ'_i(⟨a_i, w⟩) a_i`; touches one data row.
    pub fn grad_fi(&self, i: usize, w: &[f64]) -> Result<Vec<f64>, ModelError> {
        if i >= self.n() {
            return Err(ModelError::RowIndex {
                index: i,
                n: self.n(),
            });
        }
        let mut out = vec![0.0; self.dim];
        self.grad_fi_into(i, w, &mut out);
        Ok(out)
    }

    pub(crate) fn grad_fi_into(&self, i: usize, w: &[f64], out: &mut [f64]) {
        self.reg.grad_into(w, out);
        let (_, d1, _) = self.loss_at(i, self.margin(i, w));
        self.rows[i].add_scaled_into(d1, out);
    }

    /// `f(w) = (1/n) Σ f_i(w)` and its gradient; one effective pass.
    pub fn full_objective_and_grad(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let n = self.n() as f64;
        let mut grad = vec![0.0; self.dim];
        let mut loss_sum = 0.0;
        for (row, &y) in self.rows.iter().zip(&self.labels) {
            let (v, d1, _) = self.loss.eval(row.dot(w), y);
            loss_sum += v;
            row.add_scaled_into(d1 / n, &mut grad);
        }
        let (rv, rg, _) = self.reg.eval(w);
        for (g, r) in grad.iter_mut().zip(&rg) {
            *g += r;
        }
        (loss_sum / n + rv, grad)
    }

    pub fn grad_norm(&self, w: &[f64]) -> f64 {
        let (_, g) = self.full_objective_and_grad(w);
        g.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest per-term smoothness constant `L_max = max_i L_i` with
    /// `L_i = ¼‖a_i‖² + λ` (logistic) or `‖a_i‖² + λ` (squared).
    ///
    /// Both regularizers have `R''_j ≤ 1`, so the λ term bounds them.
    pub fn lmax(&self) -> f64 {
        let c = self.loss.smoothness_coeff();
        self.rows
            .iter()
            .map(|r| c * r.norm_sq() + self.reg.lambda())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
