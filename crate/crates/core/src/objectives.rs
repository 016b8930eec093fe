//! Loss functions, split expectations and the deterministic objective.
//!
//! Losses are sums over rows, never means. Split expectations are either
//! exact (a weighted sum over every split, in enumeration order) or Monte
//! Carlo with a standard error.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_alpha, Error, Result};
use crate::predictors::{self, ModelKind, ModelWeights, W, W1, W2, W_X, W_Y};
use crate::propagation::{gamma_scale, PropagationOperator};
use crate::rng;
use crate::splits::{
    enumerate_splits, masked_labels, sample_split_with, LabelKind, LabelMatrix, SplitMask,
};
use crate::{frob_sq, Mat};

/// Smallest log-probability used by the cross-entropy.
pub const LOG_CLAMP: f64 = -745.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    #[default]
    Mse,
    CrossEntropy,
}

/// How an expectation over splits is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expectation {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMode {
    ExactEnumeration,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Zero for exact enumeration.
    pub standard_error: f64,
    pub n_splits: usize,
    pub mode: EstimateMode,
}

/// Comparison of the two sides of an identity or bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveReport {
    pub lhs_value: f64,
    pub rhs_value: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub n_splits_used: usize,
    pub mode: EstimateMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standard_error: Option<f64>,
}

impl ObjectiveReport {
    pub fn new(lhs: f64, rhs: f64, estimate: &Estimate) -> Self {
        let abs_gap = (lhs - rhs).abs();
        Self {
            lhs_value: lhs,
            rhs_value: rhs,
            abs_gap,
            rel_gap: abs_gap / rhs.abs().max(1.0),
            n_splits_used: estimate.n_splits,
            mode: estimate.mode,
            standard_error: match estimate.mode {
                EstimateMode::MonteCarlo => Some(estimate.standard_error),
                EstimateMode::ExactEnumeration => None,
            },
        }
    }
}

/// `E_splits[f(split)]`, exactly or by sampling.
pub fn expectation<F>(
    labels: &LabelMatrix,
    alpha: f64,
    how: Expectation,
    mut f: F,
) -> Result<Estimate>
where
    F: FnMut(&SplitMask) -> Result<f64>,
{
    check_alpha(alpha)?;
    match how {
        Expectation::Exact => {
            let splits = enumerate_splits(labels, alpha)?;
            let n_splits = splits.len();
            let mut value = 0.0;
            for split in splits {
                value += split.weight * f(&split)?;
            }
            Ok(Estimate {
                value,
                standard_error: 0.0,
                n_splits,
                mode: EstimateMode::ExactEnumeration,
            })
        }
        Expectation::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(Error::InvalidArgument(
                    "Monte Carlo needs at least two samples".into(),
                ));
            }
            let mut rng = rng::seeded(seed);
            // Welford running mean and variance
            let (mut mean, mut m2) = (0.0, 0.0);
            for k in 0..samples {
                let v = f(&sample_split_with(labels, alpha, &mut rng)?)?;
                let delta = v - mean;
                mean += delta / (k + 1) as f64;
                m2 += delta * (v - mean);
            }
            let var = m2 / (samples - 1) as f64;
            Ok(Estimate {
                value: mean,
                standard_error: (var / samples as f64).sqrt(),
                n_splits: samples,
                mode: EstimateMode::MonteCarlo,
            })
        }
    }
}

/// `(W_x, W_y)` of a feature+label model, or `(None, W)` for label-only
/// weights.
fn label_weights(w: &ModelWeights) -> Result<(Option<&Mat>, &Mat)> {
    match w.kind() {
        ModelKind::LpW => Ok((None, w.get(W)?)),
        ModelKind::FeatLabel => Ok((Some(w.get(W_X)?), w.get(W_Y)?)),
        other => Err(Error::WrongModelKind {
            expected: "lp_w or feat_label".into(),
            actual: other.to_string(),
        }),
    }
}

fn feature_term(op: &PropagationOperator, x: &Mat, w_x: Option<&Mat>, c: usize) -> Result<Mat> {
    match w_x {
        None => Ok(Mat::zeros(op.n(), c)),
        Some(w_x) => {
            if x.nrows() != op.n() || x.ncols() != w_x.nrows() {
                return Err(Error::dims(
                    "features",
                    format!("{}x{}", op.n(), w_x.nrows()),
                    format!("{}x{}", x.nrows(), x.ncols()),
                ));
            }
            Ok(op.apply(x)? * w_x)
        }
    }
}

fn check_label_shape(labels: &LabelMatrix, w_y: &Mat, op: &PropagationOperator) -> Result<()> {
    let c = labels.n_classes();
    if w_y.shape() != (c, c) {
        return Err(Error::dims(
            "label weights",
            format!("{c}x{c}"),
            format!("{:?}", w_y.shape()),
        ));
    }
    if labels.n() != op.n() {
        return Err(Error::dims(
            "labels",
            format!("{} nodes", op.n()),
            format!("{} nodes", labels.n()),
        ));
    }
    Ok(())
}

/// Split-wise stochastic predictor `P X W_x + P Ỹ_in W_y`, given `P X W_x`.
fn split_prediction(
    op: &PropagationOperator,
    labels: &LabelMatrix,
    feat: &Mat,
    w_y: &Mat,
    mask: &SplitMask,
) -> Result<Mat> {
    let y_in = masked_labels(labels, mask, true);
    Ok(feat + op.apply(&(y_in * w_y))?)
}

/// `‖Y_out − M_out(P X W_x + P Ỹ_in W_y)‖²` for one split.
pub fn split_mse(
    op: &PropagationOperator,
    x: &Mat,
    labels: &LabelMatrix,
    w: &ModelWeights,
    mask: &SplitMask,
) -> Result<f64> {
    let (w_x, w_y) = label_weights(w)?;
    check_label_shape(labels, w_y, op)?;
    let feat = feature_term(op, x, w_x, labels.n_classes())?;
    let pred = split_prediction(op, labels, &feat, w_y, mask)?;
    Ok(masked_sq_error(labels.y(), &pred, &mask.out_mask))
}

fn masked_sq_error(y: &Mat, pred: &Mat, rows: &[bool]) -> f64 {
    let mut total = 0.0;
    for (i, &keep) in rows.iter().enumerate() {
        if keep {
            total += (y.row(i) - pred.row(i)).norm_squared();
        }
    }
    total
}

/// `E_splits[‖Y_out − M_out P X W_x − M_out P Ỹ_in W_y‖²]`.
pub fn mse_stochastic_lhs(
    op: &PropagationOperator,
    x: &Mat,
    labels: &LabelMatrix,
    w: &ModelWeights,
    alpha: f64,
    how: Expectation,
) -> Result<Estimate> {
    let (w_x, w_y) = label_weights(w)?;
    check_label_shape(labels, w_y, op)?;
    let feat = feature_term(op, x, w_x, labels.n_classes())?;
    expectation(labels, alpha, how, |mask| {
        let pred = split_prediction(op, labels, &feat, w_y, mask)?;
        Ok(masked_sq_error(labels.y(), &pred, &mask.out_mask))
    })
}

fn penalty_coefficient(alpha: f64) -> Result<f64> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok((1.0 - alpha) / alpha)
    } else {
        Err(Error::AlphaOutOfRange(alpha))
    }
}

/// `‖Y_tr − M_tr P X W_x − M_tr (P − C) Y_tr W_y‖² + ((1 − α)/α) ‖Γ W_y‖²`.
///
/// `α = 1` drops the penalty and leaves the self-excluded fit.
pub fn mse_deterministic_rhs(
    op: &PropagationOperator,
    x: &Mat,
    labels: &LabelMatrix,
    w: &ModelWeights,
    alpha: f64,
) -> Result<f64> {
    deterministic_objective(op, x, labels, w.kind(), alpha, Loss::Mse)?.value(w)
}

/// Value and gradient of [`mse_deterministic_rhs`] with respect to every
/// weight matrix.
pub fn mse_deterministic_grad(
    op: &PropagationOperator,
    x: &Mat,
    labels: &LabelMatrix,
    w: &ModelWeights,
    alpha: f64,
) -> Result<(f64, BTreeMap<String, Mat>)> {
    deterministic_objective(op, x, labels, w.kind(), alpha, Loss::Mse)?.value_and_grad(w)
}

/// Row-wise log-softmax with log-sum-exp stabilization.
pub fn log_softmax_row(logits: &Mat, i: usize) -> Vec<f64> {
    let row = logits.row(i);
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    row.iter().map(|v| (v - lse).max(LOG_CLAMP)).collect()
}

/// `Σ_{i∈rows} −log softmax(logits_i)[class(i)]`.
pub fn cross_entropy(labels: &LabelMatrix, logits: &Mat, rows: &[usize]) -> Result<f64> {
    if labels.kind() != LabelKind::OneHot {
        return Err(Error::InvalidArgument(
            "cross-entropy requires one-hot labels".into(),
        ));
    }
    if logits.shape() != labels.y().shape() {
        return Err(Error::dims(
            "logits",
            format!("{:?}", labels.y().shape()),
            format!("{:?}", logits.shape()),
        ));
    }
    Ok(rows
        .iter()
        .map(|&i| -log_softmax_row(logits, i)[labels.class_of(i)])
        .sum())
}

/// Jensen bound for the cross-entropy label trick.
///
/// `lhs = E_splits[CE_{D_out}(Y, P X W_x + P Ỹ_in W_y)] / (1 − α)` and
/// `rhs = CE_{D_tr}(Y, P X W_x + (P − C) Y_tr W_y)`. A violation of
/// `lhs ≥ rhs − 1e-9` is returned as a numerical-integrity error.
pub fn ce_jensen_gap(
    op: &PropagationOperator,
    x: &Mat,
    labels: &LabelMatrix,
    w: &ModelWeights,
    alpha: f64,
) -> Result<ObjectiveReport> {
    let (w_x, w_y) = label_weights(w)?;
    check_label_shape(labels, w_y, op)?;
    let feat = feature_term(op, x, w_x, labels.n_classes())?;
    let estimate = expectation(labels, alpha, Expectation::Exact, |mask| {
        let pred = split_prediction(op, labels, &feat, w_y, mask)?;
        cross_entropy(labels, &pred, &mask.out_indices())
    })?;
    let lhs = estimate.value / (1.0 - alpha);
    let det = &feat + op.excluded_apply(&labels.y_train())? * w_y;
    let rhs = cross_entropy(labels, &det, labels.train_idx())?;
    let report = ObjectiveReport::new(lhs, rhs, &estimate);
    if lhs < rhs - 1e-9 {
        return Err(Error::NumericalIntegrity(format!(
            "cross-entropy bound violated: lhs {lhs:.12e} < rhs {rhs:.12e}"
        )));
    }
    Ok(report)
}

fn toy_sq_error(
    op: &PropagationOperator,
    x: &Mat,
    labels: &LabelMatrix,
    w: &ModelWeights,
    y_input: &Mat,
    rows: &[usize],
) -> Result<f64> {
    let pred = predictors::nonlinear_toy_predict(op, x, y_input, w)?;
    Ok(rows
        .iter()
        .map(|&i| (labels.y().row(i) - pred.row(i)).norm_squared())
        .sum())
}

fn check_toy(x: &Mat, labels: &LabelMatrix, w: &ModelWeights) -> Result<()> {
    w.expect_kind(ModelKind::NonlinearToy)?;
    let w1 = w.get(W1)?;
    let w2 = w.get(W2)?;
    let width = x.ncols() + labels.n_classes();
    if w1.nrows() != width || w2.ncols() != labels.n_classes() {
        return Err(Error::dims(
            "toy weights",
            format!(
                "W1 with {width} rows, W2 with {} columns",
                labels.n_classes()
            ),
            format!("{:?} and {:?}", w1.shape(), w2.shape()),
        ));
    }
    Ok(())
}

/// `E_splits[Σ_{i∈D_out} ‖y_i − f[X, Y_in]_i‖²] / (1 − α)` for the toy
/// model. The label input is not rescaled by `1/α`.
pub fn thm3_scaled_loss(
    op: &PropagationOperator,
    x: &Mat,
    labels: &LabelMatrix,
    w: &ModelWeights,
    alpha: f64,
    how: Expectation,
) -> Result<Estimate> {
    check_toy(x, labels, w)?;
    let mut est = expectation(labels, alpha, how, |mask| {
        toy_sq_error(
            op,
            x,
            labels,
            w,
            &masked_labels(labels, mask, false),
            &mask.out_indices(),
        )
    })?;
    est.value /= 1.0 - alpha;
    est.standard_error /= 1.0 - alpha;
    Ok(est)
}

/// `Σ_{i∈D_tr} ‖y_i − f[X, Y_tr − Y_i]_i‖²`, the `α → 1` limit of
/// [`thm3_scaled_loss`].
pub fn loo_target(
    op: &PropagationOperator,
    x: &Mat,
    labels: &LabelMatrix,
    w: &ModelWeights,
) -> Result<f64> {
    check_toy(x, labels, w)?;
    let y_tr = labels.y_train();
    let mut total = 0.0;
    for &i in labels.train_idx() {
        let mut y_minus = y_tr.clone();
        y_minus.row_mut(i).fill(0.0);
        total += toy_sq_error(op, x, labels, w, &y_minus, &[i])?;
    }
    Ok(total)
}

/// One named design block of a [`LinearObjective`].
#[derive(Debug, Clone)]
struct Block {
    name: String,
    design: Mat,
    penalty: Option<Mat>,
}

/// Loss of a linear predictor `Σ_b D_b W_b` against fixed target rows, with
/// optional quadratic penalties `tr(W_bᵀ Q_b W_b)` and weight decay.
///
/// Every trainable objective in the crate has this shape once the
/// propagated inputs of a split (or of the deterministic form) have been
/// precomputed.
#[derive(Debug, Clone)]
pub struct LinearObjective {
    blocks: Vec<Block>,
    target: Mat,
    classes: Vec<usize>,
    loss: Loss,
    weight_decay: f64,
}

impl LinearObjective {
    /// `target` rows are the supervised rows. Cross-entropy needs one-hot
    /// target rows.
    pub fn new(target: Mat, loss: Loss) -> Result<Self> {
        let mut classes = Vec::new();
        if loss == Loss::CrossEntropy {
            for i in 0..target.nrows() {
                let row = target.row(i);
                let ones = row.iter().filter(|&&v| v == 1.0).count();
                let zeros = row.iter().filter(|&&v| v == 0.0).count();
                if ones != 1 || ones + zeros != row.len() {
                    return Err(Error::InvalidArgument(format!(
                        "cross-entropy target row {i} is not one-hot"
                    )));
                }
                classes.push(row.iter().position(|&v| v == 1.0).unwrap_or(0));
            }
        }
        Ok(Self {
            blocks: Vec::new(),
            target,
            classes,
            loss,
            weight_decay: 0.0,
        })
    }

    pub fn with_block(mut self, name: &str, design: Mat) -> Result<Self> {
        if design.nrows() != self.target.nrows() {
            return Err(Error::dims(
                "design block",
                format!("{} rows", self.target.nrows()),
                format!("{} rows", design.nrows()),
            ));
        }
        if self.blocks.iter().any(|b| b.name == name) {
            return Err(Error::InvalidArgument(format!(
                "duplicate design block `{name}`"
            )));
        }
        self.blocks.push(Block {
            name: name.to_string(),
            design,
            penalty: None,
        });
        Ok(self)
    }

    /// Adds `tr(W_bᵀ Q W_b)` for block `name`; `Q` must be symmetric.
    pub fn with_penalty(mut self, name: &str, q: Mat) -> Result<Self> {
        let block = self
            .blocks
            .iter_mut()
            .find(|b| b.name == name)
            .ok_or_else(|| Error::InvalidArgument(format!("no design block `{name}`")))?;
        let d = block.design.ncols();
        if q.shape() != (d, d) {
            return Err(Error::dims(
                "penalty",
                format!("{d}x{d}"),
                format!("{:?}", q.shape()),
            ));
        }
        block.penalty = Some(q);
        Ok(self)
    }

    pub fn with_weight_decay(mut self, weight_decay: f64) -> Result<Self> {
        if !(weight_decay >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "weight decay must be non-negative, got {weight_decay}"
            )));
        }
        self.weight_decay = weight_decay;
        Ok(self)
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    pub fn n_rows(&self) -> usize {
        self.target.nrows()
    }

    pub fn target(&self) -> &Mat {
        &self.target
    }

    pub fn weight_decay(&self) -> f64 {
        self.weight_decay
    }

    /// Block names with their design matrices and penalties.
    pub fn blocks(&self) -> impl Iterator<Item = (&str, &Mat, Option<&Mat>)> {
        self.blocks
            .iter()
            .map(|b| (b.name.as_str(), &b.design, b.penalty.as_ref()))
    }

    /// `Σ_b D_b W_b` over the supervised rows.
    pub fn predict(&self, w: &ModelWeights) -> Result<Mat> {
        let mut pred = Mat::zeros(self.target.nrows(), self.target.ncols());
        for b in &self.blocks {
            let wb = w.get(&b.name)?;
            if wb.shape() != (b.design.ncols(), self.target.ncols()) {
                return Err(Error::dims(
                    "block weights",
                    format!("{}x{}", b.design.ncols(), self.target.ncols()),
                    format!("{:?}", wb.shape()),
                ));
            }
            pred += &b.design * wb;
        }
        Ok(pred)
    }

    pub fn value(&self, w: &ModelWeights) -> Result<f64> {
        let pred = self.predict(w)?;
        let mut total = match self.loss {
            Loss::Mse => frob_sq(&(&pred - &self.target)),
            Loss::CrossEntropy => (0..pred.nrows())
                .map(|i| -log_softmax_row(&pred, i)[self.classes[i]])
                .sum(),
        };
        for b in &self.blocks {
            let wb = w.get(&b.name)?;
            if let Some(q) = &b.penalty {
                total += (wb.transpose() * q * wb).trace();
            }
            total += self.weight_decay * frob_sq(wb);
        }
        Ok(total)
    }

    /// Value and gradient per design block.
    pub fn value_and_grad(&self, w: &ModelWeights) -> Result<(f64, BTreeMap<String, Mat>)> {
        let pred = self.predict(w)?;
        let (mut total, residual) = match self.loss {
            Loss::Mse => {
                let r = &pred - &self.target;
                (frob_sq(&r), r * 2.0)
            }
            Loss::CrossEntropy => {
                let mut total = 0.0;
                let mut r = Mat::zeros(pred.nrows(), pred.ncols());
                for i in 0..pred.nrows() {
                    let logp = log_softmax_row(&pred, i);
                    total -= logp[self.classes[i]];
                    for (j, lp) in logp.iter().enumerate() {
                        r[(i, j)] = lp.exp();
                    }
                    r[(i, self.classes[i])] -= 1.0;
                }
                (total, r)
            }
        };
        let mut grads = BTreeMap::new();
        for b in &self.blocks {
            let wb = w.get(&b.name)?;
            let mut g = b.design.tr_mul(&residual);
            if let Some(q) = &b.penalty {
                total += (wb.transpose() * q * wb).trace();
                g += (q + q.transpose()) * wb;
            }
            total += self.weight_decay * frob_sq(wb);
            g += wb * (2.0 * self.weight_decay);
            grads.insert(b.name.clone(), g);
        }
        Ok((total, grads))
    }
}

fn select_rows(m: &Mat, rows: &[usize]) -> Mat {
    Mat::from_fn(rows.len(), m.ncols(), |r, j| m[(rows[r], j)])
}

/// `Y_trᵀ diag(g²) Y_tr`, so that `tr(Wᵀ Q W) = ‖Γ W‖²`.
fn gamma_gram(op: &PropagationOperator, labels: &LabelMatrix) -> Result<Mat> {
    let scale = gamma_scale(op, labels)?;
    let mut scaled = labels.y_train();
    for (i, s) in scale.iter().enumerate() {
        scaled.row_mut(i).scale_mut(*s);
    }
    Ok(scaled.tr_mul(&scaled))
}

/// Deterministic label-trick objective over the training rows.
///
/// Label-only weights (`lp_w`) use the design `(P − C) Y_tr`; feature+label
/// weights add `P X`. With MSE and `α < 1` the label block carries the
/// penalty `((1 − α)/α) ΓᵀΓ`; the cross-entropy form has no penalty.
pub fn deterministic_objective(
    op: &PropagationOperator,
    x: &Mat,
    labels: &LabelMatrix,
    kind: ModelKind,
    alpha: f64,
    loss: Loss,
) -> Result<LinearObjective> {
    let kappa = penalty_coefficient(alpha)?;
    if labels.n() != op.n() {
        return Err(Error::dims(
            "labels",
            format!("{} nodes", op.n()),
            format!("{} nodes", labels.n()),
        ));
    }
    let rows = labels.train_idx();
    let target = select_rows(labels.y(), rows);
    let label_design = select_rows(&op.excluded_apply(&labels.y_train())?, rows);
    let label_name = match kind {
        ModelKind::LpW => W,
        ModelKind::FeatLabel => W_Y,
        other => {
            return Err(Error::WrongModelKind {
                expected: "lp_w or feat_label".into(),
                actual: other.to_string(),
            })
        }
    };
    let mut obj = LinearObjective::new(target, loss)?;
    if kind == ModelKind::FeatLabel {
        if x.nrows() != op.n() {
            return Err(Error::dims(
                "features",
                format!("{} rows", op.n()),
                format!("{} rows", x.nrows()),
            ));
        }
        obj = obj.with_block(W_X, select_rows(&op.apply(x)?, rows))?;
    }
    obj = obj.with_block(label_name, label_design)?;
    if loss == Loss::Mse && kappa > 0.0 {
        obj = obj.with_penalty(label_name, gamma_gram(op, labels)? * kappa)?;
    }
    Ok(obj)
}

/// Objective of one stochastic split: supervision on `D_out`, label input
/// `P Ỹ_in`.
pub fn split_objective(
    op: &PropagationOperator,
    x: &Mat,
    labels: &LabelMatrix,
    mask: &SplitMask,
    kind: ModelKind,
    loss: Loss,
) -> Result<LinearObjective> {
    split_objective_with(
        op,
        select_features(op, x, kind)?.as_ref(),
        labels,
        mask,
        kind,
        loss,
    )
}

fn select_features(op: &PropagationOperator, x: &Mat, kind: ModelKind) -> Result<Option<Mat>> {
    if kind == ModelKind::FeatLabel {
        if x.nrows() != op.n() {
            return Err(Error::dims(
                "features",
                format!("{} rows", op.n()),
                format!("{} rows", x.nrows()),
            ));
        }
        Ok(Some(op.apply(x)?))
    } else {
        Ok(None)
    }
}

/// [`split_objective`] with `P X` precomputed.
pub fn split_objective_with(
    op: &PropagationOperator,
    px: Option<&Mat>,
    labels: &LabelMatrix,
    mask: &SplitMask,
    kind: ModelKind,
    loss: Loss,
) -> Result<LinearObjective> {
    mask.validate(labels)?;
    let rows = mask.out_indices();
    let label_design = select_rows(&op.apply(&masked_labels(labels, mask, true))?, &rows);
    let mut obj = LinearObjective::new(select_rows(labels.y(), &rows), loss)?;
    match (kind, px) {
        (ModelKind::FeatLabel, Some(px)) => {
            obj = obj
                .with_block(W_X, select_rows(px, &rows))?
                .with_block(W_Y, label_design)?;
        }
        (ModelKind::LpW, _) => obj = obj.with_block(W, label_design)?,
        (ModelKind::FeatLabel, None) => {
            return Err(Error::InvalidArgument(
                "feature+label split objective needs P X".into(),
            ))
        }
        (other, _) => {
            return Err(Error::WrongModelKind {
                expected: "lp_w or feat_label".into(),
                actual: other.to_string(),
            })
        }
    }
    Ok(obj)
}

/// Feature-only objective `‖Y_tr − M_tr P X W_x‖²` (or its cross-entropy);
/// the label weights stay unused.
pub fn feature_only_objective(
    op: &PropagationOperator,
    x: &Mat,
    labels: &LabelMatrix,
    loss: Loss,
) -> Result<LinearObjective> {
    let rows = labels.train_idx();
    let px = select_features(op, x, ModelKind::FeatLabel)?.expect("feature kind");
    LinearObjective::new(select_rows(labels.y(), rows), loss)?
        .with_block(W_X, select_rows(&px, rows))
}
