//! Full-batch gradient descent for the trainable methods, the ridge
//! closed form, and weight checkpoints.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{check_alpha, Error, Result};
use crate::objectives::{
    deterministic_objective, feature_only_objective, split_objective_with, LinearObjective, Loss,
};
use crate::predictors::{self, Activation, GammaMode, ModelKind, ModelWeights, W_C_HAT, W_S, W_X};
use crate::propagation::PropagationOperator;
use crate::rng;
use crate::splits::{accuracy, sample_split, sample_split_with, LabelMatrix, SplitMask};
use crate::Mat;

/// Diagonal jitter added before the Cholesky solve.
pub const RIDGE_JITTER: f64 = 1e-10;
/// Halvings tried before an epoch is declared stationary.
const MAX_BACKTRACK: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trick {
    None,
    Stochastic,
    #[default]
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub weight_decay: f64,
    pub alpha: f64,
    pub trick: Trick,
    pub seed: u64,
    pub loss: Loss,
    /// Stop after this many epochs without a validation improvement.
    pub early_stop_patience: Option<usize>,
    /// Halve the step on a loss increase; grow it by `lr_growth` after an
    /// accepted step.
    pub backtracking: bool,
    pub lr_growth: f64,
    /// Epochs between fresh splits under the stochastic trick.
    pub resample_every: usize,
    /// Number of precomputed splits cycled by trainable C&S.
    pub split_pool: usize,
    pub gamma: GammaMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.1,
            epochs: 200,
            weight_decay: 0.0,
            alpha: 0.5,
            trick: Trick::Deterministic,
            seed: 0,
            loss: Loss::Mse,
            early_stop_patience: None,
            backtracking: true,
            lr_growth: 1.1,
            resample_every: 1,
            split_pool: 10,
            gamma: GammaMode::Autoscale,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lr must be positive, got {}",
                self.lr
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::InvalidArgument(
                "weight_decay must be non-negative".into(),
            ));
        }
        if !(self.lr_growth >= 1.0 && self.lr_growth.is_finite()) {
            return Err(Error::InvalidArgument(
                "lr_growth must be at least 1".into(),
            ));
        }
        match self.trick {
            Trick::Stochastic => check_alpha(self.alpha)?,
            Trick::Deterministic if !(self.alpha > 0.0 && self.alpha <= 1.0) => {
                return Err(Error::AlphaOutOfRange(self.alpha))
            }
            _ => {}
        }
        if self.resample_every == 0 || self.split_pool == 0 {
            return Err(Error::InvalidArgument(
                "resample_every and split_pool must be positive".into(),
            ));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub weights: ModelWeights,
    /// Objective at the start of each epoch run.
    pub train_curve: Vec<f64>,
    pub val_accuracy: f64,
    pub test_accuracy: f64,
    /// Epoch whose weights were kept (the last one without early stopping).
    pub best_epoch: usize,
}

/// Runs gradient descent on the objective returned for each epoch.
///
/// `objective(epoch)` may change between epochs (fresh splits); the
/// backtracking test always compares values of the same epoch's objective.
fn descend<F, V>(
    init: ModelWeights,
    cfg: &TrainConfig,
    mut objective: F,
    mut validate: V,
) -> Result<(ModelWeights, Vec<f64>, usize)>
where
    F: FnMut(usize) -> Result<LinearObjective>,
    V: FnMut(&ModelWeights) -> Result<Option<f64>>,
{
    cfg.validate()?;
    let mut w = init;
    let mut lr = cfg.lr;
    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, ModelWeights, usize)> = None;
    let mut since_best = 0;
    for epoch in 0..cfg.epochs {
        let obj = objective(epoch)?;
        let (value, grads) = obj.value_and_grad(&w)?;
        if !value.is_finite() {
            return Err(Error::NumericalIntegrity(format!(
                "non-finite loss at epoch {epoch}"
            )));
        }
        curve.push(value);

        let step = |lr: f64| -> Result<ModelWeights> {
            let mut next = w.clone();
            for (name, g) in &grads {
                next.set(name, w.get(name)? - g * lr)?;
            }
            Ok(next)
        };
        if cfg.backtracking {
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACK {
                let candidate = step(lr)?;
                if obj.value(&candidate)? <= value {
                    accepted = Some(candidate);
                    break;
                }
                lr *= 0.5;
            }
            if let Some(next) = accepted {
                w = next;
                lr *= cfg.lr_growth;
            }
        } else {
            let next = step(lr)?;
            if !next.is_finite() {
                return Err(Error::NumericalIntegrity(format!(
                    "weights diverged at epoch {epoch}"
                )));
            }
            w = next;
        }

        if let Some(acc) = validate(&w)? {
            match &best {
                Some((b, _, _)) if acc <= *b => since_best += 1,
                _ => {
                    best = Some((acc, w.clone(), epoch));
                    since_best = 0;
                }
            }
            if cfg.early_stop_patience.is_some_and(|p| since_best > p) {
                break;
            }
        }
    }
    let last = curve.len() - 1;
    match (best, cfg.early_stop_patience) {
        (Some((_, weights, epoch)), Some(_)) => Ok((weights, curve, epoch)),
        _ => Ok((w, curve, last)),
    }
}

fn finish(
    weights: ModelWeights,
    curve: Vec<f64>,
    best_epoch: usize,
    predict: impl Fn(&ModelWeights) -> Result<Mat>,
    labels: &LabelMatrix,
    val_idx: &[usize],
    test_idx: &[usize],
) -> Result<FitResult> {
    let pred = predict(&weights)?;
    Ok(FitResult {
        val_accuracy: accuracy(&pred, labels, val_idx),
        test_accuracy: accuracy(&pred, labels, test_idx),
        weights,
        train_curve: curve,
        best_epoch,
    })
}

fn val_hook<'a>(
    predict: impl Fn(&ModelWeights) -> Result<Mat> + 'a,
    labels: &'a LabelMatrix,
    val_idx: &'a [usize],
    enabled: bool,
) -> impl FnMut(&ModelWeights) -> Result<Option<f64>> + 'a {
    move |w| {
        if enabled && !val_idx.is_empty() {
            Ok(Some(accuracy(&predict(w)?, labels, val_idx)))
        } else {
            Ok(None)
        }
    }
}

fn check_eval_rows(labels: &LabelMatrix, rows: &[usize]) -> Result<()> {
    match rows.iter().find(|&&i| i >= labels.n()) {
        Some(i) => Err(Error::InvalidArgument(format!(
            "evaluation node {i} out of range"
        ))),
        None => Ok(()),
    }
}

/// Split stream of a stochastic fit: a fresh Bernoulli(α) split every
/// `resample_every` epochs.
struct SplitSchedule<'a> {
    labels: &'a LabelMatrix,
    alpha: f64,
    every: usize,
    rng: rng::Rng,
    current: Option<SplitMask>,
}

impl<'a> SplitSchedule<'a> {
    fn new(labels: &'a LabelMatrix, cfg: &TrainConfig) -> Self {
        Self {
            labels,
            alpha: cfg.alpha,
            every: cfg.resample_every,
            rng: rng::seeded(cfg.seed),
            current: None,
        }
    }

    fn at(&mut self, epoch: usize) -> Result<&SplitMask> {
        if self.current.is_none() || epoch.is_multiple_of(self.every) {
            self.current = Some(sample_split_with(self.labels, self.alpha, &mut self.rng)?);
        }
        Ok(self.current.as_ref().expect("split drawn"))
    }
}

/// Learns the `c×c` label-propagation weights `W`, starting from `W = I`
/// (plain propagation). Inference uses `P Y_tr W`.
pub fn fit_trainable_lp(
    op: &PropagationOperator,
    labels: &LabelMatrix,
    cfg: &TrainConfig,
    val_idx: &[usize],
    test_idx: &[usize],
) -> Result<FitResult> {
    cfg.validate()?;
    check_eval_rows(labels, val_idx)?;
    check_eval_rows(labels, test_idx)?;
    if labels.m() == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    let c = labels.n_classes();
    let none = Mat::zeros(op.n(), 0);
    let predict = |w: &ModelWeights| predictors::trainable_lp_predict(op, labels, w);
    let hook = val_hook(predict, labels, val_idx, cfg.early_stop_patience.is_some());
    let (weights, curve, best) = match cfg.trick {
        Trick::None => {
            return Err(Error::InvalidArgument(
                "trainable label propagation needs the stochastic or deterministic trick".into(),
            ))
        }
        Trick::Deterministic => {
            let obj =
                deterministic_objective(op, &none, labels, ModelKind::LpW, cfg.alpha, cfg.loss)?
                    .with_weight_decay(cfg.weight_decay)?;
            descend(ModelWeights::lp_identity(c), cfg, |_| Ok(obj.clone()), hook)?
        }
        Trick::Stochastic => {
            let mut schedule = SplitSchedule::new(labels, cfg);
            descend(
                ModelWeights::lp_identity(c),
                cfg,
                |epoch| {
                    let mask = schedule.at(epoch)?;
                    split_objective_with(op, None, labels, mask, ModelKind::LpW, cfg.loss)?
                        .with_weight_decay(cfg.weight_decay)
                },
                hook,
            )?
        }
    };
    finish(weights, curve, best, predict, labels, val_idx, test_idx)
}

/// Exact minimizer of an MSE [`LinearObjective`] through its normal
/// equations. Weight matrices absent from the objective are copied from
/// `template`.
pub fn solve_linear_mse(obj: &LinearObjective, template: &ModelWeights) -> Result<ModelWeights> {
    if obj.loss() != Loss::Mse {
        return Err(Error::InvalidArgument(
            "closed-form solve needs the MSE loss".into(),
        ));
    }
    let blocks: Vec<(&str, &Mat, Option<&Mat>)> = obj.blocks().collect();
    let dim: usize = blocks.iter().map(|b| b.1.ncols()).sum();
    let rows = obj.n_rows();
    let mut design = Mat::zeros(rows, dim);
    let mut hessian = Mat::zeros(dim, dim);
    let mut offset = 0;
    for (_, d, q) in &blocks {
        design.columns_mut(offset, d.ncols()).copy_from(d);
        if let Some(q) = q {
            hessian
                .view_mut((offset, offset), (d.ncols(), d.ncols()))
                .copy_from(q);
        }
        offset += d.ncols();
    }
    hessian += design.tr_mul(&design);
    for i in 0..dim {
        hessian[(i, i)] += obj.weight_decay() + RIDGE_JITTER;
    }
    let rhs = design.tr_mul(obj.target());
    let solution = match hessian.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => {
            let eig = nalgebra::SymmetricEigen::new(hessian);
            let scale = eig.eigenvalues.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            let deficient = eig
                .eigenvalues
                .iter()
                .filter(|v| **v <= RIDGE_JITTER * scale)
                .count();
            return Err(Error::Singular {
                rank_deficiency: deficient.max(1),
                dim,
            });
        }
    };
    let mut out = template.clone();
    let mut offset = 0;
    for (name, d, _) in &blocks {
        out.set(name, solution.rows(offset, d.ncols()).into_owned())?;
        offset += d.ncols();
    }
    Ok(out)
}

/// Minimizer of the deterministic MSE objective over `(W_x, W_y)`:
/// fit `[M_tr P X, M_tr (P − C) Y_tr]` with penalty `((1 − α)/α) ΓᵀΓ` on
/// the label block. `x` may have zero columns.
pub fn solve_ridge(
    op: &PropagationOperator,
    x: &Mat,
    labels: &LabelMatrix,
    alpha: f64,
) -> Result<ModelWeights> {
    let obj = deterministic_objective(op, x, labels, ModelKind::FeatLabel, alpha, Loss::Mse)?;
    solve_linear_mse(
        &obj,
        &ModelWeights::feat_label_zeros(x.ncols(), labels.n_classes()),
    )
}

/// Trains `(W_x, W_y)` under the configured trick.
///
/// Without the trick only `W_x` is trained. The deterministic trick fits all
/// training rows through the self-excluded design; the stochastic trick
/// draws a fresh split and fits `D_out`. Inference always uses
/// `P X W_x + P Y_tr W_y`, whose test rows are checked against the
/// self-excluded predictor.
pub fn fit_linear_model(
    op: &PropagationOperator,
    x: &Mat,
    labels: &LabelMatrix,
    cfg: &TrainConfig,
    val_idx: &[usize],
    test_idx: &[usize],
) -> Result<FitResult> {
    cfg.validate()?;
    check_eval_rows(labels, val_idx)?;
    check_eval_rows(labels, test_idx)?;
    if labels.m() == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    if x.nrows() != op.n() {
        return Err(Error::dims(
            "features",
            format!("{} rows", op.n()),
            format!("{} rows", x.nrows()),
        ));
    }
    let init = ModelWeights::feat_label_zeros(x.ncols(), labels.n_classes());
    let predict = |w: &ModelWeights| predictors::inference_predict(op, x, labels, w);
    let hook = val_hook(predict, labels, val_idx, cfg.early_stop_patience.is_some());
    let (weights, curve, best) = match cfg.trick {
        Trick::None => {
            let obj = feature_only_objective(op, x, labels, cfg.loss)?
                .with_weight_decay(cfg.weight_decay)?;
            descend(init, cfg, |_| Ok(obj.clone()), hook)?
        }
        Trick::Deterministic => {
            let obj =
                deterministic_objective(op, x, labels, ModelKind::FeatLabel, cfg.alpha, cfg.loss)?
                    .with_weight_decay(cfg.weight_decay)?;
            descend(init, cfg, |_| Ok(obj.clone()), hook)?
        }
        Trick::Stochastic => {
            let px = op.apply(x)?;
            let mut schedule = SplitSchedule::new(labels, cfg);
            descend(
                init,
                cfg,
                |epoch| {
                    let mask = schedule.at(epoch)?;
                    split_objective_with(
                        op,
                        Some(&px),
                        labels,
                        mask,
                        ModelKind::FeatLabel,
                        cfg.loss,
                    )?
                    .with_weight_decay(cfg.weight_decay)
                },
                hook,
            )?
        }
    };
    check_test_consistency(op, x, labels, &weights, test_idx)?;
    finish(weights, curve, best, predict, labels, val_idx, test_idx)
}

/// Test rows of `P Y_tr W_y` and `(P − C) Y_tr W_y` must coincide.
fn check_test_consistency(
    op: &PropagationOperator,
    x: &Mat,
    labels: &LabelMatrix,
    w: &ModelWeights,
    test_idx: &[usize],
) -> Result<()> {
    let inference = predictors::inference_predict(op, x, labels, w)?;
    let excluded = predictors::feat_label_predict(op, x, labels, w)?;
    for &i in test_idx.iter().filter(|&&i| !labels.is_train(i)) {
        if inference.row(i) != excluded.row(i) {
            return Err(Error::NumericalIntegrity(format!(
                "inference and self-excluded predictions differ on test node {i}"
            )));
        }
    }
    Ok(())
}

/// Trainable C&S: a pool of splits is drawn once, their `(Ŷ_s, Ŷ_c)`
/// inputs precomputed, and the pool is cycled one split per epoch.
/// Starts from `W_s = I`, `Ŵ_c = 0`; inference puts every training node
/// on the input side.
pub fn fit_trainable_cs(
    p_c: &PropagationOperator,
    p_s: &PropagationOperator,
    y_base: Option<&Mat>,
    labels: &LabelMatrix,
    cfg: &TrainConfig,
    val_idx: &[usize],
    test_idx: &[usize],
) -> Result<FitResult> {
    cfg.validate()?;
    check_alpha(cfg.alpha)?;
    check_eval_rows(labels, val_idx)?;
    check_eval_rows(labels, test_idx)?;
    let y_base = y_base
        .ok_or_else(|| Error::InvalidArgument("trainable C&S needs base predictions".into()))?;
    if labels.m() == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    let mut pool = Vec::with_capacity(cfg.split_pool);
    for k in 0..cfg.split_pool {
        let mask = sample_split(labels, cfg.alpha, rng::derive_seed(cfg.seed, k as u64))?;
        let (smooth, correct) =
            predictors::cs_split_features(p_c, p_s, y_base, labels, &mask, cfg.gamma)?;
        let rows = mask.out_indices();
        let pick = |m: &Mat| Mat::from_fn(rows.len(), m.ncols(), |r, j| m[(rows[r], j)]);
        let obj = LinearObjective::new(pick(labels.y()), cfg.loss)?
            .with_block(W_S, pick(&smooth))?
            .with_block(W_C_HAT, pick(&correct))?
            .with_weight_decay(cfg.weight_decay)?;
        pool.push(obj);
    }
    let all_in = SplitMask::all_in(labels);
    let (smooth, correct) =
        predictors::cs_split_features(p_c, p_s, y_base, labels, &all_in, cfg.gamma)?;
    let predict = |w: &ModelWeights| -> Result<Mat> {
        Ok(&smooth * w.get(W_S)? + &correct * w.get(W_C_HAT)?)
    };
    let hook = val_hook(predict, labels, val_idx, cfg.early_stop_patience.is_some());
    let init = ModelWeights::cs_identity(labels.n_classes());
    let (weights, curve, best) = descend(
        init,
        cfg,
        |epoch| Ok(pool[epoch % pool.len()].clone()),
        hook,
    )?;
    finish(weights, curve, best, predict, labels, val_idx, test_idx)
}

/// Softmax-regression base model on raw features (no propagation), the
/// first stage of Correct & Smooth. Weights are `feat_label` with an unused
/// `W_y`; predictions are the logits `X W_x`.
pub fn fit_base_model(
    x: &Mat,
    labels: &LabelMatrix,
    cfg: &TrainConfig,
    val_idx: &[usize],
    test_idx: &[usize],
) -> Result<FitResult> {
    cfg.validate()?;
    check_eval_rows(labels, val_idx)?;
    check_eval_rows(labels, test_idx)?;
    if x.nrows() != labels.n() {
        return Err(Error::dims(
            "features",
            format!("{} rows", labels.n()),
            format!("{} rows", x.nrows()),
        ));
    }
    let rows = labels.train_idx();
    let pick = |m: &Mat| Mat::from_fn(rows.len(), m.ncols(), |r, j| m[(rows[r], j)]);
    let obj = LinearObjective::new(pick(labels.y()), cfg.loss)?
        .with_block(W_X, pick(x))?
        .with_weight_decay(cfg.weight_decay)?;
    let predict = |w: &ModelWeights| -> Result<Mat> { Ok(x * w.get(W_X)?) };
    let hook = val_hook(predict, labels, val_idx, cfg.early_stop_patience.is_some());
    let init = ModelWeights::feat_label_zeros(x.ncols(), labels.n_classes());
    let (weights, curve, best) = descend(init, cfg, |_| Ok(obj.clone()), hook)?;
    finish(weights, curve, best, predict, labels, val_idx, test_idx)
}

const CHECKPOINT_MAGIC: &str = "labeltrick-checkpoint v1";

/// Header of a checkpoint file.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointHeader {
    pub kind: ModelKind,
    pub activation: Activation,
    pub seed: u64,
    pub config_hash: String,
    pub shapes: BTreeMap<String, (usize, usize)>,
}

/// Writes weights as text: a header naming kind, seed and config hash, then
/// one `matrix <name> <rows> <cols>` block per matrix with row-major values.
/// Values use the shortest round-trip decimal form.
pub fn write_checkpoint(
    path: impl AsRef<Path>,
    w: &ModelWeights,
    seed: u64,
    config_hash: &str,
) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    let activation = match w.activation() {
        Activation::Tanh => "tanh",
        Activation::Identity => "identity",
    };
    writeln!(text, "{CHECKPOINT_MAGIC}").unwrap();
    writeln!(text, "kind {}", w.kind()).unwrap();
    writeln!(text, "activation {activation}").unwrap();
    writeln!(text, "seed {seed}").unwrap();
    writeln!(text, "config_sha256 {config_hash}").unwrap();
    for (name, m) in w.iter() {
        writeln!(text, "matrix {name} {} {}", m.nrows(), m.ncols()).unwrap();
        for i in 0..m.nrows() {
            let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:?}")).collect();
            writeln!(text, "{}", row.join(" ")).unwrap();
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<(ModelWeights, CheckpointHeader)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().peekable();
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line: line + 1,
        message,
    };
    let mut field = |key: &str| -> Result<(usize, String)> {
        let (no, line) = lines
            .next()
            .ok_or_else(|| err(0, format!("missing `{key}`")))?;
        let value = line
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| err(no, format!("expected `{key} ...`")))?;
        Ok((no, value.to_string()))
    };
    let (no, magic) = field("labeltrick-checkpoint")?;
    if magic != "v1" {
        return Err(err(no, format!("unsupported checkpoint version `{magic}`")));
    }
    let (no, kind) = field("kind")?;
    let kind: ModelKind = kind.parse().map_err(|e: Error| err(no, e.to_string()))?;
    let (no, act) = field("activation")?;
    let activation = match act.as_str() {
        "tanh" => Activation::Tanh,
        "identity" => Activation::Identity,
        other => return Err(err(no, format!("unknown activation `{other}`"))),
    };
    let (no, seed) = field("seed")?;
    let seed: u64 = seed
        .parse()
        .map_err(|_| err(no, format!("bad seed `{seed}`")))?;
    let (_, config_hash) = field("config_sha256")?;

    let mut mats = BTreeMap::new();
    let mut shapes = BTreeMap::new();
    while let Some((no, line)) = lines.next() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let (name, rows, cols) = match parts.as_slice() {
            ["matrix", name, r, c] => (
                name.to_string(),
                r.parse::<usize>()
                    .map_err(|_| err(no, format!("bad row count `{r}`")))?,
                c.parse::<usize>()
                    .map_err(|_| err(no, format!("bad column count `{c}`")))?,
            ),
            _ => return Err(err(no, "expected `matrix <name> <rows> <cols>`".into())),
        };
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (no, row) = lines
                .next()
                .ok_or_else(|| err(no, format!("matrix `{name}` truncated")))?;
            let parsed: Vec<f64> = row
                .split_whitespace()
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| err(no, format!("bad value `{v}`")))
                })
                .collect::<Result<_>>()?;
            if parsed.len() != cols {
                return Err(err(
                    no,
                    format!("expected {cols} values, found {}", parsed.len()),
                ));
            }
            values.extend(parsed);
        }
        shapes.insert(name.clone(), (rows, cols));
        mats.insert(name, Mat::from_row_slice(rows, cols, &values));
    }
    let weights = ModelWeights::from_parts(kind, mats, activation)?;
    Ok((
        weights,
        CheckpointHeader {
            kind,
            activation,
            seed,
            config_hash,
            shapes,
        },
    ))
}
