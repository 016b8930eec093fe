//! Predictor forms built on a propagation operator.
//!
//! Every predictor here is a pure function of the operator, the data and a
//! [`ModelWeights`] value. Training rows of the label input are the only
//! non-zero ones (`Y_tr = M_tr Y`), so on test rows the self-excluded
//! predictor `(P − C) Y_tr W` and plain propagation `P Y_tr W` agree exactly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagation::PropagationOperator;
use crate::rng;
use crate::splits::{masked_labels, LabelMatrix, SplitMask};
use crate::Mat;

pub const W: &str = "w";
pub const W_X: &str = "w_x";
pub const W_Y: &str = "w_y";
pub const W_S: &str = "w_s";
pub const W_C_HAT: &str = "w_c_hat";
pub const W1: &str = "w1";
pub const W2: &str = "w2";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    LpW,
    FeatLabel,
    Composite,
    CsTrainable,
    NonlinearToy,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ModelKind::LpW => "lp_w",
            ModelKind::FeatLabel => "feat_label",
            ModelKind::Composite => "composite",
            ModelKind::CsTrainable => "cs_trainable",
            ModelKind::NonlinearToy => "nonlinear_toy",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "lp_w" => ModelKind::LpW,
            "feat_label" => ModelKind::FeatLabel,
            "composite" => ModelKind::Composite,
            "cs_trainable" => ModelKind::CsTrainable,
            "nonlinear_toy" => ModelKind::NonlinearToy,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown model kind `{other}`"
                )))
            }
        })
    }
}

/// Hidden activation of the toy nonlinear model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, m: &mut Mat) {
        if self == Activation::Tanh {
            m.apply(|v| *v = v.tanh());
        }
    }
}

/// Named weight matrices of one predictor. Shapes are fixed when the value
/// is built; [`ModelWeights::set`] refuses a shape change.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    kind: ModelKind,
    mats: BTreeMap<String, Mat>,
    activation: Activation,
}

impl ModelWeights {
    pub fn from_parts(
        kind: ModelKind,
        mats: BTreeMap<String, Mat>,
        activation: Activation,
    ) -> Result<Self> {
        if mats.values().any(|m| m.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidArgument("weights must be finite".into()));
        }
        Ok(Self {
            kind,
            mats,
            activation,
        })
    }

    fn with(kind: ModelKind, entries: Vec<(&str, Mat)>) -> Self {
        Self {
            kind,
            mats: entries
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            activation: Activation::default(),
        }
    }

    /// Label-propagation weights `W` (c×c).
    pub fn lp(w: Mat) -> Result<Self> {
        if w.nrows() != w.ncols() {
            return Err(Error::dims(
                "lp weights",
                "square",
                format!("{}x{}", w.nrows(), w.ncols()),
            ));
        }
        Self::from_parts(
            ModelKind::LpW,
            [(W.to_string(), w)].into(),
            Activation::default(),
        )
    }

    pub fn lp_identity(c: usize) -> Self {
        Self::with(ModelKind::LpW, vec![(W, Mat::identity(c, c))])
    }

    /// Feature and label weights `W_x` (d×c), `W_y` (c×c).
    pub fn feat_label(w_x: Mat, w_y: Mat) -> Result<Self> {
        if w_y.nrows() != w_y.ncols() || w_x.ncols() != w_y.ncols() {
            return Err(Error::dims(
                "feat_label weights",
                "W_x d×c and W_y c×c",
                format!(
                    "{}x{} and {}x{}",
                    w_x.nrows(),
                    w_x.ncols(),
                    w_y.nrows(),
                    w_y.ncols()
                ),
            ));
        }
        Self::from_parts(
            ModelKind::FeatLabel,
            [(W_X.to_string(), w_x), (W_Y.to_string(), w_y)].into(),
            Activation::default(),
        )
    }

    pub fn feat_label_zeros(d: usize, c: usize) -> Self {
        Self::with(
            ModelKind::FeatLabel,
            vec![(W_X, Mat::zeros(d, c)), (W_Y, Mat::zeros(c, c))],
        )
    }

    /// Trainable C&S weights `W_s` and `Ŵ_c = W_c W_s`.
    pub fn cs(w_s: Mat, w_c_hat: Mat) -> Result<Self> {
        if w_s.shape() != w_c_hat.shape() || w_s.nrows() != w_s.ncols() {
            return Err(Error::dims(
                "cs weights",
                "two c×c matrices",
                format!("{:?} and {:?}", w_s.shape(), w_c_hat.shape()),
            ));
        }
        Self::from_parts(
            ModelKind::CsTrainable,
            [(W_S.to_string(), w_s), (W_C_HAT.to_string(), w_c_hat)].into(),
            Activation::default(),
        )
    }

    /// `W_s = I`, `Ŵ_c = 0`: plain smoothing of labels and base predictions.
    pub fn cs_identity(c: usize) -> Self {
        Self::with(
            ModelKind::CsTrainable,
            vec![(W_S, Mat::identity(c, c)), (W_C_HAT, Mat::zeros(c, c))],
        )
    }

    /// One-hidden-layer toy model with `W₁: (d+c)×h`, `W₂: h×c`.
    pub fn toy(w1: Mat, w2: Mat, activation: Activation) -> Result<Self> {
        if w1.ncols() != w2.nrows() {
            return Err(Error::dims(
                "toy weights",
                format!("W2 with {} rows", w1.ncols()),
                format!("{} rows", w2.nrows()),
            ));
        }
        Self::from_parts(
            ModelKind::NonlinearToy,
            [(W1.to_string(), w1), (W2.to_string(), w2)].into(),
            activation,
        )
    }

    /// Toy model with entries uniform in `±1/sqrt(fan_in)`.
    pub fn toy_random(d: usize, c: usize, hidden: usize, seed: u64) -> Self {
        use rand::Rng;
        let mut rng = rng::seeded(seed);
        let b1 = 1.0 / ((d + c).max(1) as f64).sqrt();
        let b2 = 1.0 / (hidden.max(1) as f64).sqrt();
        let w1 = Mat::from_fn(d + c, hidden, |_, _| rng.random_range(-b1..=b1));
        let w2 = Mat::from_fn(hidden, c, |_, _| rng.random_range(-b2..=b2));
        Self::with(ModelKind::NonlinearToy, vec![(W1, w1), (W2, w2)])
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn get(&self, name: &str) -> Result<&Mat> {
        self.mats.get(name).ok_or_else(|| {
            Error::InvalidArgument(format!("{} weights have no matrix `{name}`", self.kind))
        })
    }

    pub fn set(&mut self, name: &str, value: Mat) -> Result<()> {
        let slot = self.mats.get_mut(name).ok_or_else(|| {
            Error::InvalidArgument(format!("{} weights have no matrix `{name}`", self.kind))
        })?;
        if slot.shape() != value.shape() {
            return Err(Error::dims(
                "weight update",
                format!("{:?}", slot.shape()),
                format!("{:?}", value.shape()),
            ));
        }
        if value.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalIntegrity(format!(
                "non-finite update to `{name}`"
            )));
        }
        *slot = value;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Mat)> {
        self.mats.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn is_finite(&self) -> bool {
        self.mats.values().all(|m| m.iter().all(|v| v.is_finite()))
    }

    pub fn expect_kind(&self, kind: ModelKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::WrongModelKind {
                expected: kind.to_string(),
                actual: self.kind.to_string(),
            })
        }
    }
}

fn check_rows(context: &'static str, expected: usize, m: &Mat) -> Result<()> {
    if m.nrows() == expected {
        Ok(())
    } else {
        Err(Error::dims(
            context,
            format!("{expected} rows"),
            format!("{} rows", m.nrows()),
        ))
    }
}

fn check_labels(op: &PropagationOperator, labels: &LabelMatrix) -> Result<()> {
    if op.n() == labels.n() {
        Ok(())
    } else {
        Err(Error::dims(
            "labels",
            format!("{} nodes", op.n()),
            format!("{} nodes", labels.n()),
        ))
    }
}

fn matmul(context: &'static str, a: &Mat, b: &Mat) -> Result<Mat> {
    if a.ncols() != b.nrows() {
        return Err(Error::dims(
            context,
            format!("{} rows", a.ncols()),
            format!("{} rows", b.nrows()),
        ));
    }
    Ok(a * b)
}

/// Plain label propagation, `P Y_tr`.
pub fn lp_predict(op: &PropagationOperator, labels: &LabelMatrix) -> Result<Mat> {
    check_labels(op, labels)?;
    op.apply(&labels.y_train())
}

/// `(P − C) Y_tr W`: each node sees only the other nodes' labels.
pub fn self_excluded_predict(
    op: &PropagationOperator,
    labels: &LabelMatrix,
    w: &ModelWeights,
) -> Result<Mat> {
    w.expect_kind(ModelKind::LpW)?;
    check_labels(op, labels)?;
    matmul(
        "self-excluded predictor",
        &op.excluded_apply(&labels.y_train())?,
        w.get(W)?,
    )
}

/// `P Y_tr W`, the trainable-LP predictor used at inference.
pub fn trainable_lp_predict(
    op: &PropagationOperator,
    labels: &LabelMatrix,
    w: &ModelWeights,
) -> Result<Mat> {
    w.expect_kind(ModelKind::LpW)?;
    matmul("trainable lp", &lp_predict(op, labels)?, w.get(W)?)
}

/// `P X W_x + (P − C) Y_tr W_y`.
pub fn feat_label_predict(
    op: &PropagationOperator,
    x: &Mat,
    labels: &LabelMatrix,
    w: &ModelWeights,
) -> Result<Mat> {
    w.expect_kind(ModelKind::FeatLabel)?;
    check_labels(op, labels)?;
    check_rows("features", op.n(), x)?;
    let feature = matmul("feature term", &op.apply(x)?, w.get(W_X)?)?;
    let label = matmul(
        "label term",
        &op.excluded_apply(&labels.y_train())?,
        w.get(W_Y)?,
    )?;
    Ok(feature + label)
}

/// `P X W_x + P Ỹ_in W_y` with `Ỹ_in = Y_in / α`. Callers restrict the
/// loss to `D_out` rows.
pub fn stochastic_predict(
    op: &PropagationOperator,
    x: &Mat,
    labels: &LabelMatrix,
    mask: &SplitMask,
    w: &ModelWeights,
) -> Result<Mat> {
    w.expect_kind(ModelKind::FeatLabel)?;
    check_labels(op, labels)?;
    check_rows("features", op.n(), x)?;
    let feature = matmul("feature term", &op.apply(x)?, w.get(W_X)?)?;
    let label = matmul(
        "label term",
        &op.apply(&masked_labels(labels, mask, true))?,
        w.get(W_Y)?,
    )?;
    Ok(feature + label)
}

/// `P X W_x + P Y_tr W_y`, the deterministic predictor applied at inference.
pub fn inference_predict(
    op: &PropagationOperator,
    x: &Mat,
    labels: &LabelMatrix,
    w: &ModelWeights,
) -> Result<Mat> {
    w.expect_kind(ModelKind::FeatLabel)?;
    check_labels(op, labels)?;
    check_rows("features", op.n(), x)?;
    let feature = matmul("feature term", &op.apply(x)?, w.get(W_X)?)?;
    let label = matmul("label term", &op.apply(&labels.y_train())?, w.get(W_Y)?)?;
    Ok(feature + label)
}

/// Node-wise map used as `h0` / `h1` of the linear-propagation composite.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeMap {
    Identity,
    /// `z W + b`.
    Affine {
        weight: Mat,
        bias: Mat,
    },
    /// `tanh(z W₁ + b₁) W₂ + b₂`.
    Mlp {
        w1: Mat,
        b1: Mat,
        w2: Mat,
        b2: Mat,
    },
}

impl NodeMap {
    pub fn input_width(&self) -> Option<usize> {
        match self {
            NodeMap::Identity => None,
            NodeMap::Affine { weight, .. } => Some(weight.nrows()),
            NodeMap::Mlp { w1, .. } => Some(w1.nrows()),
        }
    }

    pub fn apply(&self, z: &Mat) -> Result<Mat> {
        let add_bias = |mut m: Mat, b: &Mat| -> Result<Mat> {
            if b.nrows() != 1 || b.ncols() != m.ncols() {
                return Err(Error::dims(
                    "node map bias",
                    format!("1x{}", m.ncols()),
                    format!("{}x{}", b.nrows(), b.ncols()),
                ));
            }
            for mut row in m.row_iter_mut() {
                row += b.row(0);
            }
            Ok(m)
        };
        match self {
            NodeMap::Identity => Ok(z.clone()),
            NodeMap::Affine { weight, bias } => add_bias(matmul("node map", z, weight)?, bias),
            NodeMap::Mlp { w1, b1, w2, b2 } => {
                let mut hidden = add_bias(matmul("node map", z, w1)?, b1)?;
                hidden.apply(|v| *v = v.tanh());
                add_bias(matmul("node map", &hidden, w2)?, b2)
            }
        }
    }
}

fn hconcat(a: &Mat, b: &Mat) -> Mat {
    let mut out = Mat::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Linear-propagation model with the label trick applied deterministically:
/// `h1(𝒫 h0([X, Y_tr]) − 𝒞 h0([X, Y_tr]) + 𝒞 h0([X, 0]))`.
///
/// The propagated blocks of the operators in `ops` are concatenated
/// column-wise before `h1`.
pub fn composite_predict(
    ops: &[PropagationOperator],
    x: &Mat,
    labels: &LabelMatrix,
    h0: &NodeMap,
    h1: &NodeMap,
) -> Result<Mat> {
    let first = ops.first().ok_or_else(|| {
        Error::InvalidArgument("composite predictor needs at least one operator".into())
    })?;
    check_labels(first, labels)?;
    check_rows("features", first.n(), x)?;
    let with_labels = h0.apply(&hconcat(x, &labels.y_train()))?;
    let without_labels = h0.apply(&hconcat(x, &Mat::zeros(x.nrows(), labels.n_classes())))?;
    let width = with_labels.ncols();
    if let Some(expected) = h1.input_width() {
        if expected != width * ops.len() {
            return Err(Error::dims(
                "composite h1 input",
                format!("{} columns ({} operators x {width})", expected, ops.len()),
                format!("{}", width * ops.len()),
            ));
        }
    }
    let mut stacked = Mat::zeros(x.nrows(), width * ops.len());
    for (j, op) in ops.iter().enumerate() {
        let block = op.excluded_apply(&with_labels)? + op.diag_apply(&without_labels);
        stacked.columns_mut(j * width, width).copy_from(&block);
    }
    h1.apply(&stacked)
}

/// `act(P [X, y_input] W₁) W₂`.
pub fn nonlinear_toy_predict(
    op: &PropagationOperator,
    x: &Mat,
    y_input: &Mat,
    w: &ModelWeights,
) -> Result<Mat> {
    w.expect_kind(ModelKind::NonlinearToy)?;
    check_rows("features", op.n(), x)?;
    check_rows("label input", op.n(), y_input)?;
    let mut hidden = matmul(
        "toy hidden layer",
        &op.apply(&hconcat(x, y_input))?,
        w.get(W1)?,
    )?;
    w.activation().apply(&mut hidden);
    matmul("toy output layer", &hidden, w.get(W2)?)
}

/// Row-wise scaling `γ` applied to the propagated correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaMode {
    Identity,
    /// Rescale each non-zero row to L1 norm `σ`, the mean L1 norm of the
    /// input-side errors.
    #[default]
    Autoscale,
}

fn apply_gamma(mode: GammaMode, propagated: Mat, errors: &Mat, in_rows: &[usize]) -> Mat {
    match mode {
        GammaMode::Identity => propagated,
        GammaMode::Autoscale => {
            let sigma = if in_rows.is_empty() {
                0.0
            } else {
                in_rows
                    .iter()
                    .map(|&i| errors.row(i).abs().sum())
                    .sum::<f64>()
                    / in_rows.len() as f64
            };
            let mut out = propagated;
            for mut row in out.row_iter_mut() {
                let norm = row.abs().sum();
                if norm > 0.0 {
                    row *= sigma / norm;
                }
            }
            out
        }
    }
}

/// The split-dependent inputs of trainable C&S, `(Ŷ_s, Ŷ_c)`:
/// `Ŷ_s = P_s(Y_in + (M_te + M_out) Ỹ)` and `Ŷ_c = P_s (M_te + M_out) Ẽ_in`,
/// with `Ẽ_in = γ(P_c (Y_in − Ỹ_in))`.
pub fn cs_split_features(
    p_c: &PropagationOperator,
    p_s: &PropagationOperator,
    y_base: &Mat,
    labels: &LabelMatrix,
    mask: &SplitMask,
    gamma: GammaMode,
) -> Result<(Mat, Mat)> {
    check_labels(p_c, labels)?;
    check_labels(p_s, labels)?;
    if y_base.shape() != labels.y().shape() {
        return Err(Error::dims(
            "base predictions",
            format!("{:?}", labels.y().shape()),
            format!("{:?}", y_base.shape()),
        ));
    }
    let y_in = masked_labels(labels, mask, false);
    let mut errors = y_in.clone();
    let mut base_rest = y_base.clone();
    for i in 0..labels.n() {
        if mask.in_mask[i] {
            let mut row = errors.row_mut(i);
            row -= y_base.row(i);
            base_rest.row_mut(i).fill(0.0);
        }
    }
    let in_rows = mask.in_indices();
    let mut correction = apply_gamma(gamma, p_c.apply(&errors)?, &errors, &in_rows);
    for &i in &in_rows {
        correction.row_mut(i).fill(0.0);
    }
    let smooth_input = y_in + base_rest;
    Ok((p_s.apply(&smooth_input)?, p_s.apply(&correction)?))
}

/// Trainable C&S under one split: `Ŷ_s W_s + Ŷ_c Ŵ_c`.
pub fn cs_trainable_predict(
    p_c: &PropagationOperator,
    p_s: &PropagationOperator,
    y_base: &Mat,
    labels: &LabelMatrix,
    mask: &SplitMask,
    w: &ModelWeights,
    gamma: GammaMode,
) -> Result<Mat> {
    w.expect_kind(ModelKind::CsTrainable)?;
    let (smooth, correct) = cs_split_features(p_c, p_s, y_base, labels, mask, gamma)?;
    Ok(matmul("cs smooth", &smooth, w.get(W_S)?)?
        + matmul("cs correct", &correct, w.get(W_C_HAT)?)?)
}

/// Vanilla Correct & Smooth: `P_s(Y_tr + M_te(Ỹ + γ(P_c(Y_tr − Ỹ_tr))))`.
pub fn correct_and_smooth(
    p_c: &PropagationOperator,
    p_s: &PropagationOperator,
    y_base: &Mat,
    labels: &LabelMatrix,
    gamma: GammaMode,
) -> Result<Mat> {
    let all_in = SplitMask::all_in(labels);
    let (smooth, correct) = cs_split_features(p_c, p_s, y_base, labels, &all_in, gamma)?;
    Ok(smooth + correct)
}
