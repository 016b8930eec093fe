//! Label matrices, training masks and the random input/output partitions
//! of the training set.
//!
//! A [`SplitMask`] is one realization of the partition `D_tr = D_in ∪ D_out`.
//! Three sources produce them: [`sample_split`] draws independent Bernoulli
//! memberships, [`one_vs_all_splits`] gives the `m` deterministic
//! leave-one-out splits, and [`enumerate_splits`] walks all `2^m` subsets with
//! their exact probabilities so that expectations can be computed exactly.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::Rng as _;

use crate::error::{check_alpha, Error, Result};
use crate::rng;
use crate::Mat;

/// Largest training set accepted by [`enumerate_splits`].
pub const MAX_ENUMERATION: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    OneHot,
    Real,
}

/// Node labels `Y` together with the training index set `D_tr`.
#[derive(Debug, Clone)]
pub struct LabelMatrix {
    y: Mat,
    train_idx: Vec<usize>,
    train_mask: Vec<bool>,
    kind: LabelKind,
}

impl LabelMatrix {
    pub fn new(y: Mat, train_idx: Vec<usize>, kind: LabelKind) -> Result<Self> {
        let n = y.nrows();
        let mut train_mask = vec![false; n];
        for &i in &train_idx {
            if i >= n {
                return Err(Error::InvalidArgument(format!(
                    "training index {i} out of range for {n} nodes"
                )));
            }
            if std::mem::replace(&mut train_mask[i], true) {
                return Err(Error::InvalidArgument(format!(
                    "training index {i} listed twice"
                )));
            }
        }
        if kind == LabelKind::OneHot {
            for &i in &train_idx {
                let row = y.row(i);
                let ones = row.iter().filter(|&&v| v == 1.0).count();
                let zeros = row.iter().filter(|&&v| v == 0.0).count();
                if ones != 1 || ones + zeros != y.ncols() {
                    return Err(Error::InvalidArgument(format!(
                        "training row {i} is not one-hot"
                    )));
                }
            }
        }
        Ok(Self {
            y,
            train_idx,
            train_mask,
            kind,
        })
    }

    /// One-hot labels from class indices.
    pub fn from_classes(
        n_classes: usize,
        classes: &[usize],
        train_idx: Vec<usize>,
    ) -> Result<Self> {
        let mut y = Mat::zeros(classes.len(), n_classes);
        for (i, &c) in classes.iter().enumerate() {
            if c >= n_classes {
                return Err(Error::InvalidArgument(format!(
                    "node {i} has class {c} but only {n_classes} classes exist"
                )));
            }
            y[(i, c)] = 1.0;
        }
        Self::new(y, train_idx, LabelKind::OneHot)
    }

    pub fn y(&self) -> &Mat {
        &self.y
    }

    /// `Y_tr = M_tr Y`: rows outside the training set zeroed.
    pub fn y_train(&self) -> Mat {
        let mut out = self.y.clone();
        for (i, &is_train) in self.train_mask.iter().enumerate() {
            if !is_train {
                out.row_mut(i).fill(0.0);
            }
        }
        out
    }

    pub fn train_idx(&self) -> &[usize] {
        &self.train_idx
    }

    pub fn train_mask(&self) -> &[bool] {
        &self.train_mask
    }

    pub fn is_train(&self, i: usize) -> bool {
        self.train_mask[i]
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn n_classes(&self) -> usize {
        self.y.ncols()
    }

    /// Training set size `m`.
    pub fn m(&self) -> usize {
        self.train_idx.len()
    }

    pub fn kind(&self) -> LabelKind {
        self.kind
    }

    /// Row argmax with ties resolved to the lowest class index.
    pub fn class_of(&self, i: usize) -> usize {
        argmax_row(&self.y, i)
    }

    /// Same labels with a different training set.
    pub fn with_train_idx(&self, train_idx: Vec<usize>) -> Result<Self> {
        Self::new(self.y.clone(), train_idx, self.kind)
    }
}

/// Index of the largest entry in row `i`; the first wins on ties.
pub fn argmax_row(m: &Mat, i: usize) -> usize {
    let mut best = 0;
    for j in 1..m.ncols() {
        if m[(i, j)] > m[(i, best)] {
            best = j;
        }
    }
    best
}

/// Fraction of `rows` where the prediction argmax matches the label argmax.
pub fn accuracy(pred: &Mat, labels: &LabelMatrix, rows: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let hits = rows
        .iter()
        .filter(|&&i| argmax_row(pred, i) == labels.class_of(i))
        .count();
    hits as f64 / rows.len() as f64
}

/// One partition of the training set into input and output nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitMask {
    pub in_mask: Vec<bool>,
    pub out_mask: Vec<bool>,
    pub alpha: f64,
    /// Probability under exact enumeration, `1/m` for one-vs-all, else 1.
    pub weight: f64,
}

impl SplitMask {
    /// Every training node on the input side; used at inference.
    pub fn all_in(labels: &LabelMatrix) -> Self {
        Self {
            in_mask: labels.train_mask().to_vec(),
            out_mask: vec![false; labels.n()],
            alpha: 1.0,
            weight: 1.0,
        }
    }

    pub fn in_count(&self) -> usize {
        self.in_mask.iter().filter(|&&b| b).count()
    }

    pub fn out_count(&self) -> usize {
        self.out_mask.iter().filter(|&&b| b).count()
    }

    pub fn in_indices(&self) -> Vec<usize> {
        indices(&self.in_mask)
    }

    pub fn out_indices(&self) -> Vec<usize> {
        indices(&self.out_mask)
    }

    /// Checks that the two sides are disjoint and cover exactly `D_tr`.
    pub fn validate(&self, labels: &LabelMatrix) -> Result<()> {
        let n = labels.n();
        if self.in_mask.len() != n || self.out_mask.len() != n {
            return Err(Error::dims(
                "split mask",
                format!("{n} nodes"),
                format!("{}/{}", self.in_mask.len(), self.out_mask.len()),
            ));
        }
        for i in 0..n {
            let (a, b) = (self.in_mask[i], self.out_mask[i]);
            if (a && b) || ((a || b) != labels.is_train(i)) {
                return Err(Error::InvalidArgument(format!(
                    "split mask inconsistent with training set at node {i}"
                )));
            }
        }
        if !(self.weight > 0.0 && self.weight <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "split weight {} outside (0, 1]",
                self.weight
            )));
        }
        Ok(())
    }
}

fn indices(mask: &[bool]) -> Vec<usize> {
    mask.iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect()
}

/// Bernoulli(α) split drawn from a fresh stream for `seed`.
pub fn sample_split(labels: &LabelMatrix, alpha: f64, seed: u64) -> Result<SplitMask> {
    sample_split_with(labels, alpha, &mut rng::seeded(seed))
}

/// Bernoulli(α) split drawn from a caller-owned generator.
pub fn sample_split_with(
    labels: &LabelMatrix,
    alpha: f64,
    rng: &mut rng::Rng,
) -> Result<SplitMask> {
    check_alpha(alpha)?;
    let n = labels.n();
    let mut in_mask = vec![false; n];
    let mut out_mask = vec![false; n];
    for &i in labels.train_idx() {
        if rng.random_bool(alpha) {
            in_mask[i] = true;
        } else {
            out_mask[i] = true;
        }
    }
    Ok(SplitMask {
        in_mask,
        out_mask,
        alpha,
        weight: 1.0,
    })
}

/// The `m` deterministic splits with a single output node each.
pub fn one_vs_all_splits(labels: &LabelMatrix) -> Result<Vec<SplitMask>> {
    let m = labels.m();
    if m == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    Ok(labels
        .train_idx()
        .iter()
        .map(|&i| {
            let mut in_mask = labels.train_mask().to_vec();
            in_mask[i] = false;
            let mut out_mask = vec![false; labels.n()];
            out_mask[i] = true;
            SplitMask {
                in_mask,
                out_mask,
                alpha: 1.0,
                weight: 1.0 / m as f64,
            }
        })
        .collect())
}

/// Iterator over all `2^m` input sets with their exact probabilities.
#[derive(Debug, Clone)]
pub struct SplitEnumeration {
    train_idx: Vec<usize>,
    n: usize,
    alpha: f64,
    next: u64,
    end: u64,
}

impl Iterator for SplitEnumeration {
    type Item = SplitMask;

    fn next(&mut self) -> Option<SplitMask> {
        if self.next >= self.end {
            return None;
        }
        let code = self.next;
        self.next += 1;
        let mut in_mask = vec![false; self.n];
        let mut out_mask = vec![false; self.n];
        let mut n_in = 0;
        for (bit, &i) in self.train_idx.iter().enumerate() {
            if code >> bit & 1 == 1 {
                in_mask[i] = true;
                n_in += 1;
            } else {
                out_mask[i] = true;
            }
        }
        let n_out = self.train_idx.len() - n_in;
        Some(SplitMask {
            in_mask,
            out_mask,
            alpha: self.alpha,
            weight: self.alpha.powi(n_in as i32) * (1.0 - self.alpha).powi(n_out as i32),
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for SplitEnumeration {}

/// Every subset of `D_tr` as `D_in`, weighted by `α^{|D_in|}(1-α)^{|D_out|}`.
pub fn enumerate_splits(labels: &LabelMatrix, alpha: f64) -> Result<SplitEnumeration> {
    check_alpha(alpha)?;
    let m = labels.m();
    if m > MAX_ENUMERATION {
        return Err(Error::EnumerationTooLarge {
            m,
            limit: MAX_ENUMERATION,
        });
    }
    Ok(SplitEnumeration {
        train_idx: labels.train_idx().to_vec(),
        n: labels.n(),
        alpha,
        next: 0,
        end: 1u64 << m,
    })
}

/// `Y_in` (zero rows outside `D_in`), optionally rescaled to `Y_in / α`.
pub fn masked_labels(labels: &LabelMatrix, mask: &SplitMask, rescale: bool) -> Mat {
    let scale = if rescale { 1.0 / mask.alpha } else { 1.0 };
    let mut out = Mat::zeros(labels.n(), labels.n_classes());
    for (i, &inside) in mask.in_mask.iter().enumerate() {
        if inside {
            out.row_mut(i).copy_from(&(labels.y().row(i) * scale));
        }
    }
    out
}

/// Writes one `node_id<TAB>{in|out}` line per training node, ascending id.
pub fn write_split_file(path: impl AsRef<Path>, mask: &SplitMask) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for i in 0..mask.in_mask.len() {
        if mask.in_mask[i] {
            writeln!(text, "{i}\tin").unwrap();
        } else if mask.out_mask[i] {
            writeln!(text, "{i}\tout").unwrap();
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a split file against `labels`; `alpha` is recorded on the mask.
pub fn read_split_file(
    path: impl AsRef<Path>,
    labels: &LabelMatrix,
    alpha: f64,
) -> Result<SplitMask> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let n = labels.n();
    let mut mask = SplitMask {
        in_mask: vec![false; n],
        out_mask: vec![false; n],
        alpha,
        weight: 1.0,
    };
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            message,
        };
        let (id, side) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("expected `node_id<TAB>in|out`".into()))?;
        let id: usize = id
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad node id `{id}`")))?;
        if id >= n {
            return Err(parse_err(format!("node id {id} out of range")));
        }
        match side.trim() {
            "in" => mask.in_mask[id] = true,
            "out" => mask.out_mask[id] = true,
            other => return Err(parse_err(format!("bad side `{other}`"))),
        }
    }
    mask.validate(labels)?;
    Ok(mask)
}
