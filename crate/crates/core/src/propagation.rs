//! Propagation operators `P`, their diagonal `C = diag(P)` and the
//! regularizer factor `Γ`.
//!
//! Three constructions are supported:
//!
//! * closed form, `P = (1-λ)(I - λS)^{-1}`, materialized densely;
//! * truncated series, `P = (1-λ) Σ_{i=0}^{k} λ^i S^i`, applied by the
//!   recursion `F ← λ S F + (1-λ) M` started from `F = (1-λ) M`, so that `k`
//!   steps reproduce the polynomial exactly;
//! * an explicit user matrix.
//!
//! Quantities that need `diag(PᵀP)` require a materialized matrix. Series
//! operators materialize while `n` is at most the dense threshold and stay
//! implicit above it, in which case only `C` is tracked.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseMatrix;
use crate::splits::LabelMatrix;
use crate::Mat;

pub const DEFAULT_DENSE_THRESHOLD: usize = 4096;
pub const DEFAULT_LAMBDA: f64 = 0.6;
pub const DEFAULT_STEPS: usize = 50;

/// Radicands of `Γ` down to this value are clamped to zero.
const RADICAND_SLACK: f64 = 1e-12;
/// Columns of the basis processed together when tracking an implicit diagonal.
const DIAG_BLOCK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorMode {
    ClosedForm,
    TruncatedSeries,
    Explicit,
}

/// Serializable description of how to build an operator from `S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorSpec {
    pub mode: OperatorMode,
    pub lambda: f64,
    pub steps: usize,
    pub dense_threshold: usize,
}

impl Default for OperatorSpec {
    fn default() -> Self {
        Self {
            mode: OperatorMode::ClosedForm,
            lambda: DEFAULT_LAMBDA,
            steps: DEFAULT_STEPS,
            dense_threshold: DEFAULT_DENSE_THRESHOLD,
        }
    }
}

impl OperatorSpec {
    /// Builds the operator over `s`. Explicit mode uses `S` itself as `P`.
    pub fn build(&self, s: &SparseMatrix) -> Result<PropagationOperator> {
        match self.mode {
            OperatorMode::ClosedForm => PropagationOperator::closed_form_with_threshold(
                s,
                self.lambda,
                self.dense_threshold,
            ),
            OperatorMode::TruncatedSeries => PropagationOperator::series_with_threshold(
                s,
                self.lambda,
                self.steps,
                self.dense_threshold,
            ),
            OperatorMode::Explicit => PropagationOperator::explicit(s.to_dense()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PropagationOperator {
    mode: OperatorMode,
    lambda: Option<f64>,
    steps: Option<usize>,
    s: Option<SparseMatrix>,
    matrix: Option<Mat>,
    diag: Vec<f64>,
    diag_ptp: Option<Vec<f64>>,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::LambdaOutOfRange(lambda))
    }
}

fn check_square(s: &SparseMatrix) -> Result<()> {
    if s.is_square() {
        Ok(())
    } else {
        Err(Error::dims(
            "propagation operator",
            "square matrix",
            format!("{}x{}", s.n_rows(), s.n_cols()),
        ))
    }
}

/// Squared column norms, `diag(PᵀP)`.
fn column_sq_norms(p: &Mat) -> Vec<f64> {
    (0..p.ncols())
        .map(|j| p.column(j).iter().map(|v| v * v).sum())
        .collect()
}

impl PropagationOperator {
    pub fn closed_form(s: &SparseMatrix, lambda: f64) -> Result<Self> {
        Self::closed_form_with_threshold(s, lambda, DEFAULT_DENSE_THRESHOLD)
    }

    pub fn closed_form_with_threshold(
        s: &SparseMatrix,
        lambda: f64,
        threshold: usize,
    ) -> Result<Self> {
        check_lambda(lambda)?;
        check_square(s)?;
        let n = s.n_rows();
        if n > threshold {
            return Err(Error::AboveDenseThreshold { n, threshold });
        }
        let system = Mat::identity(n, n) - s.to_dense() * lambda;
        let rhs = Mat::identity(n, n) * (1.0 - lambda);
        let p = system
            .clone()
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::NumericalIntegrity("I - λS is singular".into()))?;
        let residual = (&system * &p - &rhs).abs().row_sum().max();
        if residual > 1e-8 {
            return Err(Error::NumericalIntegrity(format!(
                "closed-form inverse residual {residual:e} exceeds 1e-8"
            )));
        }
        Ok(Self::from_matrix(
            OperatorMode::ClosedForm,
            Some(lambda),
            None,
            None,
            p,
        ))
    }

    pub fn series(s: &SparseMatrix, lambda: f64, steps: usize) -> Result<Self> {
        Self::series_with_threshold(s, lambda, steps, DEFAULT_DENSE_THRESHOLD)
    }

    pub fn series_with_threshold(
        s: &SparseMatrix,
        lambda: f64,
        steps: usize,
        threshold: usize,
    ) -> Result<Self> {
        check_lambda(lambda)?;
        check_square(s)?;
        let n = s.n_rows();
        if n <= threshold {
            let p = series_apply(s, lambda, steps, &Mat::identity(n, n))?;
            return Ok(Self::from_matrix(
                OperatorMode::TruncatedSeries,
                Some(lambda),
                Some(steps),
                Some(s.clone()),
                p,
            ));
        }
        let diag = series_diagonal(s, lambda, steps)?;
        Ok(Self {
            mode: OperatorMode::TruncatedSeries,
            lambda: Some(lambda),
            steps: Some(steps),
            s: Some(s.clone()),
            matrix: None,
            diag,
            diag_ptp: None,
        })
    }

    /// Any square matrix used directly as `P`.
    pub fn explicit(p: Mat) -> Result<Self> {
        if p.nrows() != p.ncols() {
            return Err(Error::dims(
                "explicit operator",
                "square matrix",
                format!("{}x{}", p.nrows(), p.ncols()),
            ));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "explicit operator has non-finite entries".into(),
            ));
        }
        Ok(Self::from_matrix(
            OperatorMode::Explicit,
            None,
            None,
            None,
            p,
        ))
    }

    fn from_matrix(
        mode: OperatorMode,
        lambda: Option<f64>,
        steps: Option<usize>,
        s: Option<SparseMatrix>,
        p: Mat,
    ) -> Self {
        let diag = p.diagonal().iter().copied().collect();
        let diag_ptp = Some(column_sq_norms(&p));
        Self {
            mode,
            lambda,
            steps,
            s,
            matrix: Some(p),
            diag,
            diag_ptp,
        }
    }

    pub fn mode(&self) -> OperatorMode {
        self.mode
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    pub fn steps(&self) -> Option<usize> {
        self.steps
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// `C = diag(P)`.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// `diag(PᵀP)`, present when `P` is materialized.
    pub fn diag_ptp(&self) -> Option<&[f64]> {
        self.diag_ptp.as_deref()
    }

    pub fn matrix(&self) -> Option<&Mat> {
        self.matrix.as_ref()
    }

    pub fn dense(&self) -> Result<&Mat> {
        self.matrix.as_ref().ok_or(Error::DenseModeRequired)
    }

    /// `P m`.
    pub fn apply(&self, m: &Mat) -> Result<Mat> {
        if m.nrows() != self.n() {
            return Err(Error::dims(
                "propagation apply",
                format!("{} rows", self.n()),
                format!("{} rows", m.nrows()),
            ));
        }
        match (&self.matrix, &self.s) {
            (Some(p), _) => Ok(p * m),
            (None, Some(s)) => series_apply(
                s,
                self.lambda.expect("series operator has lambda"),
                self.steps.expect("series operator has steps"),
                m,
            ),
            (None, None) => unreachable!("operator without matrix or series"),
        }
    }

    /// `(P - C) m`, subtracting `C_i m_i` from each row of `P m`.
    pub fn excluded_apply(&self, m: &Mat) -> Result<Mat> {
        let mut out = self.apply(m)?;
        for (i, &c) in self.diag.iter().enumerate() {
            for j in 0..m.ncols() {
                out[(i, j)] -= c * m[(i, j)];
            }
        }
        Ok(out)
    }

    /// `C m` with `C` as a diagonal matrix.
    pub fn diag_apply(&self, m: &Mat) -> Mat {
        let mut out = m.clone();
        for (i, &c) in self.diag.iter().enumerate() {
            out.row_mut(i).scale_mut(c);
        }
        out
    }
}

fn series_apply(s: &SparseMatrix, lambda: f64, steps: usize, m: &Mat) -> Result<Mat> {
    let seed = m * (1.0 - lambda);
    let mut f = seed.clone();
    for _ in 0..steps {
        f = s.spmm(&f)? * lambda + &seed;
    }
    Ok(f)
}

/// Diagonal of the truncated polynomial, accumulated from `diag(S^i)` by
/// pushing blocks of basis columns through the powers of `S`.
fn series_diagonal(s: &SparseMatrix, lambda: f64, steps: usize) -> Result<Vec<f64>> {
    let n = s.n_rows();
    let mut diag = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let width = DIAG_BLOCK.min(n - start);
        let mut power = Mat::from_fn(n, width, |i, j| if i == start + j { 1.0 } else { 0.0 });
        let mut coeff = 1.0 - lambda;
        for step in 0..=steps {
            for j in 0..width {
                diag[start + j] += coeff * power[(start + j, j)];
            }
            if step < steps {
                power = s.spmm(&power)?;
                coeff *= lambda;
            }
        }
        start += width;
    }
    Ok(diag)
}

/// Per-node scale of `Γ`: `sqrt(Σ_{k∈D_tr} P_ki² − P_ii²)` on training
/// nodes, zero elsewhere.
///
/// Only training rows of `P` enter the expectation of the stochastic
/// objective, so the column norms are restricted to `D_tr`. When every node
/// is a training node this is `(diag(PᵀP) − C²)^{1/2}`.
pub fn gamma_scale(op: &PropagationOperator, labels: &LabelMatrix) -> Result<Vec<f64>> {
    let p = op.dense()?;
    if labels.n() != op.n() {
        return Err(Error::dims(
            "gamma",
            format!("{} nodes", op.n()),
            format!("{} nodes", labels.n()),
        ));
    }
    let train = labels.train_idx();
    let mut scale = vec![0.0; op.n()];
    for &i in train {
        let col_norm: f64 = train.iter().map(|&k| p[(k, i)] * p[(k, i)]).sum();
        let radicand = col_norm - op.diag[i] * op.diag[i];
        if radicand < -RADICAND_SLACK {
            return Err(Error::NumericalIntegrity(format!(
                "negative Γ radicand {radicand:e} at node {i}"
            )));
        }
        scale[i] = radicand.max(0.0).sqrt();
    }
    Ok(scale)
}

/// `Γ`, the graph-dependent factor of the label-weight regularizer.
pub fn gamma_matrix(op: &PropagationOperator, labels: &LabelMatrix) -> Result<Mat> {
    let scale = gamma_scale(op, labels)?;
    let mut gamma = labels.y_train();
    for (i, s) in scale.into_iter().enumerate() {
        gamma.row_mut(i).scale_mut(s);
    }
    Ok(gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn edge() -> SparseMatrix {
        Graph::new(2, [(0, 1)])
            .unwrap()
            .normalized_adjacency()
            .clone()
    }

    fn triangle() -> SparseMatrix {
        Graph::new(3, [(0, 1), (1, 2), (0, 2)])
            .unwrap()
            .normalized_adjacency()
            .clone()
    }

    fn random_s(rng: &mut ChaCha8Rng, n: usize) -> SparseMatrix {
        let p = rng.random_range(0.05..0.9);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        Graph::new(n, edges).unwrap().normalized_adjacency().clone()
    }

    /// Dense oracle: `(1-λ) Σ_{i≤k} λ^i S^i` by explicit powers.
    fn polynomial_oracle(s: &Mat, lambda: f64, k: usize) -> Mat {
        let n = s.nrows();
        let mut power = Mat::identity(n, n);
        let mut acc = Mat::zeros(n, n);
        for i in 0..=k {
            acc += &power * ((1.0 - lambda) * lambda.powi(i as i32));
            power = &power * s;
        }
        acc
    }

    #[test]
    fn edgeless_closed_form() {
        let s = SparseMatrix::zeros(3, 3);
        let op = PropagationOperator::closed_form(&s, 0.3).unwrap();
        assert_abs_diff_eq!(
            *op.dense().unwrap(),
            Mat::identity(3, 3) * 0.7,
            epsilon = 1e-15
        );
        assert!(op.diag().iter().all(|&c| (c - 0.7).abs() < 1e-15));
        let y = Mat::from_fn(3, 2, |i, j| (i + 2 * j) as f64);
        assert_abs_diff_eq!(op.apply(&y).unwrap(), &y * 0.7, epsilon = 1e-15);
        let labels =
            crate::splits::LabelMatrix::from_classes(2, &[0, 1, 0], vec![0, 1, 2]).unwrap();
        assert_eq!(gamma_matrix(&op, &labels).unwrap(), Mat::zeros(3, 2));
    }

    #[test]
    fn two_node_closed_form() {
        let op = PropagationOperator::closed_form(&edge(), 0.5).unwrap();
        let p = op.dense().unwrap();
        let want = Mat::from_row_slice(2, 2, &[2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0]);
        assert_abs_diff_eq!(*p, want, epsilon = 1e-14);
        assert_abs_diff_eq!(op.diag()[0], 2.0 / 3.0, epsilon = 1e-14);
        let ptp = op.diag_ptp().unwrap();
        assert_abs_diff_eq!(ptp[0], 5.0 / 9.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ptp[1], 5.0 / 9.0, epsilon = 1e-14);

        let labels = crate::splits::LabelMatrix::from_classes(2, &[0, 1], vec![0, 1]).unwrap();
        let gamma = gamma_matrix(&op, &labels).unwrap();
        assert_abs_diff_eq!(gamma, Mat::identity(2, 2) / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_lambda_and_size() {
        let s = triangle();
        assert!(matches!(
            PropagationOperator::closed_form(&s, 1.0),
            Err(Error::LambdaOutOfRange(_))
        ));
        assert!(PropagationOperator::series(&s, 0.0, 3).is_err());
        assert!(matches!(
            PropagationOperator::closed_form_with_threshold(&s, 0.5, 2),
            Err(Error::AboveDenseThreshold { n: 3, threshold: 2 })
        ));
    }

    #[test]
    fn series_zero_steps_is_scaled_identity() {
        let op = PropagationOperator::series(&triangle(), 0.4, 0).unwrap();
        assert_abs_diff_eq!(
            *op.dense().unwrap(),
            Mat::identity(3, 3) * 0.6,
            epsilon = 1e-15
        );
    }

    #[test]
    fn series_converges_to_closed_form() {
        let y = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let closed = PropagationOperator::closed_form(&edge(), 0.5).unwrap();
        let series = PropagationOperator::series_with_threshold(&edge(), 0.5, 50, 0).unwrap();
        assert!(series.matrix().is_none());
        assert_abs_diff_eq!(
            series.apply(&y).unwrap(),
            closed.apply(&y).unwrap(),
            epsilon = 1e-8
        );

        let closed = PropagationOperator::closed_form(&triangle(), 0.6).unwrap();
        let series = PropagationOperator::series_with_threshold(&triangle(), 0.6, 50, 0).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(series.diag()[i], closed.diag()[i], epsilon = 1e-6);
        }
    }

    #[test]
    fn basis_extraction() {
        let op = PropagationOperator::closed_form(&triangle(), 0.6).unwrap();
        let e1 = Mat::from_fn(3, 1, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let col = op.apply(&e1).unwrap();
        for i in 0..3 {
            assert_eq!(col[(i, 0)], op.dense().unwrap()[(i, 0)]);
        }
    }

    #[test]
    fn series_tail_bound_and_diag_exactness() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..25 {
            let n = rng.random_range(2..=50);
            let s = random_s(&mut rng, n);
            let lambda = 0.6;
            let y = Mat::from_fn(n, 3, |_, _| rng.random_range(-1.0..1.0));
            let closed = PropagationOperator::closed_form(&s, lambda).unwrap();
            let series = PropagationOperator::series_with_threshold(&s, lambda, 50, 0).unwrap();
            let gap = (series.apply(&y).unwrap() - closed.apply(&y).unwrap()).amax();
            // ‖S^i‖_∞ ≤ sqrt(d_max / d_min) over non-isolated nodes.
            let degrees: Vec<f64> = (0..n)
                .map(|i| s.row(i).count() as f64)
                .filter(|&d| d > 0.0)
                .collect();
            let spread = if degrees.is_empty() {
                1.0
            } else {
                let max = degrees.iter().cloned().fold(0.0, f64::max);
                let min = degrees.iter().cloned().fold(f64::INFINITY, f64::min);
                (max / min).sqrt()
            };
            let bound = lambda.powi(51) / (1.0 - lambda) * spread * y.amax() + 1e-13;
            assert!(gap <= bound, "gap {gap:e} > bound {bound:e}");
            assert!(gap <= 1e-6);

            let k = rng.random_range(0..=10);
            let implicit = PropagationOperator::series_with_threshold(&s, lambda, k, 0).unwrap();
            let oracle = polynomial_oracle(&s.to_dense(), lambda, k);
            for i in 0..n {
                assert_abs_diff_eq!(implicit.diag()[i], oracle[(i, i)], epsilon = 1e-12);
            }
            let dense = closed.dense().unwrap();
            assert!(dense.iter().all(|&v| v >= -1e-15));
            let residual = (Mat::identity(n, n) - s.to_dense() * lambda) * dense
                - Mat::identity(n, n) * (1.0 - lambda);
            assert!(residual.abs().row_sum().max() <= 1e-8);
        }
    }

    #[test]
    fn gamma_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = random_s(&mut rng, 8);
        let op = PropagationOperator::closed_form(&s, 0.6).unwrap();
        let classes: Vec<usize> = (0..8).map(|_| rng.random_range(0..3)).collect();

        // all nodes labelled: Γ = (diag(PᵀP) − C²)^{1/2} Y_tr
        let full = crate::splits::LabelMatrix::from_classes(3, &classes, (0..8).collect()).unwrap();
        let p = op.dense().unwrap();
        let ptp = p.transpose() * p;
        let mut want = full.y_train();
        for i in 0..8 {
            let r = (ptp[(i, i)] - p[(i, i)] * p[(i, i)]).sqrt();
            want.row_mut(i).scale_mut(r);
        }
        assert_abs_diff_eq!(gamma_matrix(&op, &full).unwrap(), want, epsilon = 1e-12);

        // partial training set: columns restricted to training rows
        let train = vec![1, 3, 4, 6];
        let partial = full.with_train_idx(train.clone()).unwrap();
        let mut mtr_p = p.clone();
        for k in 0..8 {
            if !train.contains(&k) {
                mtr_p.row_mut(k).fill(0.0);
            }
        }
        let ptp = mtr_p.transpose() * &mtr_p;
        let mut want = partial.y_train();
        for i in 0..8 {
            let r = if train.contains(&i) {
                (ptp[(i, i)] - p[(i, i)] * p[(i, i)]).sqrt()
            } else {
                0.0
            };
            want.row_mut(i).scale_mut(r);
        }
        assert_abs_diff_eq!(gamma_matrix(&op, &partial).unwrap(), want, epsilon = 1e-12);
    }

    #[test]
    fn gamma_needs_dense_mode() {
        let op = PropagationOperator::series_with_threshold(&triangle(), 0.5, 4, 0).unwrap();
        let labels = crate::splits::LabelMatrix::from_classes(2, &[0, 1, 0], vec![0]).unwrap();
        assert!(matches!(
            gamma_matrix(&op, &labels),
            Err(Error::DenseModeRequired)
        ));
    }

    #[test]
    fn excluded_apply_blocks_own_row() {
        let op = PropagationOperator::closed_form(&edge(), 0.5).unwrap();
        let y = Mat::identity(2, 2);
        let out = op.excluded_apply(&y).unwrap();
        assert_abs_diff_eq!(
            out,
            Mat::from_row_slice(2, 2, &[0.0, 1.0 / 3.0, 1.0 / 3.0, 0.0]),
            epsilon = 1e-15
        );
    }
}
