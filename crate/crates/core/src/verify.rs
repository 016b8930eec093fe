//! Randomized verification suites for the label-trick identities.
//!
//! Each suite draws instances from per-instance seeds derived from a master
//! seed, checks them in parallel, and keeps the records in instance order,
//! so reports are identical for any thread count. Wall time is kept on the
//! report but left out of [`VerificationSuiteReport::to_text`].

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::objectives::{self, Expectation};
use crate::predictors::{Activation, ModelWeights, W1, W2};
use crate::propagation::PropagationOperator;
use crate::rng;
use crate::splits::{enumerate_splits, LabelMatrix};
use crate::Mat;

/// Relative tolerance of the exact identities.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Slack allowed on the cross-entropy bound and its tightness.
pub const BOUND_TOL: f64 = 1e-9;
/// Absolute tolerance of the mask expectation identities.
pub const APPENDIX_TOL: f64 = 1e-10;
/// Largest acceptable `|scaled loss − target| / |target|` at the largest α.
pub const LIMIT_REL_TOL: f64 = 0.02;
/// Tolerance of the identity-activation leave-one-out check.
pub const LINEAR_LIMIT_TOL: f64 = 1e-8;

pub const DEFAULT_THM3_ALPHAS: [f64; 3] = [0.9, 0.99, 0.999];

const ALPHAS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Thm1,
    Cor1,
    Thm2,
    Thm3,
    Appendix,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Thm1,
        Suite::Cor1,
        Suite::Thm2,
        Suite::Thm3,
        Suite::Appendix,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Thm1 => "thm1",
            Suite::Cor1 => "cor1",
            Suite::Thm2 => "thm2",
            Suite::Thm3 => "thm3",
            Suite::Appendix => "appendix",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite `{s}`")))
    }
}

/// One checked instance (or one α of the limit suite).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceRecord {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    /// Suite-specific gap; see [`VerificationSuiteReport::gap_label`].
    pub gap: f64,
    /// Largest test-row difference between `(P − C) Y_tr W` and `P Y_tr W`.
    pub test_row_gap: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationSuiteReport {
    pub suite: Suite,
    pub master_seed: u64,
    pub instances_run: usize,
    pub tolerance: f64,
    pub gap_label: &'static str,
    pub max_gap: f64,
    pub records: Vec<InstanceRecord>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl VerificationSuiteReport {
    fn new(
        suite: Suite,
        master_seed: u64,
        tolerance: f64,
        gap_label: &'static str,
        records: Vec<InstanceRecord>,
        start: Instant,
    ) -> Self {
        let max_gap = records.iter().map(|r| r.gap).fold(0.0, f64::max);
        Self {
            suite,
            master_seed,
            instances_run: records.len(),
            tolerance,
            gap_label,
            max_gap,
            records,
            wall_time: start.elapsed(),
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &InstanceRecord> {
        self.records.iter().filter(|r| !r.passed)
    }

    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.passed)
    }

    /// Plain-text report: a header block, then one line per record.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let failures = self.failures().count();
        writeln!(out, "suite {}", self.suite.name()).unwrap();
        writeln!(out, "master_seed {}", self.master_seed).unwrap();
        writeln!(out, "instances {}", self.instances_run).unwrap();
        writeln!(out, "gap {}", self.gap_label).unwrap();
        writeln!(out, "tolerance {:e}", self.tolerance).unwrap();
        writeln!(out, "max_gap {:.6e}", self.max_gap).unwrap();
        writeln!(out, "failures {failures}").unwrap();
        writeln!(
            out,
            "status {}",
            if failures == 0 { "pass" } else { "fail" }
        )
        .unwrap();
        for r in &self.records {
            write!(
                out,
                "seed={} n={} m={} alpha={} gap={:.6e} test_row_gap={:e} {}",
                r.seed,
                r.n,
                r.m,
                r.alpha,
                r.gap,
                r.test_row_gap,
                if r.passed { "pass" } else { "FAIL" }
            )
            .unwrap();
            if let Some(note) = &r.note {
                write!(out, " note={note}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// A random verification instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub op: PropagationOperator,
    pub x: Mat,
    pub labels: LabelMatrix,
    pub alpha: f64,
    pub w_x: Mat,
    pub w_y: Mat,
}

/// Instance `index` under `master`.
///
/// Graphs are Erdős–Rényi with `n ∈ [4, 16]` and edge probability in
/// `[0.1, 0.9]`; instance 0 is edgeless and instance 1 complete. The
/// training set has `m ∈ [2, min(n, 10)]` nodes, `c ∈ [2, 4]` classes, and
/// `α` comes from `{0.1, …, 0.9}`. The operator is the closed form, a
/// truncated series, or an arbitrary non-negative matrix. With
/// `features`, `X` has `d ∈ [1, 5]` columns.
pub fn random_instance(master: u64, index: u64, features: bool) -> Result<Instance> {
    let seed = rng::derive_seed(master, index);
    let mut r = rng::seeded(seed);
    let n = r.random_range(4..=16usize);
    let p = match index {
        0 => 0.0,
        1 => 1.0,
        _ => r.random_range(0.1..=0.9),
    };
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    let graph = Graph::new(n, edges)?;
    let s = graph.normalized_adjacency();
    let op = match (index, r.random_range(0..3u8)) {
        (0 | 1, _) | (_, 0) => PropagationOperator::closed_form(s, r.random_range(0.1..0.9))?,
        (_, 1) => PropagationOperator::series(s, r.random_range(0.1..0.9), r.random_range(1..=10))?,
        _ => PropagationOperator::explicit(Mat::from_fn(n, n, |_, _| r.random_range(0.0..1.0)))?,
    };
    let m = r.random_range(2..=n.min(10));
    let mut train: Vec<usize> = sample(&mut r, n, m).into_vec();
    train.sort_unstable();
    let c = r.random_range(2..=4usize);
    let classes: Vec<usize> = (0..n).map(|_| r.random_range(0..c)).collect();
    let labels = LabelMatrix::from_classes(c, &classes, train)?;
    let alpha = ALPHAS[r.random_range(0..ALPHAS.len())];
    let d = if features {
        r.random_range(1..=5usize)
    } else {
        0
    };
    let x = Mat::from_fn(n, d, |_, _| r.random_range(-1.0..1.0));
    let w_x = Mat::from_fn(d, c, |_, _| r.random_range(-1.0..1.0));
    let w_y = Mat::from_fn(c, c, |_, _| r.random_range(-1.0..1.0));
    Ok(Instance {
        seed,
        op,
        x,
        labels,
        alpha,
        w_x,
        w_y,
    })
}

/// Largest difference between `(P − C) Y_tr W` and `P Y_tr W` on rows
/// outside the training set; zero by construction.
pub fn test_row_gap(op: &PropagationOperator, labels: &LabelMatrix, w: &Mat) -> Result<f64> {
    let y = labels.y_train();
    let excluded = op.excluded_apply(&y)? * w;
    let plain = op.apply(&y)? * w;
    let mut gap = 0.0f64;
    for i in (0..labels.n()).filter(|&i| !labels.is_train(i)) {
        for j in 0..w.ncols() {
            gap = gap.max((excluded[(i, j)] - plain[(i, j)]).abs());
        }
    }
    Ok(gap)
}

fn record(inst: &Instance, gap: f64, passed: bool, note: Option<String>) -> Result<InstanceRecord> {
    let test_row_gap = test_row_gap(&inst.op, &inst.labels, &inst.w_y)?;
    Ok(InstanceRecord {
        seed: inst.seed,
        n: inst.labels.n(),
        m: inst.labels.m(),
        alpha: inst.alpha,
        gap,
        test_row_gap,
        passed: passed && test_row_gap == 0.0,
        note,
    })
}

fn failed_record(seed: u64, err: Error) -> InstanceRecord {
    InstanceRecord {
        seed,
        n: 0,
        m: 0,
        alpha: 0.0,
        gap: f64::INFINITY,
        test_row_gap: 0.0,
        passed: false,
        note: Some(err.to_string().replace(char::is_whitespace, "_")),
    }
}

fn run_instances<F>(
    n_instances: usize,
    master: u64,
    features: bool,
    check: F,
) -> Vec<InstanceRecord>
where
    F: Fn(&Instance) -> Result<InstanceRecord> + Sync,
{
    (0..n_instances as u64)
        .into_par_iter()
        .map(|i| {
            let seed = rng::derive_seed(master, i);
            random_instance(master, i, features)
                .and_then(|inst| check(&inst))
                .unwrap_or_else(|e| failed_record(seed, e))
        })
        .collect()
}

fn mse_identity(inst: &Instance, features: bool) -> Result<InstanceRecord> {
    let w = if features {
        ModelWeights::feat_label(inst.w_x.clone(), inst.w_y.clone())?
    } else {
        ModelWeights::lp(inst.w_y.clone())?
    };
    let lhs = objectives::mse_stochastic_lhs(
        &inst.op,
        &inst.x,
        &inst.labels,
        &w,
        inst.alpha,
        Expectation::Exact,
    )?;
    let rhs = objectives::mse_deterministic_rhs(&inst.op, &inst.x, &inst.labels, &w, inst.alpha)?;
    let report = objectives::ObjectiveReport::new(lhs.value / (1.0 - inst.alpha), rhs, &lhs);
    record(inst, report.rel_gap, report.rel_gap <= IDENTITY_TOL, None)
}

/// Scaled stochastic MSE against the penalized self-excluded objective,
/// label weights only.
pub fn verify_theorem1(n_instances: usize, seed: u64) -> VerificationSuiteReport {
    let start = Instant::now();
    let records = run_instances(n_instances, seed, false, |inst| mse_identity(inst, false));
    VerificationSuiteReport::new(Suite::Thm1, seed, IDENTITY_TOL, "rel_gap", records, start)
}

/// As [`verify_theorem1`] with random features and feature weights.
pub fn verify_corollary1(n_instances: usize, seed: u64) -> VerificationSuiteReport {
    let start = Instant::now();
    let records = run_instances(n_instances, seed, true, |inst| mse_identity(inst, true));
    VerificationSuiteReport::new(Suite::Cor1, seed, IDENTITY_TOL, "rel_gap", records, start)
}

/// Cross-entropy bound on random weights and its tightness at zero weights.
/// The recorded gap is the larger of the bound violation `rhs − lhs` (zero
/// when the bound holds) and the zero-weight mismatch.
pub fn verify_theorem2(n_instances: usize, seed: u64) -> VerificationSuiteReport {
    let start = Instant::now();
    let records = run_instances(n_instances, seed, true, |inst| {
        let w = ModelWeights::feat_label(inst.w_x.clone(), inst.w_y.clone())?;
        let report = objectives::ce_jensen_gap(&inst.op, &inst.x, &inst.labels, &w, inst.alpha);
        let (violation, note) = match report {
            Ok(r) => ((r.rhs_value - r.lhs_value).max(0.0), None),
            Err(Error::NumericalIntegrity(msg)) => (f64::INFINITY, Some(msg.replace(' ', "_"))),
            Err(e) => return Err(e),
        };
        let zero = ModelWeights::feat_label_zeros(inst.x.ncols(), inst.labels.n_classes());
        let tight = objectives::ce_jensen_gap(&inst.op, &inst.x, &inst.labels, &zero, inst.alpha)?;
        let gap = violation.max(tight.abs_gap);
        record(inst, gap, gap <= BOUND_TOL, note)
    });
    VerificationSuiteReport::new(
        Suite::Thm2,
        seed,
        BOUND_TOL,
        "bound_violation",
        records,
        start,
    )
}

/// The fixed 8-node fixture of the limit suite: two 4-cycles joined by two
/// edges, six training nodes, two classes and two features.
pub fn limit_fixture() -> Result<(PropagationOperator, Mat, LabelMatrix)> {
    let g = Graph::new(
        8,
        [
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 0),
            (3, 4),
            (4, 5),
            (5, 6),
            (6, 7),
            (7, 4),
            (1, 5),
        ],
    )?;
    let op = PropagationOperator::closed_form(g.normalized_adjacency(), 0.6)?;
    let x = Mat::from_fn(8, 2, |i, j| ((i * 3 + j * 5) % 7) as f64 / 7.0 - 0.4);
    let labels = LabelMatrix::from_classes(2, &[0, 0, 0, 0, 1, 1, 1, 1], vec![0, 1, 2, 4, 5, 6])?;
    Ok((op, x, labels))
}

/// Scaled stochastic loss of the toy model against its leave-one-out
/// target, one record per α (relative gap), followed by the
/// identity-activation and zero-output checks.
///
/// Gaps must decrease along the sorted `alphas` and the last one must be
/// within [`LIMIT_REL_TOL`] of the target.
pub fn verify_theorem3(alphas: &[f64], seed: u64) -> VerificationSuiteReport {
    let start = Instant::now();
    let records = limit_records(alphas, seed).unwrap_or_else(|e| vec![failed_record(seed, e)]);
    VerificationSuiteReport::new(
        Suite::Thm3,
        seed,
        LIMIT_REL_TOL,
        "rel_gap_to_target",
        records,
        start,
    )
}

fn limit_records(alphas: &[f64], seed: u64) -> Result<Vec<InstanceRecord>> {
    let (op, x, labels) = limit_fixture()?;
    let (n, m) = (labels.n(), labels.m());
    let mut alphas = alphas.to_vec();
    alphas.sort_by(f64::total_cmp);
    let w = ModelWeights::toy_random(x.ncols(), labels.n_classes(), 8, seed);
    let target = objectives::loo_target(&op, &x, &labels, &w)?;
    let mut records = Vec::new();
    let mut previous = f64::INFINITY;
    for (k, &alpha) in alphas.iter().enumerate() {
        let scaled = objectives::thm3_scaled_loss(&op, &x, &labels, &w, alpha, Expectation::Exact)?;
        let gap = (scaled.value - target).abs() / target.abs().max(f64::MIN_POSITIVE);
        let decreasing = gap < previous;
        let last = k + 1 == alphas.len();
        let within = !last || gap <= LIMIT_REL_TOL;
        previous = gap;
        records.push(InstanceRecord {
            seed,
            n,
            m,
            alpha,
            gap,
            test_row_gap: 0.0,
            passed: decreasing && within,
            note: Some(format!("scaled={:.9e},target={target:.9e}", scaled.value)),
        });
    }

    // identity activation: the target is the self-excluded loss
    let linear = w.clone().with_activation(Activation::Identity);
    let target = objectives::loo_target(&op, &x, &labels, &linear)?;
    let full = linear.get(W1)? * linear.get(W2)?;
    let d = x.ncols();
    let c = labels.n_classes();
    let lin = ModelWeights::feat_label(full.rows(0, d).into_owned(), full.rows(d, c).into_owned())?;
    let det = objectives::mse_deterministic_rhs(&op, &x, &labels, &lin, 1.0)?;
    let gap = (target - det).abs() / det.abs().max(1.0);
    records.push(InstanceRecord {
        seed,
        n,
        m,
        alpha: 1.0,
        gap,
        test_row_gap: test_row_gap(&op, &labels, lin.get(crate::predictors::W_Y)?)?,
        passed: gap <= LINEAR_LIMIT_TOL,
        note: Some("identity_activation".into()),
    });

    // zero output layer: constant prediction, no gap at any α
    let mut zero = w;
    zero.set(W2, Mat::zeros(8, c))?;
    let target = objectives::loo_target(&op, &x, &labels, &zero)?;
    for &alpha in &alphas {
        let scaled =
            objectives::thm3_scaled_loss(&op, &x, &labels, &zero, alpha, Expectation::Exact)?;
        let gap = (scaled.value - target).abs() / target.abs().max(1.0);
        records.push(InstanceRecord {
            seed,
            n,
            m,
            alpha,
            gap,
            test_row_gap: 0.0,
            passed: gap <= LINEAR_LIMIT_TOL,
            note: Some("zero_output".into()),
        });
    }
    Ok(records)
}

fn diag_mask(mask: &[bool]) -> Mat {
    Mat::from_fn(mask.len(), mask.len(), |i, j| {
        if i == j && mask[i] {
            1.0
        } else {
            0.0
        }
    })
}

fn diag_of(m: &Mat) -> Mat {
    Mat::from_fn(
        m.nrows(),
        m.ncols(),
        |i, j| if i == j { m[(i, i)] } else { 0.0 },
    )
}

/// The split expectations of masked products, each against its closed
/// form. The recorded gap is the largest absolute entry error over the
/// five identities.
pub fn appendix_gaps(p: &Mat, labels: &LabelMatrix, alpha: f64) -> Result<[f64; 5]> {
    let n = labels.n();
    let m_tr = diag_mask(labels.train_mask());
    let y_tr = labels.y_train();
    let mut e_out = Mat::zeros(n, n);
    let mut e_b = Mat::zeros(n, n);
    let mut e_c = Mat::zeros(n, n);
    let mut e_d = Mat::zeros(n, n);
    let mut e_cross = Mat::zeros(n, labels.n_classes());
    let pt = p.transpose();
    for split in enumerate_splits(labels, alpha)? {
        let m_in = diag_mask(&split.in_mask);
        let m_out = diag_mask(&split.out_mask);
        let w = split.weight;
        e_out += &m_out * w;
        let p_in = p * &m_in;
        e_b += &m_in * &p_in * w;
        e_c += &m_in * &pt * &m_tr * &p_in * w;
        e_d += &m_in * &pt * &m_in * &p_in * w;
        e_cross += &m_out * &p_in * &y_tr * w;
    }
    let a2 = alpha * alpha;
    let a3 = a2 * alpha;
    let p_tr = &m_tr * p * &m_tr;
    let c_tr = diag_of(&p_tr);
    let gram = p_tr.transpose() * &p_tr;
    let q2 = diag_of(&gram);
    let want_out = &m_tr * (1.0 - alpha);
    let want_b = &p_tr * a2 + &c_tr * (alpha - a2);
    let want_c = &gram * a2 + &q2 * (alpha - a2);
    let want_d = &gram * a3
        + &q2 * (a2 - a3)
        + &c_tr * &c_tr * (alpha - 3.0 * a2 + 2.0 * a3)
        + (&c_tr * &p_tr + p_tr.transpose() * &c_tr) * (a2 - a3);
    let want_cross = (&p_tr - &c_tr) * &y_tr * (alpha - a2);
    Ok([
        (e_out - want_out).amax(),
        (e_b - want_b).amax(),
        (e_c - want_c).amax(),
        (e_d - want_d).amax(),
        (e_cross - want_cross).amax(),
    ])
}

/// Mask expectation identities on random instances.
pub fn verify_appendix_identities(n_instances: usize, seed: u64) -> VerificationSuiteReport {
    let start = Instant::now();
    let records = run_instances(n_instances, seed, false, |inst| {
        let p = materialize(&inst.op)?;
        let gaps = appendix_gaps(&p, &inst.labels, inst.alpha)?;
        let gap = gaps.iter().cloned().fold(0.0, f64::max);
        let note = format!(
            "a={:.1e},b={:.1e},c={:.1e},d={:.1e},cross={:.1e}",
            gaps[0], gaps[1], gaps[2], gaps[3], gaps[4]
        );
        record(inst, gap, gap <= APPENDIX_TOL, Some(note))
    });
    VerificationSuiteReport::new(
        Suite::Appendix,
        seed,
        APPENDIX_TOL,
        "abs_gap",
        records,
        start,
    )
}

fn materialize(op: &PropagationOperator) -> Result<Mat> {
    match op.matrix() {
        Some(p) => Ok(p.clone()),
        None => op.apply(&Mat::identity(op.n(), op.n())),
    }
}

/// Runs one suite with `n` instances (ignored by the limit suite).
pub fn run_suite(suite: Suite, n: usize, seed: u64) -> VerificationSuiteReport {
    match suite {
        Suite::Thm1 => verify_theorem1(n, seed),
        Suite::Cor1 => verify_corollary1(n, seed),
        Suite::Thm2 => verify_theorem2(n, seed),
        Suite::Thm3 => verify_theorem3(&DEFAULT_THM3_ALPHAS, seed),
        Suite::Appendix => verify_appendix_identities(n, seed),
    }
}

/// Every suite in a fixed order.
pub fn run_all(n: usize, seed: u64) -> Vec<VerificationSuiteReport> {
    Suite::ALL.iter().map(|&s| run_suite(s, n, seed)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::OperatorMode;

    #[test]
    fn instance_generator_covers_regimes() {
        let edgeless = random_instance(7, 0, false).unwrap();
        let p = edgeless.op.dense().unwrap();
        assert!((0..p.nrows()).all(|i| (0..p.ncols()).all(|j| i == j || p[(i, j)] == 0.0)));
        let complete = random_instance(7, 1, false).unwrap();
        assert!(complete.op.dense().unwrap().iter().all(|&v| v > 0.0));
        let mut modes = std::collections::BTreeSet::new();
        for i in 0..60 {
            let inst = random_instance(7, i, i % 2 == 0).unwrap();
            let n = inst.labels.n();
            assert!((4..=16).contains(&n));
            assert!((2..=n.min(10)).contains(&inst.labels.m()));
            assert!(ALPHAS.contains(&inst.alpha));
            if i % 2 == 0 {
                assert!((1..=5).contains(&inst.x.ncols()));
            }
            modes.insert(format!("{:?}", inst.op.mode()));
        }
        assert_eq!(modes.len(), 3);
        assert!(modes.contains(&format!("{:?}", OperatorMode::Explicit)));
    }

    #[test]
    fn small_suites_pass() {
        for report in run_all(25, 3) {
            assert!(report.passed(), "{}", report.to_text());
            assert_eq!(
                report.instances_run,
                if report.suite == Suite::Thm3 { 7 } else { 25 }
            );
        }
    }

    #[test]
    fn empty_suite_passes() {
        let r = verify_theorem1(0, 1);
        assert!(r.passed());
        assert_eq!(r.max_gap, 0.0);
        assert!(r.to_text().contains("status pass"));
    }

    #[test]
    fn reports_are_deterministic() {
        assert_eq!(
            verify_corollary1(12, 5).to_text(),
            verify_corollary1(12, 5).to_text()
        );
        assert_ne!(
            verify_corollary1(12, 5).to_text(),
            verify_corollary1(12, 6).to_text()
        );
    }

    #[test]
    fn diagonal_operator_has_no_cross_terms() {
        let labels = LabelMatrix::from_classes(2, &[0, 1, 0, 1, 1], vec![0, 1, 3, 4]).unwrap();
        let p = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![0.4, 0.3, 0.2, 0.6, 0.5]));
        let gaps = appendix_gaps(&p, &labels, 0.5).unwrap();
        assert!(gaps.iter().all(|&g| g <= APPENDIX_TOL));
    }

    #[test]
    fn limit_suite_is_monotone() {
        let r = verify_theorem3(&DEFAULT_THM3_ALPHAS, 0);
        assert!(r.passed(), "{}", r.to_text());
        let gaps: Vec<f64> = r.records.iter().take(3).map(|r| r.gap).collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2]);
    }

    #[test]
    fn suite_names_parse() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("thm4".parse::<Suite>().is_err());
    }
}
