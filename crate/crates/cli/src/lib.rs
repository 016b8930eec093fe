//! Experiment runner behind the `labeltrick` binary.
//!
//! An [`ExperimentConfig`] is resolved from built-in defaults, an optional
//! JSON file, and `--key=value` overrides (dotted keys reach nested
//! fields, e.g. `--train.lr=0.5`). Every run writes a metrics CSV, a
//! `.config.json` sidecar with the resolved config, and optionally a weight
//! checkpoint.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use labeltrick_core::data::{self, Dataset, MetricsRow, SbmSpec};
use labeltrick_core::objectives::{cross_entropy, log_softmax_row};
use labeltrick_core::predictors::{self, ModelWeights};
use labeltrick_core::splits::accuracy;
use labeltrick_core::training::{self, FitResult, TrainConfig, Trick};
use labeltrick_core::verify::{self, Suite, VerificationSuiteReport};
use labeltrick_core::{Error, Mat, OperatorSpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFICATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const THREADS_ENV: &str = "LABELTRICK_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Verification(_) => EXIT_VERIFICATION,
            CliError::Core(Error::NumericalIntegrity(_) | Error::Singular { .. }) => EXIT_NUMERICAL,
            CliError::Core(_) => EXIT_USAGE,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(format!("invalid config: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Plain label propagation `P Y_tr`.
    Lp,
    /// Trainable label propagation under `train.trick`.
    TrainableLp,
    /// Self-excluded propagation `(P − C) Y_tr` with identity weights.
    Selp,
    /// Feature-only linear model `P X W_x`.
    Linear,
    LinearTrickS,
    LinearTrickD,
    /// Vanilla Correct & Smooth over the base model.
    Cs,
    TrainableCs,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Lp => "lp",
            Method::TrainableLp => "trainable_lp",
            Method::Selp => "selp",
            Method::Linear => "linear",
            Method::LinearTrickS => "linear_trick_s",
            Method::LinearTrickD => "linear_trick_d",
            Method::Cs => "cs",
            Method::TrainableCs => "trainable_cs",
        }
    }

    fn is_trained(self) -> bool {
        !matches!(self, Method::Lp | Method::Selp | Method::Cs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Sbm,
    Dir,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub source: DatasetSource,
    /// Dataset directory when `source = "dir"`.
    pub path: Option<PathBuf>,
    pub sbm: SbmSpec,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            source: DatasetSource::Sbm,
            path: None,
            sbm: SbmSpec::default(),
        }
    }
}

/// Softmax-regression base model of the C&S methods. Its class
/// probabilities are `softmax(logits / temperature + class_bias)`, so a
/// small temperature or a bias gives a miscalibrated base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaseConfig {
    pub epochs: usize,
    pub lr: f64,
    pub temperature: f64,
    pub class_bias: Vec<f64>,
}

impl Default for BaseConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            lr: 0.1,
            temperature: 1.0,
            class_bias: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run_id: String,
    pub method: Method,
    /// Master seed; when set it replaces `dataset.sbm.seed` and `train.seed`.
    pub seed: Option<u64>,
    pub dataset: DatasetConfig,
    /// Propagation operator; the correction operator of C&S.
    pub operator: OperatorSpec,
    /// Smoothing operator of C&S.
    pub smooth_operator: OperatorSpec,
    pub train: TrainConfig,
    pub base: BaseConfig,
    /// Metrics CSV; the resolved config goes to `<output>.config.json`.
    pub output: PathBuf,
    pub checkpoint: Option<PathBuf>,
    /// α grid of `sweep-alpha`.
    pub alphas: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            run_id: "run".into(),
            method: Method::Lp,
            seed: None,
            dataset: DatasetConfig::default(),
            operator: OperatorSpec::default(),
            smooth_operator: OperatorSpec {
                lambda: 0.8,
                ..OperatorSpec::default()
            },
            train: TrainConfig::default(),
            base: BaseConfig::default(),
            output: PathBuf::from("metrics.csv"),
            checkpoint: None,
            alphas: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
        }
    }
}

impl ExperimentConfig {
    /// Defaults, then `file`, then `overrides` (`--key=value`).
    pub fn resolve(file: Option<&Path>, overrides: &[String]) -> CliResult<Self> {
        let mut root = serde_json::to_value(ExperimentConfig::default())?;
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            let layer: Value = serde_json::from_str(&text).map_err(|e| {
                CliError::Usage(format!("config {} is not valid JSON: {e}", path.display()))
            })?;
            merge(&mut root, layer);
        }
        for arg in overrides {
            apply_override(&mut root, arg)?;
        }
        let mut cfg: ExperimentConfig = serde_json::from_value(root)?;
        if let Some(seed) = cfg.seed {
            cfg.dataset.sbm.seed = seed;
            cfg.train.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.dataset.source == DatasetSource::Dir {
            match &self.dataset.path {
                Some(p) if p.is_dir() => {}
                Some(p) => {
                    return Err(CliError::Usage(format!(
                        "dataset directory {} does not exist",
                        p.display()
                    )))
                }
                None => {
                    return Err(CliError::Usage(
                        "dataset.path is required when dataset.source = \"dir\"".into(),
                    ))
                }
            }
        }
        if self.base.temperature <= 0.0 || !self.base.temperature.is_finite() {
            return Err(CliError::Usage("base.temperature must be positive".into()));
        }
        let mut train = self.train.clone();
        train.trick = effective_trick(self.method, &self.train);
        train.validate()?;
        Ok(())
    }
}

fn effective_trick(method: Method, train: &TrainConfig) -> Trick {
    match method {
        Method::Linear => Trick::None,
        Method::LinearTrickS => Trick::Stochastic,
        Method::LinearTrickD => Trick::Deterministic,
        // α is read by trainable C&S under any trick setting
        Method::TrainableCs => Trick::Stochastic,
        _ => train.trick,
    }
}

fn merge(base: &mut Value, layer: Value) {
    match (base, layer) {
        (Value::Object(b), Value::Object(l)) => {
            for (k, v) in l {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Applies one `--key=value` override. Values parse as JSON when possible
/// and fall back to strings; dashes in keys become underscores.
pub fn apply_override(root: &mut Value, arg: &str) -> CliResult<()> {
    let bad = || CliError::Usage(format!("override `{arg}` is not of the form --key=value"));
    let (key, raw) = arg
        .strip_prefix("--")
        .and_then(|b| b.split_once('='))
        .ok_or_else(bad)?;
    if key.is_empty() {
        return Err(bad());
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let key = key.replace('-', "_");
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = root;
    for part in &parts[..parts.len() - 1] {
        let obj = cur.as_object_mut().ok_or_else(bad)?;
        cur = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
        if cur.is_null() {
            *cur = Value::Object(Default::default());
        }
    }
    cur.as_object_mut()
        .ok_or_else(bad)?
        .insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

pub fn load_dataset(cfg: &DatasetConfig) -> CliResult<Dataset> {
    match cfg.source {
        DatasetSource::Sbm => Ok(data::make_sbm_with(&cfg.sbm)?),
        DatasetSource::Dir => {
            let path = cfg
                .path
                .as_ref()
                .ok_or_else(|| CliError::Usage("dataset.path is required".into()))?;
            Ok(Dataset::load(path)?)
        }
    }
}

/// Outcome of one method on one dataset.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub method: Method,
    pub alpha: Option<f64>,
    pub seed: u64,
    pub val_accuracy: f64,
    pub test_accuracy: f64,
    /// Final training objective, or the evaluation loss of untrained methods.
    pub loss: Option<f64>,
    pub weights: Option<ModelWeights>,
}

impl RunSummary {
    pub fn metrics_rows(&self, run_id: &str) -> Vec<MetricsRow> {
        [("val", self.val_accuracy), ("test", self.test_accuracy)]
            .into_iter()
            .map(|(split, accuracy)| MetricsRow {
                run_id: run_id.to_string(),
                method: self.method.name().to_string(),
                alpha: self.alpha,
                seed: self.seed,
                split: split.to_string(),
                accuracy,
                loss: self.loss,
            })
            .collect()
    }
}

fn softmax_rows(logits: &Mat) -> Mat {
    let mut out = Mat::zeros(logits.nrows(), logits.ncols());
    for i in 0..logits.nrows() {
        for (j, lp) in log_softmax_row(logits, i).into_iter().enumerate() {
            out[(i, j)] = lp.exp();
        }
    }
    out
}

/// Class probabilities of the (possibly miscalibrated) base model.
pub fn base_predictions(ds: &Dataset, cfg: &ExperimentConfig) -> CliResult<Mat> {
    let x = ds.features();
    if x.ncols() == 0 {
        return Err(CliError::Usage(
            "the C&S methods need node features for the base model".into(),
        ));
    }
    let train = TrainConfig {
        lr: cfg.base.lr,
        epochs: cfg.base.epochs,
        trick: Trick::None,
        loss: labeltrick_core::objectives::Loss::CrossEntropy,
        seed: cfg.train.seed,
        early_stop_patience: None,
        ..TrainConfig::default()
    };
    let fit = training::fit_base_model(&x, &ds.labels, &train, &ds.val_idx, &ds.test_idx)?;
    let mut logits = &x * fit.weights.get(predictors::W_X)? / cfg.base.temperature;
    let c = ds.labels.n_classes();
    if !cfg.base.class_bias.is_empty() {
        if cfg.base.class_bias.len() != c {
            return Err(CliError::Usage(format!(
                "base.class_bias needs {c} entries"
            )));
        }
        for mut row in logits.row_iter_mut() {
            for (j, b) in cfg.base.class_bias.iter().enumerate() {
                row[j] += b;
            }
        }
    }
    Ok(softmax_rows(&logits))
}

/// Runs `cfg.method` on `ds`.
pub fn run_method(ds: &Dataset, cfg: &ExperimentConfig) -> CliResult<RunSummary> {
    let s = ds.graph.normalized_adjacency();
    let op = cfg.operator.build(s)?;
    let labels = &ds.labels;
    let mut train = cfg.train.clone();
    train.trick = effective_trick(cfg.method, &cfg.train);
    let evaluate = |pred: &Mat,
                    loss: Option<f64>,
                    weights: Option<ModelWeights>,
                    alpha: Option<f64>| RunSummary {
        method: cfg.method,
        alpha,
        seed: train.seed,
        val_accuracy: accuracy(pred, labels, &ds.val_idx),
        test_accuracy: accuracy(pred, labels, &ds.test_idx),
        loss,
        weights,
    };
    let fitted = |fit: FitResult, alpha: Option<f64>| RunSummary {
        method: cfg.method,
        alpha,
        seed: train.seed,
        val_accuracy: fit.val_accuracy,
        test_accuracy: fit.test_accuracy,
        loss: fit.train_curve.last().copied(),
        weights: Some(fit.weights),
    };
    let trick_alpha = |trick: Trick| (trick != Trick::None).then_some(train.alpha);
    Ok(match cfg.method {
        Method::Lp => {
            let pred = predictors::lp_predict(&op, labels)?;
            evaluate(&pred, None, None, None)
        }
        Method::Selp => {
            let w = ModelWeights::lp_identity(labels.n_classes());
            let pred = predictors::self_excluded_predict(&op, labels, &w)?;
            let loss = labeltrick_core::objectives::mse_deterministic_rhs(
                &op,
                &Mat::zeros(ds.n(), 0),
                labels,
                &w,
                1.0,
            )?;
            evaluate(&pred, Some(loss), Some(w), None)
        }
        Method::TrainableLp => {
            let fit = training::fit_trainable_lp(&op, labels, &train, &ds.val_idx, &ds.test_idx)?;
            fitted(fit, trick_alpha(train.trick))
        }
        Method::Linear | Method::LinearTrickS | Method::LinearTrickD => {
            let fit = training::fit_linear_model(
                &op,
                &ds.features(),
                labels,
                &train,
                &ds.val_idx,
                &ds.test_idx,
            )?;
            fitted(fit, trick_alpha(train.trick))
        }
        Method::Cs => {
            let p_s = cfg.smooth_operator.build(s)?;
            let base = base_predictions(ds, cfg)?;
            let pred = predictors::correct_and_smooth(&op, &p_s, &base, labels, train.gamma)?;
            let loss = cross_entropy(labels, &pred, &ds.val_idx)?;
            evaluate(&pred, Some(loss), None, None)
        }
        Method::TrainableCs => {
            let p_s = cfg.smooth_operator.build(s)?;
            let base = base_predictions(ds, cfg)?;
            let fit = training::fit_trainable_cs(
                &op,
                &p_s,
                Some(&base),
                labels,
                &train,
                &ds.val_idx,
                &ds.test_idx,
            )?;
            fitted(fit, Some(train.alpha))
        }
    })
}

fn write_sidecar(cfg: &ExperimentConfig) -> CliResult<()> {
    let path = data::sidecar_path(&cfg.output);
    let text = serde_json::to_string_pretty(cfg)? + "\n";
    std::fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?;
    Ok(())
}

fn ensure_parent(path: &Path) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    Ok(())
}

/// `run`: one method, metrics CSV, sidecar and optional checkpoint.
pub fn cmd_run(cfg: &ExperimentConfig) -> CliResult<RunSummary> {
    let ds = load_dataset(&cfg.dataset)?;
    let summary = run_method(&ds, cfg)?;
    ensure_parent(&cfg.output)?;
    data::write_metrics_csv(&cfg.output, &summary.metrics_rows(&cfg.run_id))?;
    write_sidecar(cfg)?;
    if let (Some(path), Some(w)) = (&cfg.checkpoint, &summary.weights) {
        if cfg.method.is_trained() {
            ensure_parent(path)?;
            training::write_checkpoint(path, w, cfg.train.seed, &cfg.train.hash())?;
        }
    }
    Ok(summary)
}

/// `sweep-alpha`: one run per α, rows sorted by α.
pub fn cmd_sweep_alpha(cfg: &ExperimentConfig) -> CliResult<Vec<RunSummary>> {
    if cfg.alphas.is_empty() {
        return Err(CliError::Usage("alphas must not be empty".into()));
    }
    if let Some(a) = cfg.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(CliError::Usage(format!("alpha {a} outside (0, 1)")));
    }
    let mut alphas = cfg.alphas.clone();
    alphas.sort_by(f64::total_cmp);
    let ds = load_dataset(&cfg.dataset)?;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for alpha in alphas {
        let mut run = cfg.clone();
        run.train.alpha = alpha;
        let mut summary = run_method(&ds, &run)?;
        summary.alpha = Some(alpha);
        rows.extend(summary.metrics_rows(&format!("{}-a{alpha}", cfg.run_id)));
        summaries.push(summary);
    }
    ensure_parent(&cfg.output)?;
    data::write_metrics_csv(&cfg.output, &rows)?;
    write_sidecar(cfg)?;
    Ok(summaries)
}

/// Default instance count of a suite.
pub fn default_instances(suite: Suite) -> usize {
    match suite {
        Suite::Appendix => 200,
        _ => 500,
    }
}

/// `verify`: runs the suites and writes their concatenated text report.
pub fn cmd_verify(
    suites: &[Suite],
    n: Option<usize>,
    seed: u64,
    report: &Path,
) -> CliResult<Vec<VerificationSuiteReport>> {
    let reports: Vec<VerificationSuiteReport> = suites
        .iter()
        .map(|&s| verify::run_suite(s, n.unwrap_or_else(|| default_instances(s)), seed))
        .collect();
    ensure_parent(report)?;
    let text: String = reports.iter().map(|r| r.to_text() + "\n").collect();
    std::fs::write(report, text).map_err(|e| Error::Io {
        path: report.to_path_buf(),
        source: e,
    })?;
    Ok(reports)
}

#[derive(Debug, Parser)]
#[command(
    name = "labeltrick",
    version,
    about = "Label propagation and label-trick experiments"
)]
pub struct Cli {
    /// Worker threads; 1 gives bit-identical output across runs.
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SuiteArg {
    Thm1,
    Cor1,
    Thm2,
    Thm3,
    Appendix,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one method and write metrics.
    Run {
        /// JSON config file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// `--key=value` overrides, e.g. `--method=trainable_lp --train.lr=0.5`.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Run verification suites.
    Verify {
        #[arg(value_enum)]
        suite: SuiteArg,
        /// Instances per suite (defaults: 500, appendix 200).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Text report path.
        #[arg(long, default_value = "verify_report.txt")]
        report: PathBuf,
    },
    /// Train once per α and write one row pair per α.
    SweepAlpha {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated α grid, overriding the config.
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Validate a raw dataset with arbitrary ids and write a remapped copy.
    Ingest {
        raw_dir: PathBuf,
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn configure_threads(threads: Option<usize>) -> CliResult<()> {
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    Ok(())
}

/// Removes `--threads=N` from trailing overrides, where clap cannot see it.
fn take_threads(overrides: &mut Vec<String>) -> CliResult<Option<usize>> {
    let mut threads = None;
    let mut rest = Vec::with_capacity(overrides.len());
    for arg in overrides.drain(..) {
        match arg.strip_prefix("--threads=") {
            Some(v) => {
                threads = Some(
                    v.parse()
                        .map_err(|_| CliError::Usage(format!("invalid thread count `{v}`")))?,
                );
            }
            None => rest.push(arg),
        }
    }
    *overrides = rest;
    Ok(threads)
}

fn execute(mut cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    if let Command::Run { overrides, .. } | Command::SweepAlpha { overrides, .. } = &mut cli.command
    {
        if let Some(t) = take_threads(overrides)? {
            cli.threads = Some(t);
        }
    }
    configure_threads(cli.threads)?;
    let io = |e: std::io::Error| {
        CliError::Core(Error::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        })
    };
    match cli.command {
        Command::Run { config, overrides } => {
            let cfg = ExperimentConfig::resolve(config.as_deref(), &overrides)?;
            let s = cmd_run(&cfg)?;
            writeln!(
                out,
                "method={} val_acc={:.6} test_acc={:.6}",
                s.method.name(),
                s.val_accuracy,
                s.test_accuracy
            )
            .map_err(io)?;
        }
        Command::SweepAlpha {
            config,
            alphas,
            overrides,
        } => {
            let mut cfg = ExperimentConfig::resolve(config.as_deref(), &overrides)?;
            if let Some(a) = alphas {
                cfg.alphas = a;
            }
            for s in cmd_sweep_alpha(&cfg)? {
                writeln!(
                    out,
                    "method={} alpha={} val_acc={:.6} test_acc={:.6}",
                    s.method.name(),
                    s.alpha.unwrap_or(f64::NAN),
                    s.val_accuracy,
                    s.test_accuracy
                )
                .map_err(io)?;
            }
        }
        Command::Verify {
            suite,
            n,
            seed,
            report,
        } => {
            let suites: Vec<Suite> = match suite {
                SuiteArg::All => Suite::ALL.to_vec(),
                SuiteArg::Thm1 => vec![Suite::Thm1],
                SuiteArg::Cor1 => vec![Suite::Cor1],
                SuiteArg::Thm2 => vec![Suite::Thm2],
                SuiteArg::Thm3 => vec![Suite::Thm3],
                SuiteArg::Appendix => vec![Suite::Appendix],
            };
            let reports = cmd_verify(&suites, n, seed, &report)?;
            let mut failed = Vec::new();
            for r in &reports {
                let failures = r.failures().count();
                writeln!(
                    out,
                    "{} instances={} max_{}={:.6e} failures={} {}",
                    r.suite.name(),
                    r.instances_run,
                    r.gap_label,
                    r.max_gap,
                    failures,
                    if failures == 0 { "pass" } else { "FAIL" }
                )
                .map_err(io)?;
                if r.suite == Suite::Thm3 {
                    for rec in r.records.iter().filter(|rec| {
                        rec.note
                            .as_deref()
                            .is_some_and(|n| n.starts_with("scaled="))
                    }) {
                        writeln!(out, "  alpha={:<6} rel_gap={:.6e}", rec.alpha, rec.gap)
                            .map_err(io)?;
                    }
                }
                writeln!(
                    err,
                    "{} wall_time={:.3}s",
                    r.suite.name(),
                    r.wall_time.as_secs_f64()
                )
                .map_err(io)?;
                if failures > 0 {
                    failed.push(r.suite.name());
                }
            }
            if !failed.is_empty() {
                return Err(CliError::Verification(failed.join(", ")));
            }
        }
        Command::Ingest {
            raw_dir,
            out_dir,
            seed,
        } => {
            let ds = data::ingest(&raw_dir, &out_dir, seed)?;
            writeln!(
                out,
                "nodes={} edges={} classes={} train={} val={} test={} hash={}",
                ds.n(),
                ds.graph.edges().len(),
                ds.labels.n_classes(),
                ds.train_idx.len(),
                ds.val_idx.len(),
                ds.test_idx.len(),
                ds.provenance.hash
            )
            .map_err(io)?;
        }
    }
    Ok(EXIT_OK)
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match execute(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_reach_nested_fields() {
        let cfg = ExperimentConfig::resolve(
            None,
            &[
                "--method=trainable_lp".into(),
                "--train.lr=0.25".into(),
                "--train.early-stop-patience=5".into(),
                "--dataset.sbm.n_per_block=20".into(),
                "--output=out/m.csv".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.method, Method::TrainableLp);
        assert_eq!(cfg.train.lr, 0.25);
        assert_eq!(cfg.train.early_stop_patience, Some(5));
        assert_eq!(cfg.dataset.sbm.n_per_block, 20);
        assert_eq!(cfg.output, PathBuf::from("out/m.csv"));
    }

    #[test]
    fn config_errors_are_usage_errors() {
        for bad in [
            "--method=nope",
            "--train.lr=-1",
            "--no_such_key=1",
            "method=lp",
            "--train.alpha=1.5",
        ] {
            let e = ExperimentConfig::resolve(None, &[bad.to_string()]).unwrap_err();
            assert_eq!(e.exit_code(), EXIT_USAGE, "{bad}: {e}");
        }
        let e = ExperimentConfig::resolve(None, &["--dataset.source=dir".into()]).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_USAGE);
    }

    #[test]
    fn file_layer_then_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(
            &path,
            r#"{"method": "cs", "train": {"epochs": 7, "lr": 0.3}}"#,
        )
        .unwrap();
        let cfg = ExperimentConfig::resolve(Some(&path), &["--train.lr=0.9".into()]).unwrap();
        assert_eq!(cfg.method, Method::Cs);
        assert_eq!(cfg.train.epochs, 7);
        assert_eq!(cfg.train.lr, 0.9);
    }

    #[test]
    fn master_seed_reaches_data_and_training() {
        let cfg = ExperimentConfig::resolve(None, &["--seed=42".into()]).unwrap();
        assert_eq!(cfg.dataset.sbm.seed, 42);
        assert_eq!(cfg.train.seed, 42);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            CliError::Core(Error::NumericalIntegrity("x".into())).exit_code(),
            EXIT_NUMERICAL
        );
        assert_eq!(
            CliError::Verification("x".into()).exit_code(),
            EXIT_VERIFICATION
        );
        assert_eq!(
            CliError::Core(Error::EmptyTrainingSet).exit_code(),
            EXIT_USAGE
        );
    }
}
