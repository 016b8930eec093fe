//! Dataset files, synthetic generators and metric output.
//!
//! A dataset directory holds five files:
//!
//! | file           | content                                   |
//! |----------------|-------------------------------------------|
//! | `edges.txt`    | `u v [w]` per line, 0-based ids           |
//! | `features.csv` | header `node_id,c0,..`, one row per node  |
//! | `labels.csv`   | header `node_id,label`, integer classes   |
//! | `split.csv`    | header `node_id,set`, `train|val|test`    |
//! | `meta.json`    | name, node count, class count, seed       |
//!
//! The provenance hash is the SHA-256 of these files' bytes in the order
//! above, so it changes exactly when a file changes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng;
use crate::splits::{LabelKind, LabelMatrix};
use crate::Mat;

pub const EDGES_FILE: &str = "edges.txt";
pub const FEATURES_FILE: &str = "features.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const SPLIT_FILE: &str = "split.csv";
pub const META_FILE: &str = "meta.json";
pub const ID_MAP_FILE: &str = "id_map.csv";
pub const CLASS_MAP_FILE: &str = "class_map.csv";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub hash: String,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub graph: Graph,
    /// One-hot rows for every labeled node; training rows are `train_idx`.
    pub labels: LabelMatrix,
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Meta {
    name: String,
    n: usize,
    n_classes: usize,
    seed: Option<u64>,
}

impl Dataset {
    /// Assembles a dataset and checks the split invariants. The provenance
    /// hash is computed from the rendered files.
    pub fn new(
        name: impl Into<String>,
        graph: Graph,
        classes: &[Option<usize>],
        n_classes: usize,
        (train_idx, val_idx, test_idx): (Vec<usize>, Vec<usize>, Vec<usize>),
        seed: Option<u64>,
    ) -> Result<Self> {
        let n = graph.n();
        if classes.len() != n {
            return Err(Error::dims(
                "labels",
                format!("{n} nodes"),
                format!("{} nodes", classes.len()),
            ));
        }
        let mut seen = vec![false; n];
        for &i in train_idx.iter().chain(&val_idx).chain(&test_idx) {
            if i >= n {
                return Err(Error::InvalidArgument(format!(
                    "split node {i} out of range"
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument(format!(
                    "node {i} appears in more than one split set"
                )));
            }
            if classes[i].is_none() {
                return Err(Error::InvalidArgument(format!(
                    "split node {i} has no label"
                )));
            }
        }
        let mut y = Mat::zeros(n, n_classes);
        for (i, c) in classes.iter().enumerate() {
            if let Some(c) = *c {
                if c >= n_classes {
                    return Err(Error::InvalidArgument(format!(
                        "node {i} has class {c} >= {n_classes}"
                    )));
                }
                y[(i, c)] = 1.0;
            }
        }
        let labels = LabelMatrix::new(y, train_idx.clone(), LabelKind::OneHot)?;
        let mut ds = Self {
            name: name.into(),
            graph,
            labels,
            train_idx,
            val_idx,
            test_idx,
            provenance: Provenance {
                hash: String::new(),
                seed,
            },
        };
        ds.provenance.hash = hash_files(&ds.render());
        Ok(ds)
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn features(&self) -> Mat {
        self.graph.features_or_empty()
    }

    /// Class of every node, `None` for unlabeled ones.
    pub fn classes(&self) -> Vec<Option<usize>> {
        let y = self.labels.y();
        (0..self.n())
            .map(|i| y.row(i).iter().position(|&v| v == 1.0))
            .collect()
    }

    fn render(&self) -> Vec<(&'static str, String)> {
        let mut edges = String::new();
        for &(u, v, w) in self.graph.edges() {
            if w == 1.0 {
                writeln!(edges, "{u} {v}").unwrap();
            } else {
                writeln!(edges, "{u} {v} {w:?}").unwrap();
            }
        }
        let x = self.features();
        let mut features = String::from("node_id");
        for j in 0..x.ncols() {
            write!(features, ",c{j}").unwrap();
        }
        features.push('\n');
        for i in 0..x.nrows() {
            write!(features, "{i}").unwrap();
            for j in 0..x.ncols() {
                write!(features, ",{:?}", x[(i, j)]).unwrap();
            }
            features.push('\n');
        }
        let mut labels = String::from("node_id,label\n");
        for (i, c) in self.classes().iter().enumerate() {
            if let Some(c) = c {
                writeln!(labels, "{i},{c}").unwrap();
            }
        }
        let mut sets = vec![None; self.n()];
        for (idx, name) in [
            (&self.train_idx, "train"),
            (&self.val_idx, "val"),
            (&self.test_idx, "test"),
        ] {
            for &i in idx {
                sets[i] = Some(name);
            }
        }
        let mut split = String::from("node_id,set\n");
        for (i, s) in sets.iter().enumerate() {
            if let Some(s) = s {
                writeln!(split, "{i},{s}").unwrap();
            }
        }
        let meta = Meta {
            name: self.name.clone(),
            n: self.n(),
            n_classes: self.labels.n_classes(),
            seed: self.provenance.seed,
        };
        let meta = serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n";
        vec![
            (EDGES_FILE, edges),
            (FEATURES_FILE, features),
            (LABELS_FILE, labels),
            (SPLIT_FILE, split),
            (META_FILE, meta),
        ]
    }

    /// Writes the five dataset files into `dir`, creating it if needed.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, body) in self.render() {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    /// Reads a dataset directory written by [`Dataset::write`] or
    /// [`ingest`].
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let meta_path = dir.join(META_FILE);
        let meta: Meta = serde_json::from_str(&read_text(&meta_path)?)?;
        let graph = load_edge_list_with(
            dir.join(EDGES_FILE),
            EdgeListOptions {
                n: Some(meta.n),
                keep_self_loops: true,
            },
        )?;
        let x = load_table(dir.join(FEATURES_FILE), meta.n)?;
        let graph = if x.ncols() > 0 {
            graph.with_features(x)?
        } else {
            graph
        };
        let classes = load_labels(dir.join(LABELS_FILE), meta.n)?;
        let sets = load_split_sets(dir.join(SPLIT_FILE), meta.n)?;
        let mut ds = Self::new(meta.name, graph, &classes, meta.n_classes, sets, meta.seed)?;
        let files: Vec<(&'static str, String)> = [
            EDGES_FILE,
            FEATURES_FILE,
            LABELS_FILE,
            SPLIT_FILE,
            META_FILE,
        ]
        .into_iter()
        .map(|name| Ok((name, read_text(&dir.join(name))?)))
        .collect::<Result<_>>()?;
        ds.provenance.hash = hash_files(&files);
        Ok(ds)
    }
}

fn hash_files(files: &[(&str, String)]) -> String {
    let mut hasher = Sha256::new();
    for (name, body) in files {
        hasher.update((name.len() as u64).to_le_bytes());
        hasher.update(name.as_bytes());
        hasher.update((body.len() as u64).to_le_bytes());
        hasher.update(body.as_bytes());
    }
    hex::encode(hasher.finalize())
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EdgeListOptions {
    /// Node count; inferred as `max id + 1` when absent.
    pub n: Option<usize>,
    pub keep_self_loops: bool,
}

/// Parses `u v [w]` rows (0-based ids). Blank lines and `#` comments are
/// skipped; duplicate edges keep their first weight; self-loops are dropped.
pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
    load_edge_list_with(path, EdgeListOptions::default())
}

pub fn load_edge_list_with(path: impl AsRef<Path>, options: EdgeListOptions) -> Result<Graph> {
    let path = path.as_ref();
    let raw = read_raw_edges(path)?;
    let mut edges = Vec::with_capacity(raw.len());
    let mut max_id = None::<usize>;
    for (line, u, v, w) in raw {
        let parse = |s: &str| {
            s.parse::<usize>().map_err(|_| {
                parse_error(
                    path,
                    line,
                    format!("node id `{s}` is not a non-negative integer"),
                )
            })
        };
        let (u, v) = (parse(&u)?, parse(&v)?);
        if let Some(n) = options.n {
            if u >= n || v >= n {
                return Err(parse_error(
                    path,
                    line,
                    format!("node id {} exceeds node count {n}", u.max(v)),
                ));
            }
        }
        max_id = Some(max_id.map_or(u.max(v), |m: usize| m.max(u).max(v)));
        edges.push((u, v, w));
    }
    let n = options.n.unwrap_or_else(|| max_id.map_or(0, |m| m + 1));
    Graph::builder(n)
        .edges(edges)
        .keep_self_loops(options.keep_self_loops)
        .build()
}

/// `(line, u, v, weight)` with string ids.
fn read_raw_edges(path: &Path) -> Result<Vec<(usize, String, String, f64)>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = i + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        let w = match fields.len() {
            2 => 1.0,
            3 => fields[2]
                .parse::<f64>()
                .ok()
                .filter(|w| *w > 0.0 && w.is_finite())
                .ok_or_else(|| {
                    parse_error(path, lineno, format!("bad edge weight `{}`", fields[2]))
                })?,
            k => {
                return Err(parse_error(
                    path,
                    lineno,
                    format!("expected `u v [w]`, found {k} fields"),
                ))
            }
        };
        out.push((lineno, fields[0].to_string(), fields[1].to_string(), w));
    }
    Ok(out)
}

/// `(line, id, values)` of one table row.
type TableRow = (usize, String, Vec<String>);

/// Header plus rows of a `node_id,...` table.
fn read_table_rows(path: &Path) -> Result<(Vec<String>, Vec<TableRow>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(file);
    let mut header = None;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        match &header {
            None => {
                let h: Vec<String> = record.iter().map(str::to_string).collect();
                if h.first().map(String::as_str) != Some("node_id") {
                    return Err(parse_error(path, line, "header must start with `node_id`"));
                }
                header = Some(h);
            }
            Some(h) => {
                if record.len() != h.len() {
                    return Err(parse_error(
                        path,
                        line,
                        format!("expected {} fields, found {}", h.len(), record.len()),
                    ));
                }
                rows.push((
                    line,
                    record[0].to_string(),
                    record.iter().skip(1).map(str::to_string).collect(),
                ));
            }
        }
    }
    Ok((header.unwrap_or_default(), rows))
}

fn parse_cells(path: &Path, header: &[String], line: usize, cells: &[String]) -> Result<Vec<f64>> {
    cells
        .iter()
        .enumerate()
        .map(|(j, cell)| {
            cell.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    parse_error(
                        path,
                        line,
                        format!(
                            "column `{}`: `{cell}` is not a finite number",
                            header[j + 1]
                        ),
                    )
                })
        })
        .collect()
}

/// Dense table from a `node_id,c0,..` CSV. Rows are ordered by node id and
/// missing nodes are zero-filled; an empty file gives `expected_rows × 0`.
pub fn load_table(path: impl AsRef<Path>, expected_rows: usize) -> Result<Mat> {
    let path = path.as_ref();
    let (header, rows) = read_table_rows(path)?;
    let cols = header.len().saturating_sub(1);
    let mut out = Mat::zeros(expected_rows, cols);
    let mut seen = vec![false; expected_rows];
    for (line, id, cells) in rows {
        let i: usize = id.parse().map_err(|_| {
            parse_error(
                path,
                line,
                format!("node id `{id}` is not a non-negative integer"),
            )
        })?;
        if i >= expected_rows {
            return Err(parse_error(
                path,
                line,
                format!("node id {i} overflows the {expected_rows} expected rows"),
            ));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(parse_error(path, line, format!("duplicate node id {i}")));
        }
        let values = parse_cells(path, &header, line, &cells)?;
        for (j, v) in values.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

/// Integer class per node from a `node_id,label` CSV.
pub fn load_labels(path: impl AsRef<Path>, n: usize) -> Result<Vec<Option<usize>>> {
    let path = path.as_ref();
    let (header, rows) = read_table_rows(path)?;
    if !rows.is_empty() && header.len() != 2 {
        return Err(parse_error(path, 1, "expected header `node_id,label`"));
    }
    let mut out = vec![None; n];
    for (line, id, cells) in rows {
        let i: usize = id
            .parse()
            .ok()
            .filter(|&i| i < n)
            .ok_or_else(|| parse_error(path, line, format!("node id `{id}` out of range")))?;
        let c: usize = cells[0].parse().map_err(|_| {
            parse_error(
                path,
                line,
                format!("label `{}` is not a class index", cells[0]),
            )
        })?;
        if out[i].replace(c).is_some() {
            return Err(parse_error(path, line, format!("duplicate node id {i}")));
        }
    }
    Ok(out)
}

fn load_split_sets(
    path: impl AsRef<Path>,
    n: usize,
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let path = path.as_ref();
    let (_, rows) = read_table_rows(path)?;
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for (line, id, cells) in rows {
        let i: usize = id
            .parse()
            .ok()
            .filter(|&i| i < n)
            .ok_or_else(|| parse_error(path, line, format!("node id `{id}` out of range")))?;
        match cells.first().map(String::as_str) {
            Some("train") => train.push(i),
            Some("val") => val.push(i),
            Some("test") => test.push(i),
            other => {
                return Err(parse_error(
                    path,
                    line,
                    format!("unknown set `{}`", other.unwrap_or("")),
                ))
            }
        }
    }
    for v in [&mut train, &mut val, &mut test] {
        v.sort_unstable();
    }
    Ok((train, val, test))
}

/// Seeded Fisher-Yates shuffle of `nodes` cut 6:2:2 into train/val/test;
/// each part is returned sorted.
pub fn ratio_split(nodes: &[usize], seed: u64) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let mut order = nodes.to_vec();
    order.shuffle(&mut rng::seeded(seed));
    let n_train = order.len() * 6 / 10;
    let n_val = order.len() * 2 / 10;
    let mut train = order[..n_train].to_vec();
    let mut val = order[n_train..n_train + n_val].to_vec();
    let mut test = order[n_train + n_val..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    (train, val, test)
}

/// Erdős–Rényi `G(n, p)`.
pub fn make_er(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "edge probability {p} outside [0, 1]"
        )));
    }
    let mut rng = rng::seeded(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges)
}

/// Two-block stochastic block model with Gaussian node features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SbmSpec {
    pub n_per_block: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    /// Per-coordinate mean offset `±signal` of the two blocks; the noise is
    /// standard normal.
    pub feature_signal: f64,
    pub seed: u64,
}

impl Default for SbmSpec {
    fn default() -> Self {
        Self {
            n_per_block: 100,
            p_in: 0.1,
            p_out: 0.01,
            feature_dim: 16,
            feature_signal: 0.15,
            seed: 0,
        }
    }
}

/// [`make_sbm_with`] with the default feature settings.
pub fn make_sbm(n_per_block: usize, p_in: f64, p_out: f64, seed: u64) -> Result<Dataset> {
    make_sbm_with(&SbmSpec {
        n_per_block,
        p_in,
        p_out,
        seed,
        ..SbmSpec::default()
    })
}

/// Block `b` holds nodes `b·n_per_block ..`; block id is the label. The
/// 6:2:2 split uses a seed derived from `spec.seed`.
pub fn make_sbm_with(spec: &SbmSpec) -> Result<Dataset> {
    for p in [spec.p_in, spec.p_out] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "edge probability {p} outside [0, 1]"
            )));
        }
    }
    let n = 2 * spec.n_per_block;
    let block = |i: usize| i / spec.n_per_block.max(1);
    let mut rng = rng::stream(spec.seed, 0);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if block(u) == block(v) {
                spec.p_in
            } else {
                spec.p_out
            };
            if rng.random_bool(p) {
                edges.push((u, v, 1.0));
            }
        }
    }
    let mut noise = rng::stream(spec.seed, 1);
    let x = Mat::from_fn(n, spec.feature_dim, |i, _| {
        let sign = if block(i) == 0 { -1.0 } else { 1.0 };
        let z: f64 = StandardNormal.sample(&mut noise);
        sign * spec.feature_signal + z
    });
    let graph = Graph::builder(n).edges(edges).features(x).build()?;
    let classes: Vec<Option<usize>> = (0..n).map(|i| Some(block(i))).collect();
    let all: Vec<usize> = (0..n).collect();
    let sets = ratio_split(&all, rng::derive_seed(spec.seed, 2));
    Dataset::new(
        format!("sbm-{}-{}-{}", spec.n_per_block, spec.p_in, spec.p_out),
        graph,
        &classes,
        2,
        sets,
        Some(spec.seed),
    )
}

/// Turns a raw directory with arbitrary string ids into a dataset.
///
/// `raw_dir` holds `edges.txt` (`a b [w]`), `labels.csv` (`node_id,label`,
/// any label strings) and optionally `features.csv`. Node ids and labels are
/// sorted lexicographically and numbered from 0; the maps are written to
/// `out_dir` as `id_map.csv` and `class_map.csv` next to the dataset files.
/// Labeled nodes are split 6:2:2 with `seed`.
pub fn ingest(raw_dir: impl AsRef<Path>, out_dir: impl AsRef<Path>, seed: u64) -> Result<Dataset> {
    let raw_dir = raw_dir.as_ref();
    let out_dir = out_dir.as_ref();
    let edges_path = raw_dir.join(EDGES_FILE);
    let labels_path = raw_dir.join(LABELS_FILE);
    let features_path = raw_dir.join(FEATURES_FILE);

    let raw_edges = read_raw_edges(&edges_path)?;
    let (label_header, label_rows) = read_table_rows(&labels_path)?;
    if !label_rows.is_empty() && label_header.len() != 2 {
        return Err(parse_error(
            &labels_path,
            1,
            "expected header `node_id,label`",
        ));
    }
    let features = if features_path.exists() {
        Some(read_table_rows(&features_path)?)
    } else {
        None
    };

    let mut ids = BTreeSet::new();
    for (_, u, v, _) in &raw_edges {
        ids.insert(u.clone());
        ids.insert(v.clone());
    }
    for (_, id, _) in &label_rows {
        ids.insert(id.clone());
    }
    if let Some((_, rows)) = &features {
        ids.extend(rows.iter().map(|r| r.1.clone()));
    }
    let id_map: BTreeMap<String, usize> =
        ids.into_iter().enumerate().map(|(i, s)| (s, i)).collect();
    let n = id_map.len();

    let class_names: BTreeSet<&str> = label_rows.iter().map(|r| r.2[0].as_str()).collect();
    let class_map: BTreeMap<&str, usize> = class_names
        .iter()
        .enumerate()
        .map(|(c, &s)| (s, c))
        .collect();
    let mut classes = vec![None; n];
    for (line, id, cells) in &label_rows {
        if classes[id_map[id]]
            .replace(class_map[cells[0].as_str()])
            .is_some()
        {
            return Err(parse_error(
                &labels_path,
                *line,
                format!("duplicate node id `{id}`"),
            ));
        }
    }

    let mut graph = Graph::builder(n)
        .edges(
            raw_edges
                .iter()
                .map(|(_, u, v, w)| (id_map[u], id_map[v], *w)),
        )
        .build()?;
    if let Some((header, rows)) = &features {
        let mut x = Mat::zeros(n, header.len().saturating_sub(1));
        let mut seen = vec![false; n];
        for (line, id, cells) in rows {
            let i = id_map[id];
            if std::mem::replace(&mut seen[i], true) {
                return Err(parse_error(
                    &features_path,
                    *line,
                    format!("duplicate node id `{id}`"),
                ));
            }
            for (j, v) in parse_cells(&features_path, header, *line, cells)?
                .into_iter()
                .enumerate()
            {
                x[(i, j)] = v;
            }
        }
        graph = graph.with_features(x)?;
    }

    let labeled: Vec<usize> = (0..n).filter(|&i| classes[i].is_some()).collect();
    let sets = ratio_split(&labeled, seed);
    let name = raw_dir.file_name().map_or_else(
        || "dataset".to_string(),
        |s| s.to_string_lossy().into_owned(),
    );
    let ds = Dataset::new(
        name,
        graph,
        &classes,
        class_map.len().max(1),
        sets,
        Some(seed),
    )?;
    ds.write(out_dir)?;

    let mut text = String::from("original_id,node_id\n");
    for (s, i) in &id_map {
        writeln!(text, "{},{i}", csv_field(s)).unwrap();
    }
    write_file(&out_dir.join(ID_MAP_FILE), &text)?;
    let mut text = String::from("label,class\n");
    for (s, c) in &class_map {
        writeln!(text, "{},{c}", csv_field(s)).unwrap();
    }
    write_file(&out_dir.join(CLASS_MAP_FILE), &text)?;
    Ok(ds)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads the id map written by [`ingest`].
pub fn read_id_map(path: impl AsRef<Path>) -> Result<BTreeMap<String, usize>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut out = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let id = record[1]
            .parse()
            .map_err(|_| parse_error(path, line, format!("bad node id `{}`", &record[1])))?;
        out.insert(record[0].to_string(), id);
    }
    Ok(out)
}

/// One line of a metrics file.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub run_id: String,
    pub method: String,
    pub alpha: Option<f64>,
    pub seed: u64,
    pub split: String,
    pub accuracy: f64,
    pub loss: Option<f64>,
}

pub const METRICS_HEADER: &str = "run_id,method,alpha,seed,split,accuracy,loss";

/// Metrics as CSV text: fixed header, LF endings, reals with six decimals,
/// empty cells for absent values.
pub fn render_metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    let real = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.6}"));
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{:.6},{}",
            csv_field(&r.run_id),
            csv_field(&r.method),
            real(r.alpha),
            r.seed,
            csv_field(&r.split),
            r.accuracy,
            real(r.loss)
        )
        .unwrap();
    }
    out
}

pub fn write_metrics_csv(path: impl AsRef<Path>, rows: &[MetricsRow]) -> Result<()> {
    write_file(path.as_ref(), &render_metrics_csv(rows))
}

pub fn read_metrics_csv(path: impl AsRef<Path>) -> Result<Vec<MetricsRow>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != METRICS_HEADER {
        return Err(parse_error(
            path,
            1,
            format!("expected header `{METRICS_HEADER}`"),
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let real = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|_| parse_error(path, line, format!("bad number `{s}`")))
            }
        };
        rows.push(MetricsRow {
            run_id: record[0].to_string(),
            method: record[1].to_string(),
            alpha: real(&record[2])?,
            seed: record[3]
                .parse()
                .map_err(|_| parse_error(path, line, "bad seed"))?,
            split: record[4].to_string(),
            accuracy: real(&record[5])?
                .ok_or_else(|| parse_error(path, line, "missing accuracy"))?,
            loss: real(&record[6])?,
        });
    }
    Ok(rows)
}

/// Path of the sidecar that records the resolved config of a metrics file.
pub fn sidecar_path(metrics: impl AsRef<Path>) -> PathBuf {
    let mut p = metrics.as_ref().as_os_str().to_owned();
    p.push(".config.json");
    PathBuf::from(p)
}
