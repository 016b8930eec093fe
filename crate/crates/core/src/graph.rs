//! Sparse graph representation and the standard graph operators.
//!
//! A [`Graph`] stores an undirected, deduplicated edge list and caches its
//! adjacency matrix `A` and the symmetric normalization
//! `S = D^{-1/2} A D^{-1/2}` as row-compressed [`SparseMatrix`] values.
//! Isolated nodes are allowed; their rows and columns of `S` are zero.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::Mat;

/// Row-compressed real matrix.
///
/// Column indices are strictly increasing inside each row and no explicit
/// zeros are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicate
    /// coordinates are summed and entries that end up zero are dropped.
    pub fn from_triplets<I>(n_rows: usize, n_cols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n_rows];
        for (r, c, v) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::InvalidArgument(format!(
                    "triplet ({r}, {c}) outside a {n_rows}x{n_cols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite value at ({r}, {c})"
                )));
            }
            *rows[r].entry(c).or_insert(0.0) += v;
        }
        let mut offsets = Vec::with_capacity(n_rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for row in rows {
            for (c, v) in row {
                if v != 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            offsets.push(indices.len());
        }
        Ok(Self {
            n_rows,
            n_cols,
            offsets,
            indices,
            values,
        })
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            offsets: vec![0; n_rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            offsets: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    /// Number of stored (non-zero) values.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stored entries of row `i` in ascending column order.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.offsets[i]..self.offsets[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.offsets[i]..self.offsets[i + 1];
        match self.indices[span.clone()].binary_search(&j) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let triplets = (0..self.n_rows).flat_map(|i| self.row(i).map(move |(j, v)| (j, i, v)));
        // Cannot fail: coordinates come from a valid matrix.
        Self::from_triplets(self.n_cols, self.n_rows, triplets).expect("valid transpose")
    }

    pub fn to_dense(&self) -> Mat {
        let mut out = Mat::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                out[(i, j)] = v;
            }
        }
        out
    }

    /// Largest absolute difference between `self` and its transpose.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Sparse-dense product `self * b`.
    ///
    /// Each output row is accumulated in ascending column order, so results
    /// do not depend on how rows are scheduled.
    pub fn spmm(&self, b: &Mat) -> Result<Mat> {
        if b.nrows() != self.n_cols {
            return Err(Error::dims(
                "spmm",
                format!("{} rows", self.n_cols),
                format!("{} rows", b.nrows()),
            ));
        }
        let k = b.ncols();
        let mut out = Mat::zeros(self.n_rows, k);
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                for col in 0..k {
                    out[(i, col)] += v * b[(j, col)];
                }
            }
        }
        Ok(out)
    }
}

/// Free-function form of [`SparseMatrix::spmm`].
pub fn spmm(a: &SparseMatrix, b: &Mat) -> Result<Mat> {
    a.spmm(b)
}

/// Undirected graph with optional node features.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    features: Option<Mat>,
    adjacency: SparseMatrix,
    normalized: SparseMatrix,
}

impl Graph {
    /// Builds an unweighted graph. Edges are deduplicated in either
    /// orientation; self-loops are dropped.
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Self::builder(n)
            .edges(edges.into_iter().map(|(u, v)| (u, v, 1.0)))
            .build()
    }

    pub fn builder(n: usize) -> GraphBuilder {
        GraphBuilder {
            n,
            edges: Vec::new(),
            keep_self_loops: false,
            add_self_loops: false,
            features: None,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored edges with `u <= v`, sorted.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn features(&self) -> Option<&Mat> {
        self.features.as_ref()
    }

    /// Features, or an `n x 0` matrix when the graph carries none.
    pub fn features_or_empty(&self) -> Mat {
        self.features
            .clone()
            .unwrap_or_else(|| Mat::zeros(self.n, 0))
    }

    pub fn with_features(mut self, x: Mat) -> Result<Self> {
        if x.nrows() != self.n {
            return Err(Error::dims(
                "graph features",
                format!("{} rows", self.n),
                format!("{} rows", x.nrows()),
            ));
        }
        self.features = Some(x);
        Ok(self)
    }

    pub fn adjacency(&self) -> &SparseMatrix {
        &self.adjacency
    }

    /// Cached `S = D^{-1/2} A D^{-1/2}`.
    pub fn normalized_adjacency(&self) -> &SparseMatrix {
        &self.normalized
    }

    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.adjacency.row(i).map(|(_, v)| v).sum())
            .collect()
    }
}

pub struct GraphBuilder {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    keep_self_loops: bool,
    add_self_loops: bool,
    features: Option<Mat>,
}

impl GraphBuilder {
    pub fn edges<I>(mut self, edges: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        self.edges.extend(edges);
        self
    }

    /// Keep `(u, u)` rows from the input instead of dropping them.
    pub fn keep_self_loops(mut self, keep: bool) -> Self {
        self.keep_self_loops = keep;
        self
    }

    /// Add a unit self-loop to every node (`A + I`).
    pub fn add_self_loops(mut self, add: bool) -> Self {
        self.add_self_loops = add;
        self
    }

    pub fn features(mut self, x: Mat) -> Self {
        self.features = Some(x);
        self
    }

    pub fn build(self) -> Result<Graph> {
        let n = self.n;
        // First occurrence of a pair wins.
        let mut dedup: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (u, v, w) in self.edges {
            if u >= n || v >= n {
                return Err(Error::InvalidArgument(format!(
                    "edge ({u}, {v}) references a node >= {n}"
                )));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "edge ({u}, {v}) has non-positive weight {w}"
                )));
            }
            if u == v && !self.keep_self_loops {
                continue;
            }
            dedup.entry((u.min(v), u.max(v))).or_insert(w);
        }
        if self.add_self_loops {
            for u in 0..n {
                dedup.entry((u, u)).or_insert(1.0);
            }
        }
        let edges: Vec<(usize, usize, f64)> =
            dedup.into_iter().map(|((u, v), w)| (u, v, w)).collect();

        let adjacency = SparseMatrix::from_triplets(
            n,
            n,
            edges.iter().flat_map(|&(u, v, w)| {
                let mirror = (u != v).then_some((v, u, w));
                std::iter::once((u, v, w)).chain(mirror)
            }),
        )?;
        let graph = Graph {
            n,
            edges,
            features: None,
            normalized: normalize(&adjacency),
            adjacency,
        };
        match self.features {
            Some(x) => graph.with_features(x),
            None => Ok(graph),
        }
    }
}

fn normalize(adjacency: &SparseMatrix) -> SparseMatrix {
    let n = adjacency.n_rows();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let d: f64 = adjacency.row(i).map(|(_, v)| v).sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let triplets = (0..n).flat_map(|i| {
        let inv_sqrt = &inv_sqrt;
        adjacency
            .row(i)
            .map(move |(j, v)| (i, j, inv_sqrt[i] * v * inv_sqrt[j]))
    });
    SparseMatrix::from_triplets(n, n, triplets).expect("normalization keeps coordinates")
}

/// `S = D^{-1/2} A D^{-1/2}`; degree-zero nodes get zero rows and columns.
pub fn build_normalized_adjacency(g: &Graph) -> SparseMatrix {
    g.normalized.clone()
}

/// `L = I - S`.
pub fn build_laplacian(s: &SparseMatrix) -> Result<SparseMatrix> {
    if !s.is_square() {
        return Err(Error::dims(
            "laplacian",
            "square matrix",
            format!("{}x{}", s.n_rows(), s.n_cols()),
        ));
    }
    let n = s.n_rows();
    let identity = (0..n).map(|i| (i, i, 1.0));
    let negated = (0..n).flat_map(|i| s.row(i).map(move |(j, v)| (i, j, -v)));
    SparseMatrix::from_triplets(n, n, identity.chain(negated))
}
