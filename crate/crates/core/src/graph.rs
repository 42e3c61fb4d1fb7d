//! Spatial neighborhood structure: symmetric adjacency matrices built from
//! node-pair lists, and their row-standardized weight matrices.

use nalgebra::DMatrix;
use rand::Rng;

use crate::{Error, Result};

/// Symmetric 0/1 adjacency matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix {
    m: DMatrix<f64>,
}

/// Row-stochastic spatial weight matrix: zero diagonal, entries in `[0, 1]`,
/// every row summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    m: DMatrix<f64>,
}

/// Build an adjacency matrix over `n` nodes from a flat list of 1-based node
/// indices read as consecutive pairs: `[a, b, c, d]` links a-b and c-d.
///
/// Self-pairs are dropped and repeated pairs are idempotent, so the result is
/// always a simple undirected graph.
pub fn build_adjacency(nodes: &[usize], n: usize) -> Result<AdjacencyMatrix> {
    if n == 0 {
        return Err(Error::invalid("adjacency matrix needs at least one node"));
    }
    if nodes.len() % 2 != 0 {
        return Err(Error::invalid(format!(
            "node list has odd length {}; indices pair off two at a time",
            nodes.len()
        )));
    }
    let mut m = DMatrix::zeros(n, n);
    for pair in nodes.chunks_exact(2) {
        let (a, b) = (pair[0], pair[1]);
        for &idx in &[a, b] {
            if idx < 1 || idx > n {
                return Err(Error::invalid(format!(
                    "node index {idx} outside 1..={n}"
                )));
            }
        }
        if a == b {
            continue;
        }
        m[(a - 1, b - 1)] = 1.0;
        m[(b - 1, a - 1)] = 1.0;
    }
    Ok(AdjacencyMatrix { m })
}

/// Draw a flat node list of `len` indices uniformly from `1..=n` with
/// replacement, suitable for [`build_adjacency`].
pub fn random_node_list(n: usize, len: usize, rng: &mut impl Rng) -> Vec<usize> {
    (0..len).map(|_| rng.random_range(1..=n)).collect()
}

/// Divide each adjacency row by its number of neighbors.
///
/// Fails if any node has no neighbors, since its row cannot be standardized;
/// the error names the isolated nodes by 1-based index.
pub fn row_standardize(adj: &AdjacencyMatrix) -> Result<WeightMatrix> {
    let n = adj.n();
    let mut m = adj.m.clone();
    let mut isolated = Vec::new();
    for i in 0..n {
        let degree: f64 = m.row(i).sum();
        if degree == 0.0 {
            isolated.push(i + 1);
            continue;
        }
        for j in 0..n {
            m[(i, j)] /= degree;
        }
    }
    if !isolated.is_empty() {
        return Err(Error::invalid(format!(
            "isolated node(s) {isolated:?} have no neighbors; cannot row-standardize"
        )));
    }
    Ok(WeightMatrix { m })
}

impl AdjacencyMatrix {
    /// Validate an existing 0/1 matrix: square, symmetric, zero diagonal.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::invalid(format!(
                "adjacency matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != 0.0 && v != 1.0 {
                    return Err(Error::invalid(format!(
                        "adjacency entry ({}, {}) is {v}, expected 0 or 1",
                        i + 1,
                        j + 1
                    )));
                }
                if v != m[(j, i)] {
                    return Err(Error::invalid(format!(
                        "adjacency matrix is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
            if m[(i, i)] != 0.0 {
                return Err(Error::invalid(format!(
                    "adjacency diagonal entry {} is nonzero",
                    i + 1
                )));
            }
        }
        Ok(AdjacencyMatrix { m })
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// Undirected edges as 1-based `(source, target)` pairs with
    /// `source < target`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.m[(i, j)] != 0.0 {
                    out.push((i + 1, j + 1));
                }
            }
        }
        out
    }

    /// Number of neighbors of the 0-based node `i`.
    pub fn degree(&self, i: usize) -> usize {
        self.m.row(i).iter().filter(|v| **v != 0.0).count()
    }
}

impl WeightMatrix {
    /// Validate an existing weight matrix: square, zero diagonal, entries in
    /// `[0, 1]`, rows summing to one.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::invalid(format!(
                "weight matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        for i in 0..m.nrows() {
            if m[(i, i)] != 0.0 {
                return Err(Error::invalid(format!(
                    "weight matrix diagonal entry {} is nonzero",
                    i + 1
                )));
            }
            let mut row_sum = 0.0;
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                    return Err(Error::invalid(format!(
                        "weight entry ({}, {}) is {v}, expected a value in [0, 1]",
                        i + 1,
                        j + 1
                    )));
                }
                row_sum += v;
            }
            if (row_sum - 1.0).abs() > 1e-8 {
                return Err(Error::invalid(format!(
                    "weight matrix row {} sums to {row_sum}, expected 1",
                    i + 1
                )));
            }
        }
        Ok(WeightMatrix { m })
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }
}
