//! Weighted digraphs, their Laplacians, named graph families and output
//! matrices.
//!
//! Node indices are 0-based everywhere in this API; the JSON formats used by
//! the CLI are 1-based and converted at the I/O boundary.

use ndarray::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for the zero row-sum invariant of a Laplacian.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Tolerance on column sums when extracting the Hermitian part.
pub const WEIGHT_BALANCE_TOL: f64 = 1e-10;

/// A directed graph on `n` nodes with strictly positive edge weights.
///
/// An edge `(i, j, b)` means node `i` measures node `j` with weight `b`;
/// arrows point from follower to followed.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDigraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl WeightedDigraph {
    /// Build a digraph from 0-based `(i, j, weight)` triples and validate
    /// the structural invariants: positive weights, no self-loops, no
    /// duplicate pairs, indices in range.
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("node count must be positive".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for &(i, j, w) in &edges {
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) out of range for n = {n}"
                )));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop at node {i}")));
            }
            if w <= 0.0 || !w.is_finite() {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) has non-positive weight {w}"
                )));
            }
            if !seen.insert((i, j)) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({i}, {j})")));
            }
        }
        Ok(Self { n, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Parse the JSON graph schema `{"n": int, "edges": [[i, j, w], ...]}`
    /// with 1-based node indices.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: GraphJson =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("graph json: {e}")))?;
        let mut edges = Vec::with_capacity(raw.edges.len());
        for e in &raw.edges {
            let (i, j, w) = (e.0, e.1, e.2);
            if i < 1 || j < 1 {
                return Err(Error::InvalidGraph(format!(
                    "json edge ({i}, {j}) uses 1-based indices; 0 is out of range"
                )));
            }
            edges.push((i as usize - 1, j as usize - 1, w));
        }
        if raw.n < 1 {
            return Err(Error::InvalidGraph("json node count must be >= 1".into()));
        }
        Self::new(raw.n as usize, edges)
    }

    /// Serialize to the 1-based JSON schema.
    pub fn to_json(&self) -> String {
        let raw = GraphJson {
            n: self.n as i64,
            edges: self
                .edges
                .iter()
                .map(|&(i, j, w)| (i as i64 + 1, j as i64 + 1, w))
                .collect(),
        };
        serde_json::to_string(&raw).expect("graph json serialization cannot fail")
    }
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: i64,
    edges: Vec<(i64, i64, f64)>,
}

/// A weighted digraph Laplacian: zero row sums, nonpositive off-diagonal
/// entries, nonnegative diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    entries: Array2<f64>,
}

impl Laplacian {
    /// Wrap a dense matrix, validating the Laplacian invariants.
    pub fn from_matrix(entries: Array2<f64>) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c {
            return Err(Error::ShapeMismatch(format!("{r}x{c} matrix is not square")));
        }
        for i in 0..r {
            let mut sum = 0.0;
            let mut scale: f64 = 1.0;
            for j in 0..c {
                let v = entries[[i, j]];
                sum += v;
                scale = scale.max(v.abs());
                if i == j && v < -ROW_SUM_TOL {
                    return Err(Error::InvalidGraph(format!(
                        "negative diagonal entry {v} at row {i}"
                    )));
                }
                if i != j && v > ROW_SUM_TOL {
                    return Err(Error::InvalidGraph(format!(
                        "positive off-diagonal entry {v} at ({i}, {j})"
                    )));
                }
            }
            if sum.abs() > ROW_SUM_TOL * scale.max(1.0) {
                return Err(Error::InvalidGraph(format!(
                    "row {i} sums to {sum}, not zero"
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// Recover the digraph whose Laplacian this is (edges from strictly
    /// negative off-diagonal entries).
    pub fn to_digraph(&self) -> WeightedDigraph {
        let n = self.n();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.entries[[i, j]] < 0.0 {
                    edges.push((i, j, -self.entries[[i, j]]));
                }
            }
        }
        WeightedDigraph { n, edges }
    }

    /// Frobenius norm of the Laplacian matrix.
    pub fn norm_fro(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `true` iff `‖LLᵀ − LᵀL‖_F ≤ tol · ‖L‖_F²`.
    pub fn is_normal(&self, tol: f64) -> bool {
        let l = &self.entries;
        let lt = l.t();
        let comm = l.dot(&lt) - lt.dot(l);
        let comm_norm = comm.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = self.norm_fro();
        comm_norm <= tol * scale * scale
    }

    /// Hermitian part `L′ = (L + Lᵀ)/2` of a weight-balanced Laplacian.
    ///
    /// Requires zero column sums; for a non-balanced graph the symmetrized
    /// matrix would not be a Laplacian, so that case is an error.
    pub fn hermitian_part(&self) -> Result<Laplacian> {
        let n = self.n();
        for j in 0..n {
            let col_sum: f64 = self.entries.column(j).sum();
            if col_sum.abs() > WEIGHT_BALANCE_TOL {
                return Err(Error::NotWeightBalanced(format!(
                    "column {j} sums to {col_sum}"
                )));
            }
        }
        let sym = (&self.entries + &self.entries.t()) * 0.5;
        Laplacian::from_matrix(sym)
    }
}

/// `L` from the graph: `[L]_ii = Σ_j b_ij`, `[L]_ij = −b_ij`.
pub fn build_laplacian(g: &WeightedDigraph) -> Result<Laplacian> {
    let n = g.n();
    let mut m = Array2::<f64>::zeros((n, n));
    for &(i, j, w) in g.edges() {
        m[[i, j]] = -w;
        m[[i, i]] += w;
    }
    Laplacian::from_matrix(m)
}

/// Circulant Laplacian of the ω-nearest-neighbor cyclic digraph: each node
/// measures its ω successors with uniform weight `d/ω`, so every node has
/// out-degree `d`.
pub fn cyclic_laplacian(n: usize, d: f64, omega: usize) -> Result<Laplacian> {
    if n < 2 {
        return Err(Error::BadSize(format!("cycle needs n >= 2, got {n}")));
    }
    if omega < 1 || omega > n - 1 {
        return Err(Error::BadOmega(format!(
            "omega must be in 1..={}, got {omega}",
            n - 1
        )));
    }
    if d <= 0.0 || d.is_nan() {
        return Err(Error::InvalidGraph(format!("out-degree d must be positive, got {d}")));
    }
    let mut m = Array2::<f64>::zeros((n, n));
    let w = d / omega as f64;
    for i in 0..n {
        m[[i, i]] = d;
        for k in 1..=omega {
            m[[i, (i + k) % n]] = -w;
        }
    }
    Laplacian::from_matrix(m)
}

/// All-to-one (imploding star) Laplacian `(n/(n−1)) [[I, −1],[0ᵀ, 0]]`,
/// normalized so the total out-degree is `n`.
pub fn imploding_star_laplacian(n: usize) -> Result<Laplacian> {
    if n < 2 {
        return Err(Error::BadSize(format!("star needs n >= 2, got {n}")));
    }
    let c = n as f64 / (n as f64 - 1.0);
    let mut m = Array2::<f64>::zeros((n, n));
    for i in 0..n - 1 {
        m[[i, i]] = c;
        m[[i, n - 1]] = -c;
    }
    Laplacian::from_matrix(m)
}

/// Directed path Laplacian: node 0 is free, node i measures node i−1 with
/// unit weight. Canonical defective case: eigenvalue 1 carries a single
/// Jordan block of size n−1.
pub fn directed_path_laplacian(n: usize) -> Result<Laplacian> {
    if n < 2 {
        return Err(Error::BadSize(format!("path needs n >= 2, got {n}")));
    }
    let mut m = Array2::<f64>::zeros((n, n));
    for i in 1..n {
        m[[i, i]] = 1.0;
        m[[i, i - 1]] = -1.0;
    }
    Laplacian::from_matrix(m)
}

/// Uniform complete-graph Laplacian with edge weight `1/(n−1)`, i.e. the
/// ω = n−1 cyclic digraph.
pub fn complete_laplacian(n: usize) -> Result<Laplacian> {
    if n < 2 {
        return Err(Error::BadSize(format!("complete graph needs n >= 2, got {n}")));
    }
    cyclic_laplacian(n, 1.0, n - 1)
}

/// `true` iff some node is reachable by a directed path from every node.
pub fn has_globally_reachable_node(g: &WeightedDigraph) -> bool {
    let n = g.n();
    if n == 1 {
        return true;
    }
    // reversed adjacency: r reaches i in the reversed graph iff i reaches r
    let mut radj = vec![Vec::new(); n];
    for &(i, j, _) in g.edges() {
        radj[j].push(i);
    }
    let mut visited = vec![false; n];
    let mut stack = Vec::with_capacity(n);
    for r in 0..n {
        visited.iter_mut().for_each(|v| *v = false);
        stack.clear();
        stack.push(r);
        visited[r] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &radj[u] {
                if !visited[v] {
                    visited[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        if count == n {
            return true;
        }
    }
    false
}

/// Deviation-from-average output `C = I − (1/n) 11ᵀ`.
pub fn deviation_from_average_output(n: usize) -> Result<OutputMatrix> {
    if n < 2 {
        return Err(Error::BadSize(format!("output needs n >= 2, got {n}")));
    }
    let mut m = Array2::<f64>::from_elem((n, n), -1.0 / n as f64);
    for i in 0..n {
        m[[i, i]] += 1.0;
    }
    Ok(OutputMatrix { entries: m })
}

/// A q×n performance output matrix. Assumption `C·1 = 0` is *not* enforced
/// at construction; stability checks reject violating matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputMatrix {
    entries: Array2<f64>,
}

impl OutputMatrix {
    pub fn from_matrix(entries: Array2<f64>) -> Self {
        Self { entries }
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.entries.ncols()
    }

    /// Max-norm of `C·1`; zero (to 1e−12) under Assumption 2.
    pub fn ones_residual(&self) -> f64 {
        self.entries
            .rows()
            .into_iter()
            .map(|r| r.sum().abs())
            .fold(0.0, f64::max)
    }

    /// `true` iff `C·1 = 0` to 1e−12 absolute.
    pub fn annihilates_consensus(&self) -> bool {
        self.ones_residual() <= 1e-12
    }

    /// Parse a row-major JSON matrix `[[..], ..]`.
    pub fn from_json(text: &str) -> Result<Self> {
        let rows: Vec<Vec<f64>> =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("output matrix json: {e}")))?;
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::ShapeMismatch("output matrix must be non-empty".into()));
        }
        let q = rows.len();
        let n = rows[0].len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::ShapeMismatch("ragged output matrix rows".into()));
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let entries = Array2::from_shape_vec((q, n), flat)
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        Ok(Self { entries })
    }
}

/// Family shorthand accepted by the CLI: `cycle:n,d,omega`, `star:n`,
/// `path:n`, `complete:n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyHint {
    Cycle { n: usize, d: f64, omega: usize },
    Star { n: usize },
    Path { n: usize },
}

/// Parse a family shorthand into its Laplacian and decomposition hint.
pub fn parse_family(spec: &str) -> Result<(Laplacian, FamilyHint)> {
    let (name, args) = spec
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("family shorthand needs a ':', got {spec:?}")))?;
    let nums: Vec<&str> = args.split(',').collect();
    let parse_n = |s: &str| -> Result<usize> {
        s.trim()
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad integer {s:?} in family {spec:?}")))
    };
    match name {
        "cycle" => {
            if nums.len() != 3 {
                return Err(Error::Parse(format!(
                    "cycle shorthand is cycle:n,d,omega; got {spec:?}"
                )));
            }
            let n = parse_n(nums[0])?;
            let d: f64 = nums[1]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad out-degree {:?}", nums[1])))?;
            let omega = parse_n(nums[2])?;
            Ok((cyclic_laplacian(n, d, omega)?, FamilyHint::Cycle { n, d, omega }))
        }
        "star" => {
            let n = parse_n(args)?;
            Ok((imploding_star_laplacian(n)?, FamilyHint::Star { n }))
        }
        "path" => {
            let n = parse_n(args)?;
            Ok((directed_path_laplacian(n)?, FamilyHint::Path { n }))
        }
        "complete" => {
            let n = parse_n(args)?;
            Ok((
                complete_laplacian(n)?,
                FamilyHint::Cycle { n, d: 1.0, omega: n - 1 },
            ))
        }
        other => Err(Error::Parse(format!("unknown graph family {other:?}"))),
    }
}
