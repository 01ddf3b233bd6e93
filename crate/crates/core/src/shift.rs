//! Graph shifts: symmetric matrices supported on a graph's edges plus the
//! diagonal, stored as neighbor-aligned sparse rows so one matvec touches
//! exactly the one-hop neighborhood of each vertex.

use std::sync::Arc;

use crate::dense::DenseMatrix;
use crate::error::{CoreError, Result};
use crate::graph::Graph;

/// What a shift was built as; drives the spectral-cube convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftKind {
    Adjacency,
    Laplacian,
    /// Symmetrically normalized Laplacian; its spectrum lives in `[0, 2]`
    /// and the spectral cube is pinned to exactly that interval.
    NormalizedLaplacian,
    Custom,
}

/// Sparse symmetric matrix on a graph. Off-diagonal values are aligned with
/// the graph's sorted neighbor lists; each symmetric pair is stored twice
/// with the identical float, so `S == S^T` holds exactly.
#[derive(Debug, Clone)]
pub struct Shift {
    graph: Arc<Graph>,
    kind: ShiftKind,
    diag: Vec<f64>,
    /// `off[v][k]` is the value `S(v, neighbors(v)[k])`.
    off: Vec<Vec<f64>>,
}

impl Shift {
    /// Builds a shift from a diagonal and per-edge values.
    /// `edge_values` must assign one value per graph edge, in the order of
    /// `graph.edges()`.
    pub fn from_parts(
        graph: Arc<Graph>,
        kind: ShiftKind,
        diag: Vec<f64>,
        edge_values: &[f64],
    ) -> Result<Self> {
        let n = graph.vertex_count();
        if diag.len() != n {
            return Err(CoreError::DimensionMismatch { expected: n, got: diag.len() });
        }
        if edge_values.len() != graph.edge_count() {
            return Err(CoreError::DimensionMismatch {
                expected: graph.edge_count(),
                got: edge_values.len(),
            });
        }
        let mut off: Vec<Vec<f64>> = (0..n).map(|v| vec![0.0; graph.degree(v)]).collect();
        for (&(a, b), &val) in graph.edges().iter().zip(edge_values.iter()) {
            let (a, b) = (a as usize, b as usize);
            let ka = graph.neighbors(a).binary_search(&(b as u32)).expect("edge consistency");
            let kb = graph.neighbors(b).binary_search(&(a as u32)).expect("edge consistency");
            off[a][ka] = val;
            off[b][kb] = val;
        }
        Ok(Self { graph, kind, diag, off })
    }

    /// Builds a shift from `(i, j, value)` triplets. Each unordered pair may
    /// appear once (applied symmetrically); `i == j` sets the diagonal.
    /// Entries off the edge set are rejected.
    pub fn from_triplets(
        graph: Arc<Graph>,
        triplets: impl IntoIterator<Item = (u32, u32, f64)>,
    ) -> Result<Self> {
        let n = graph.vertex_count();
        let mut diag = vec![0.0; n];
        let mut edge_values = vec![0.0; graph.edge_count()];
        let mut edge_index = std::collections::HashMap::new();
        for (idx, &(a, b)) in graph.edges().iter().enumerate() {
            edge_index.insert((a, b), idx);
        }
        for (a, b, v) in triplets {
            if a as usize >= n || b as usize >= n {
                return Err(CoreError::InvalidShift(format!("entry ({a},{b}) out of range")));
            }
            if a == b {
                diag[a as usize] = v;
            } else {
                let key = (a.min(b), a.max(b));
                let idx = edge_index.get(&key).ok_or_else(|| {
                    CoreError::InvalidShift(format!("entry ({a},{b}) is not a graph edge"))
                })?;
                edge_values[*idx] = v;
            }
        }
        Self::from_parts(graph, ShiftKind::Custom, diag, &edge_values)
    }

    /// Adjacency matrix.
    pub fn adjacency(graph: Arc<Graph>) -> Self {
        let edge_values = vec![1.0; graph.edge_count()];
        let diag = vec![0.0; graph.vertex_count()];
        Self::from_parts(graph, ShiftKind::Adjacency, diag, &edge_values).expect("consistent")
    }

    /// Adjacency of a subset of circulant generators, supported on the edges
    /// `(i, i±q mod n)` of the host circulant graph. Lets several commuting
    /// shifts share one graph.
    pub fn circulant_generator_adjacency(graph: Arc<Graph>, q_subset: &[usize]) -> Result<Self> {
        let n = graph.vertex_count();
        let mut triplets = Vec::new();
        for i in 0..n {
            for &q in q_subset {
                let j = (i + q) % n;
                if !graph.has_edge(i as u32, j as u32) {
                    return Err(CoreError::InvalidShift(format!(
                        "generator {q} edge ({i},{j}) missing from the host graph"
                    )));
                }
                let (a, b) = (i.min(j) as u32, i.max(j) as u32);
                triplets.push((a, b, 1.0));
            }
        }
        Self::from_triplets(graph, triplets)
    }

    /// Degree matrix (diagonal).
    pub fn degree_matrix(graph: Arc<Graph>) -> Self {
        let n = graph.vertex_count();
        let diag: Vec<f64> = (0..n).map(|v| graph.degree(v) as f64).collect();
        let edge_values = vec![0.0; graph.edge_count()];
        Self::from_parts(graph, ShiftKind::Custom, diag, &edge_values).expect("consistent")
    }

    /// Combinatorial Laplacian `D - A`.
    pub fn laplacian(graph: Arc<Graph>) -> Self {
        let n = graph.vertex_count();
        let diag: Vec<f64> = (0..n).map(|v| graph.degree(v) as f64).collect();
        let edge_values = vec![-1.0; graph.edge_count()];
        Self::from_parts(graph, ShiftKind::Laplacian, diag, &edge_values).expect("consistent")
    }

    /// Symmetrically normalized Laplacian `D^{-1/2} (D - A) D^{-1/2}`:
    /// unit diagonal, `-1/sqrt(deg(i) deg(j))` on edges.
    /// Rejects graphs with isolated vertices.
    pub fn normalized_laplacian(graph: Arc<Graph>) -> Result<Self> {
        let n = graph.vertex_count();
        for v in 0..n {
            if graph.degree(v) == 0 {
                return Err(CoreError::InvalidShift(format!(
                    "vertex {v} is isolated; normalized Laplacian undefined"
                )));
            }
        }
        let diag = vec![1.0; n];
        let edge_values: Vec<f64> = graph
            .edges()
            .iter()
            .map(|&(a, b)| {
                -1.0 / ((graph.degree(a as usize) as f64 * graph.degree(b as usize) as f64).sqrt())
            })
            .collect();
        Self::from_parts(graph, ShiftKind::NormalizedLaplacian, diag, &edge_values)
    }

    /// Identity shift (diagonal ones). Mostly useful in tests and fixtures.
    pub fn identity(graph: Arc<Graph>) -> Self {
        let n = graph.vertex_count();
        let edge_values = vec![0.0; graph.edge_count()];
        Self::from_parts(graph, ShiftKind::Custom, vec![1.0; n], &edge_values).expect("consistent")
    }

    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    pub fn kind(&self) -> ShiftKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn diagonal(&self, v: usize) -> f64 {
        self.diag[v]
    }

    /// Row of off-diagonal values aligned with `graph.neighbors(v)`.
    pub fn off_diagonal_row(&self, v: usize) -> &[f64] {
        &self.off[v]
    }

    /// `y = S x`, accumulating neighbor terms in ascending vertex order.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(y.len(), n);
        for v in 0..n {
            let mut acc = self.diag[v] * x[v];
            for (k, &j) in self.graph.neighbors(v).iter().enumerate() {
                acc += self.off[v][k] * x[j as usize];
            }
            y[v] = acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.dim();
        let mut m = DenseMatrix::zeros(n, n);
        for v in 0..n {
            m.set(v, v, self.diag[v]);
            for (k, &j) in self.graph.neighbors(v).iter().enumerate() {
                m.set(v, j as usize, self.off[v][k]);
            }
        }
        m
    }

    /// Checks that stored values are supported on edges plus the diagonal and
    /// symmetric; holds by construction, exposed for scanning in tests.
    pub fn support_is_valid(&self) -> bool {
        let n = self.dim();
        for v in 0..n {
            if self.off[v].len() != self.graph.degree(v) {
                return false;
            }
            for (k, &j) in self.graph.neighbors(v).iter().enumerate() {
                let back = self.graph.neighbors(j as usize).binary_search(&(v as u32));
                let kb = match back {
                    Ok(kb) => kb,
                    Err(_) => return false,
                };
                if self.off[v][k].to_bits() != self.off[j as usize][kb].to_bits() {
                    return false;
                }
            }
        }
        true
    }
}

/// Maximum pairwise commutator Frobenius norm `max ||S_k S_l - S_l S_k||_F`.
/// Zero for a single shift. Errors when the shifts live on different graphs.
pub fn check_commuting(shifts: &[&Shift]) -> Result<f64> {
    if shifts.is_empty() {
        return Err(CoreError::InvalidParameter("no shifts given".into()));
    }
    let g0 = shifts[0].graph();
    for s in shifts.iter().skip(1) {
        if !Arc::ptr_eq(s.graph(), g0) {
            return Err(CoreError::GraphMismatch);
        }
    }
    let mut worst = 0.0f64;
    for a in 0..shifts.len() {
        for b in a + 1..shifts.len() {
            let sa = shifts[a].to_dense();
            let sb = shifts[b].to_dense();
            let comm = sa.matmul(&sb).sub(&sb.matmul(&sa));
            worst = worst.max(comm.frobenius_norm());
        }
    }
    Ok(worst)
}
