//! Simple undirected graphs and the two generators used by the experiments.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{CoreError, Result};

/// Simple undirected graph: no self-loops, no duplicate edges.
///
/// Neighbor lists are kept sorted ascending; this fixed order is what both
/// the sparse matvec and the message-passing simulator accumulate in, so the
/// two paths sum neighbor contributions identically.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(u32, u32)>,
    neighbors: Vec<Vec<u32>>,
}

impl Graph {
    /// Builds a graph from an edge list; pairs are normalized to `i < j`.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let mut norm: Vec<(u32, u32)> = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(CoreError::InvalidGraph(format!("self-loop at vertex {a}")));
            }
            if a as usize >= n || b as usize >= n {
                return Err(CoreError::InvalidGraph(format!(
                    "edge ({a},{b}) out of range for n={n}"
                )));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        let before = norm.len();
        norm.dedup();
        if norm.len() != before {
            return Err(CoreError::InvalidGraph("duplicate edge".into()));
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in &norm {
            neighbors[a as usize].push(b);
            neighbors[b as usize].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Self { n, edges: norm, neighbors })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    pub fn min_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).min().unwrap_or(0)
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.neighbors[a as usize].binary_search(&b).is_ok()
    }

    /// Writes the plain-text edge list: first line `n=<count>`, then one
    /// `i j` pair per line with `i < j`.
    pub fn write_edge_list(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "n={}", self.n)?;
        for &(a, b) in &self.edges {
            writeln!(w, "{a} {b}")?;
        }
        Ok(())
    }

    pub fn save_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        self.write_edge_list(&mut f)
    }

    /// Parses the edge-list format produced by [`Graph::write_edge_list`].
    pub fn read_edge_list(r: impl std::io::Read) -> Result<Self> {
        let reader = BufReader::new(r);
        let mut n: Option<usize> = None;
        let mut edges = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            if n.is_none() {
                let rest = t.strip_prefix("n=").ok_or(CoreError::Parse {
                    line: lineno,
                    msg: "expected header `n=<count>`".into(),
                })?;
                n = Some(rest.trim().parse().map_err(|_| CoreError::Parse {
                    line: lineno,
                    msg: format!("invalid vertex count `{rest}`"),
                })?);
                continue;
            }
            let mut it = t.split_whitespace();
            let a: u32 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or(CoreError::Parse { line: lineno, msg: "expected `i j`".into() })?;
            let b: u32 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or(CoreError::Parse { line: lineno, msg: "expected `i j`".into() })?;
            if it.next().is_some() {
                return Err(CoreError::Parse { line: lineno, msg: "trailing tokens".into() });
            }
            edges.push((a, b));
        }
        let n = n.ok_or(CoreError::Parse { line: 0, msg: "missing `n=` header".into() })?;
        Graph::from_edges(n, edges)
    }

    pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_edge_list(std::fs::File::open(path)?)
    }
}

/// Circulant graph on vertices `{0,..,n-1}` with edges `(i, i±q mod n)` for
/// every generator `q`. Generators must satisfy `1 <= q < n/2`.
pub fn build_circulant(n: usize, q_set: &[usize]) -> Result<Graph> {
    if n == 0 {
        return Err(CoreError::InvalidParameter("circulant graph needs n >= 1".into()));
    }
    if q_set.is_empty() {
        return Err(CoreError::InvalidParameter("generator set is empty".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for &q in q_set {
        if q < 1 || 2 * q >= n {
            return Err(CoreError::InvalidParameter(format!(
                "generator {q} outside [1, n/2) for n={n}"
            )));
        }
        if !seen.insert(q) {
            return Err(CoreError::InvalidParameter(format!("duplicate generator {q}")));
        }
    }
    let mut edges = Vec::with_capacity(n * q_set.len());
    for i in 0..n {
        for &q in q_set {
            let j = (i + q) % n;
            edges.push((i as u32, j as u32));
        }
    }
    Graph::from_edges(n, edges)
}

/// Random geometric graph: `n` points i.i.d. uniform on the unit square,
/// an edge when the Euclidean distance is at most `sqrt(2/n)`.
/// Returns the graph together with the vertex coordinates.
pub fn build_random_geometric(n: usize, seed: u64) -> Result<(Graph, Vec<(f64, f64)>)> {
    if n < 2 {
        return Err(CoreError::InvalidParameter("geometric graph needs n >= 2".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let coords: Vec<(f64, f64)> =
        (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
    let radius2 = 2.0 / n as f64;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let dx = coords[i].0 - coords[j].0;
            let dy = coords[i].1 - coords[j].1;
            if dx * dx + dy * dy <= radius2 {
                edges.push((i as u32, j as u32));
            }
        }
    }
    Ok((Graph::from_edges(n, edges)?, coords))
}

/// Writes coordinates as `i x y` lines with 17 significant digits.
pub fn write_coordinates(coords: &[(f64, f64)], w: &mut impl Write) -> Result<()> {
    for (i, (x, y)) in coords.iter().enumerate() {
        writeln!(w, "{i} {x:.16e} {y:.16e}")?;
    }
    Ok(())
}

/// Parses the `i x y` coordinate format.
pub fn read_coordinates(r: impl std::io::Read) -> Result<Vec<(f64, f64)>> {
    let reader = BufReader::new(r);
    let mut rows: Vec<(usize, f64, f64)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut it = t.split_whitespace();
        let parse_err = |msg: &str| CoreError::Parse { line: lineno, msg: msg.into() };
        let i: usize =
            it.next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("expected index"))?;
        let x: f64 =
            it.next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("expected x"))?;
        let y: f64 =
            it.next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("expected y"))?;
        rows.push((i, x, y));
    }
    rows.sort_by_key(|r| r.0);
    for (expect, row) in rows.iter().enumerate() {
        if row.0 != expect {
            return Err(CoreError::Parse {
                line: 0,
                msg: format!("missing coordinate row for vertex {expect}"),
            });
        }
    }
    Ok(rows.into_iter().map(|(_, x, y)| (x, y)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_cycle_edges() {
        let g = build_circulant(4, &[1]).unwrap();
        assert_eq!(g.edge_count(), 4);
        for e in [(0, 1), (1, 2), (2, 3), (0, 3)] {
            assert!(g.has_edge(e.0, e.1), "missing edge {e:?}");
        }
    }

    #[test]
    fn circulant_degree_is_twice_generator_count() {
        let g = build_circulant(1000, &[1, 2, 5]).unwrap();
        for v in 0..1000 {
            assert_eq!(g.degree(v), 6);
        }
    }

    #[test]
    fn circulant_generator_bounds() {
        assert!(build_circulant(6, &[3]).is_err()); // q = n/2
        assert!(build_circulant(6, &[0]).is_err());
        assert!(build_circulant(6, &[1, 1]).is_err());
    }

    #[test]
    fn geometric_is_deterministic() {
        let (g1, c1) = build_random_geometric(256, 7).unwrap();
        let (g2, c2) = build_random_geometric(256, 7).unwrap();
        assert_eq!(g1.edges(), g2.edges());
        assert_eq!(c1, c2);
        let (g3, _) = build_random_geometric(256, 8).unwrap();
        assert_ne!(g1.edges(), g3.edges());
    }

    #[test]
    fn geometric_edges_match_brute_force_scan() {
        let (g, coords) = build_random_geometric(256, 7).unwrap();
        let mut count = 0usize;
        let r2 = 2.0 / 256.0;
        for i in 0..256 {
            for j in i + 1..256 {
                let dx = coords[i].0 - coords[j].0;
                let dy = coords[i].1 - coords[j].1;
                if dx * dx + dy * dy <= r2 {
                    count += 1;
                    assert!(g.has_edge(i as u32, j as u32));
                }
            }
        }
        assert_eq!(g.edge_count(), count);
    }

    #[test]
    fn two_vertex_threshold_is_one() {
        // radius = sqrt(2/2) = 1; points in the unit square at distance <= 1 connect
        let (g, coords) = build_random_geometric(2, 3).unwrap();
        let d = ((coords[0].0 - coords[1].0).powi(2) + (coords[0].1 - coords[1].1).powi(2)).sqrt();
        assert_eq!(g.edge_count(), usize::from(d <= 1.0));
    }

    #[test]
    fn edge_list_roundtrip() {
        let g = build_circulant(8, &[1, 2]).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let back = Graph::read_edge_list(&buf[..]).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn malformed_edge_list_names_line() {
        let text = "n=4\n0 1\nbogus\n";
        match Graph::read_edge_list(text.as_bytes()) {
            Err(CoreError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn coordinates_roundtrip_is_exact() {
        let coords = vec![(0.123456789012345678, 0.9), (0.25, 1.0 / 3.0)];
        let mut buf = Vec::new();
        write_coordinates(&coords, &mut buf).unwrap();
        let back = read_coordinates(&buf[..]).unwrap();
        assert_eq!(coords, back);
    }

    #[test]
    fn rejects_self_loop_and_duplicates() {
        assert!(Graph::from_edges(3, [(0, 0)]).is_err());
        assert!(Graph::from_edges(3, [(0, 1), (1, 0)]).is_err());
    }
}
