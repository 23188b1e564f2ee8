//! Point sets, distance matrices and the threshold graphs built on them.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A labeled location. `lat` and `lon` are raw degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
}

/// Ordered set of at least two points with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<Point>,
}

impl PointSet {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid(format!("a point set needs at least 2 points, got {}", points.len())));
        }
        let mut seen = HashSet::with_capacity(points.len());
        for p in &points {
            if !seen.insert(p.id.as_str()) {
                return Err(Error::invalid(format!("duplicate point id `{}`", p.id)));
            }
            if !p.lat.is_finite() || !p.lon.is_finite() {
                return Err(Error::invalid(format!("point `{}` has a non-finite coordinate", p.id)));
            }
        }
        Ok(Self { points })
    }

    /// Builds a point set from bare coordinates, labeling points `p0`, `p1`, ...
    pub fn from_coords(coords: &[(f64, f64)]) -> Result<Self> {
        Self::new(coords.iter().enumerate().map(|(i, &(lat, lon))| Point { id: format!("p{i}"), lat, lon }).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn coords(&self, i: usize) -> [f64; 2] {
        let p = &self.points[i];
        [p.lat, p.lon]
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.points.iter().map(|p| p.id.as_str())
    }

    /// Reads the `id,lat,lon` CSV format.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected = ["id", "lat", "lon"];
        if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(Error::invalid(format!(
                "expected CSV header `id,lat,lon`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let points = rdr.deserialize().collect::<std::result::Result<Vec<Point>, _>>()?;
        Self::new(points)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for p in &self.points {
            wtr.serialize(p)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn euclidean(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Symmetric matrix of pairwise distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::invalid("distance matrix must be square"));
            }
            data.extend_from_slice(row);
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(Error::invalid("distance matrix must have a zero diagonal"));
            }
            for j in 0..n {
                let v = data[i * n + j];
                if !(v >= 0.0) || v != data[j * n + i] {
                    return Err(Error::invalid("distance matrix must be symmetric with nonnegative entries"));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Distances of the unordered pairs `i < j`, each pair once.
    pub fn pair_distances(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * self.n.saturating_sub(1) / 2);
        for i in 0..self.n {
            for j in i + 1..self.n {
                out.push(self.get(i, j));
            }
        }
        out
    }

    /// The `q`-quantile of the pair distances, used as the edge threshold.
    pub fn pair_percentile(&self, q: f64) -> Result<f64> {
        percentile(&self.pair_distances(), q)
    }
}

/// Euclidean distances on raw (lat, lon) values.
pub fn compute_distance_matrix(points: &PointSet) -> Result<DistanceMatrix> {
    let n = points.len();
    if n < 2 {
        return Err(Error::invalid("distance matrix needs at least 2 points"));
    }
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = euclidean(points.coords(i), points.coords(j));
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { n, data })
}

/// Linear-interpolation percentile: position `q·(len−1)` in the sorted values.
pub fn percentile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("percentile of an empty list"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!("percentile fraction {q} outside [0, 1]")));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("percentile input contains NaN"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

/// Undirected simple graph over `0..n` stored as a dense 0/1 adjacency.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    adj: Vec<bool>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self { n, adj: vec![false; n * n] }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n);
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!("edge ({u}, {v}) out of range for {n} nodes")));
            }
            if u == v {
                return Err(Error::invalid(format!("self-loop at node {u}")));
            }
            g.set_edge(u, v);
        }
        Ok(g)
    }

    /// Complete graph on `n` nodes.
    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for u in 0..n {
            for v in u + 1..n {
                g.set_edge(u, v);
            }
        }
        g
    }

    fn set_edge(&mut self, u: usize, v: usize) {
        self.adj[u * self.n + v] = true;
        self.adj[v * self.n + u] = true;
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u * self.n + v]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u * self.n..(u + 1) * self.n].iter().filter(|&&e| e).count()
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[u * self.n..(u + 1) * self.n].iter().enumerate().filter_map(|(v, &e)| e.then_some(v))
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    /// Edges `(u, v)` with `u < v` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| (u + 1..self.n).filter(move |&v| self.has_edge(u, v)).map(move |v| (u, v)))
    }

    /// Adjacency as 0.0/1.0 rows.
    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|u| (0..self.n).map(|v| if self.has_edge(u, v) { 1.0 } else { 0.0 }).collect()).collect()
    }

    /// Nodes of each connected component, components ordered by smallest node.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for v in self.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Writes the debug edge-list format: a `# nodes N` line, then `u v` per edge.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        let mut buf = String::new();
        writeln!(buf, "# nodes {}", self.n).unwrap();
        for (u, v) in self.edges() {
            writeln!(buf, "{u} {v}").unwrap();
        }
        w.write_all(buf.as_bytes())?;
        Ok(())
    }

    /// Parses the edge-list format. Without a `# nodes N` line the node count
    /// is one past the largest index.
    pub fn read_edge_list<R: BufRead>(reader: R) -> Result<Self> {
        let mut declared = None;
        let mut edges = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut parts = rest.split_whitespace();
                if parts.next() == Some("nodes") {
                    let n = parts
                        .next()
                        .and_then(|s| s.parse::<usize>().ok())
                        .ok_or_else(|| Error::invalid(format!("line {}: bad node count", lineno + 1)))?;
                    declared = Some(n);
                }
                continue;
            }
            let mut parts = line.split_whitespace();
            let mut next = || -> Result<usize> {
                parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::invalid(format!("line {}: expected `u v`", lineno + 1)))
            };
            let (u, v) = (next()?, next()?);
            edges.push((u, v));
        }
        let implied = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
        let n = declared.unwrap_or(implied);
        Self::from_edges(n, &edges)
    }
}

/// `A_ij = 1` iff `D_ij < d_tilde` and `i ≠ j`. Ties produce no edge.
pub fn build_adjacency(dist: &DistanceMatrix, d_tilde: f64) -> Result<Graph> {
    if !(d_tilde > 0.0) {
        return Err(Error::invalid(format!("edge threshold must be positive, got {d_tilde}")));
    }
    let n = dist.len();
    let mut g = Graph::empty(n);
    for i in 0..n {
        for j in i + 1..n {
            if dist.get(i, j) < d_tilde {
                g.set_edge(i, j);
            }
        }
    }
    Ok(g)
}

fn check_subset(g: &Graph, subset: &[usize]) -> Result<()> {
    let mut seen = vec![false; g.n];
    for &v in subset {
        if v >= g.n {
            return Err(Error::invalid(format!("node {v} out of range for {} nodes", g.n)));
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(Error::invalid(format!("node {v} repeated in subset")));
        }
    }
    Ok(())
}

fn internal_edges(g: &Graph, subset: &[usize]) -> usize {
    let mut count = 0;
    for (a, &u) in subset.iter().enumerate() {
        for &v in &subset[a + 1..] {
            if g.has_edge(u, v) {
                count += 1;
            }
        }
    }
    count
}

/// Edge density `2E/(n(n−1))` of the induced subgraph; 0 for fewer than two nodes.
pub fn graph_density(g: &Graph, subset: &[usize]) -> Result<f64> {
    check_subset(g, subset)?;
    let n = subset.len();
    if n <= 1 {
        return Ok(0.0);
    }
    Ok(2.0 * internal_edges(g, subset) as f64 / (n * (n - 1)) as f64)
}

/// Induced subgraph plus the original index of each of its nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Subgraph {
    pub graph: Graph,
    pub nodes: Vec<usize>,
}

pub fn induced_subgraph(g: &Graph, subset: &[usize]) -> Result<Subgraph> {
    if subset.is_empty() {
        return Err(Error::invalid("induced subgraph of an empty node set"));
    }
    check_subset(g, subset)?;
    let k = subset.len();
    let mut sub = Graph::empty(k);
    for a in 0..k {
        for b in a + 1..k {
            if g.has_edge(subset[a], subset[b]) {
                sub.set_edge(a, b);
            }
        }
    }
    Ok(Subgraph { graph: sub, nodes: subset.to_vec() })
}

/// Edges with both endpoints in `subset`, and edges with exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeCounts {
    pub internal: usize,
    pub external: usize,
}

pub fn edge_counts(g: &Graph, subset: &[usize]) -> Result<EdgeCounts> {
    check_subset(g, subset)?;
    let mut inside = vec![false; g.n];
    for &v in subset {
        inside[v] = true;
    }
    let mut counts = EdgeCounts { internal: 0, external: 0 };
    for (u, v) in g.edges() {
        match (inside[u], inside[v]) {
            (true, true) => counts.internal += 1,
            (true, false) | (false, true) => counts.external += 1,
            _ => {}
        }
    }
    Ok(counts)
}
