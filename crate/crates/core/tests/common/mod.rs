#![allow(dead_code)]

use gbs_cluster::matchers::SymMatrix;
use gbs_cluster::{Graph, PointSet};
use nalgebra::DMatrix;
use rand::Rng;

/// Hafnian by expansion along the first row, no memoization.
pub fn naive_hafnian(a: &DMatrix<f64>) -> f64 {
    fn rec(a: &DMatrix<f64>, rest: &[usize]) -> f64 {
        if rest.is_empty() {
            return 1.0;
        }
        let i = rest[0];
        let mut total = 0.0;
        for k in 1..rest.len() {
            let j = rest[k];
            if a[(i, j)] != 0.0 {
                let sub: Vec<usize> = rest[1..].iter().copied().filter(|&x| x != j).collect();
                total += a[(i, j)] * rec(a, &sub);
            }
        }
        total
    }
    if !a.nrows().is_multiple_of(2) {
        return 0.0;
    }
    rec(a, &(0..a.nrows()).collect::<Vec<_>>())
}

/// Torontonian of the click matrix `[[0, B], [B, 0]]` by the subset sum with
/// dense determinants.
pub fn naive_click_torontonian(b: &DMatrix<f64>) -> f64 {
    let m = b.nrows();
    let mut total = 0.0;
    for mask in 0usize..(1 << m) {
        let z: Vec<usize> = (0..m).filter(|k| mask & (1 << k) != 0).collect();
        let k = z.len();
        let mut o = DMatrix::<f64>::identity(2 * k, 2 * k);
        for (p, &i) in z.iter().enumerate() {
            for (q, &j) in z.iter().enumerate() {
                o[(p, k + q)] -= b[(i, j)];
                o[(k + p, q)] -= b[(i, j)];
            }
        }
        let sign = if (m - k).is_multiple_of(2) { 1.0 } else { -1.0 };
        total += sign / o.determinant().sqrt();
    }
    total
}

pub fn random_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> Graph {
    let edges: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|_| rng.random::<f64>() < p).collect();
    Graph::from_edges(n, &edges).unwrap()
}

pub fn random_symmetric<R: Rng>(rng: &mut R, n: usize) -> SymMatrix {
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(-1.0..1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    SymMatrix::new(m).unwrap()
}

/// Every labeled graph on `n` nodes.
pub fn all_graphs(n: usize) -> Vec<Graph> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    (0u32..(1 << pairs.len()))
        .map(|mask| {
            let edges: Vec<_> =
                pairs.iter().enumerate().filter(|(k, _)| mask & (1 << k) != 0).map(|(_, &e)| e).collect();
            Graph::from_edges(n, &edges).unwrap()
        })
        .collect()
}

/// Adjusted Rand index between two labelings.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let c2 = |x: u64| (x * x.saturating_sub(1)) as f64 / 2.0;
    let index: f64 = table.iter().flatten().map(|&x| c2(x)).sum();
    let rows: f64 = table.iter().map(|r| c2(r.iter().sum())).sum();
    let cols: f64 = (0..kb).map(|j| c2(table.iter().map(|r| r[j]).sum())).sum();
    let expected = rows * cols / c2(n as u64);
    let max = (rows + cols) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// Three 5-point groups 10 apart, points within a group at most 0.3 apart.
pub fn three_cliques() -> (PointSet, Vec<usize>) {
    let centers = [(0.0, 0.0), (10.0, 0.0), (5.0, 8.66)];
    let offsets = [(0.0, 0.0), (0.1, 0.0), (0.0, 0.1), (0.1, 0.1), (0.05, 0.2)];
    let mut coords = Vec::new();
    let mut labels = Vec::new();
    for (c, &(x, y)) in centers.iter().enumerate() {
        for &(dx, dy) in &offsets {
            coords.push((x + dx, y + dy));
            labels.push(c);
        }
    }
    (PointSet::from_coords(&coords).unwrap(), labels)
}

/// Two triangles joined by the edges 2-3 and 1-4.
pub fn six_node_fixture() -> Graph {
    Graph::from_edges(6, &[(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (4, 5), (3, 5), (1, 4)]).unwrap()
}
