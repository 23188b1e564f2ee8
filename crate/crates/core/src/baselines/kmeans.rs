use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::graph::PointSet;
use crate::qclust::{Clustering, Method};
use crate::seeds;

const MAX_ITER: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansParams {
    /// Fixed `k`; `None` selects it by the elbow rule over `1..=k_max`.
    pub k: Option<usize>,
    pub k_max: usize,
    pub restarts: usize,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self { k: None, k_max: 8, restarts: 10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Vec<[f64; 2]>,
    pub assignment: Vec<usize>,
    /// Sum of squared point-to-centroid distances.
    pub inertia: f64,
}

impl KMeansResult {
    pub fn to_clustering(&self, k: usize, seed: u64) -> Result<Clustering> {
        Clustering::from_labels(&self.assignment, Method::Kmeans, json!({ "k": k, "seed": seed }))
    }
}

fn sq_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
    dx * dx + dy * dy
}

/// Nearest centroid, ties to the lowest index.
fn nearest(p: [f64; 2], centroids: &[[f64; 2]]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, &c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best_d {
            best = k;
            best_d = d;
        }
    }
    best
}

fn plus_plus_init<R: Rng>(pts: &[[f64; 2]], k: usize, rng: &mut R) -> Vec<[f64; 2]> {
    let mut centroids = vec![pts[rng.random_range(0..pts.len())]];
    let mut d2: Vec<f64> = pts.iter().map(|&p| sq_dist(p, centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = pts.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && u < acc {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..pts.len())
        };
        let c = pts[pick];
        centroids.push(c);
        for (d, &p) in d2.iter_mut().zip(pts) {
            *d = d.min(sq_dist(p, c));
        }
    }
    centroids
}

/// Moves the point farthest from its centroid in the largest cluster into
/// each empty cluster.
fn repair_empty(pts: &[[f64; 2]], assignment: &mut [usize], centroids: &[[f64; 2]], k: usize) {
    loop {
        let mut sizes = vec![0usize; k];
        for &a in assignment.iter() {
            sizes[a] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let largest = (0..k).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))).unwrap();
        let mut far = None;
        let mut far_d = -1.0;
        for (i, &a) in assignment.iter().enumerate() {
            if a == largest {
                let d = sq_dist(pts[i], centroids[largest]);
                if d > far_d {
                    far_d = d;
                    far = Some(i);
                }
            }
        }
        assignment[far.expect("largest cluster is nonempty")] = empty;
    }
}

fn update(pts: &[[f64; 2]], assignment: &[usize], k: usize) -> Vec<[f64; 2]> {
    let mut sums = vec![[0.0, 0.0]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in pts.iter().zip(assignment) {
        sums[a][0] += p[0];
        sums[a][1] += p[1];
        counts[a] += 1;
    }
    sums.iter().zip(&counts).map(|(s, &n)| [s[0] / n as f64, s[1] / n as f64]).collect()
}

fn inertia(pts: &[[f64; 2]], assignment: &[usize], centroids: &[[f64; 2]]) -> f64 {
    pts.iter().zip(assignment).map(|(&p, &a)| sq_dist(p, centroids[a])).sum()
}

fn lloyd<R: Rng>(pts: &[[f64; 2]], k: usize, rng: &mut R) -> KMeansResult {
    let mut centroids = plus_plus_init(pts, k, rng);
    let mut assignment: Vec<usize> = Vec::new();
    let mut last = f64::INFINITY;
    for _ in 0..MAX_ITER {
        let mut next: Vec<usize> = pts.iter().map(|&p| nearest(p, &centroids)).collect();
        repair_empty(pts, &mut next, &centroids, k);
        if next == assignment {
            break;
        }
        assignment = next;
        centroids = update(pts, &assignment, k);
        let cost = inertia(pts, &assignment, &centroids);
        assert!(cost <= last * (1.0 + 1e-12) + 1e-300, "k-means inertia increased: {last} -> {cost}");
        last = cost;
    }
    KMeansResult { inertia: inertia(pts, &assignment, &centroids), centroids, assignment }
}

/// Best of `restarts` k-means++ seeded Lloyd runs, by inertia (ties: earliest restart).
pub fn kmeans_with_restarts(points: &PointSet, k: usize, restarts: usize, seed: u64) -> Result<KMeansResult> {
    let m = points.len();
    if k == 0 || k > m {
        return Err(Error::invalid(format!("k = {k} must lie in 1..={m}")));
    }
    let pts: Vec<[f64; 2]> = (0..m).map(|i| points.coords(i)).collect();
    let mut best: Option<KMeansResult> = None;
    for r in 0..restarts.max(1) {
        let mut rng = seeds::rng(seeds::derive(seed, &[r as u64]));
        let run = lloyd(&pts, k, &mut rng);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// k-means with ten restarts.
pub fn kmeans(points: &PointSet, k: usize, seed: u64) -> Result<KMeansResult> {
    kmeans_with_restarts(points, k, KMeansParams::default().restarts, seed)
}

/// Best inertia for each `k` in `1..=k_max`.
pub fn elbow_curve(points: &PointSet, k_max: usize, restarts: usize, seed: u64) -> Result<Vec<f64>> {
    if k_max > points.len() {
        return Err(Error::invalid(format!("k_max = {k_max} exceeds the {} points", points.len())));
    }
    (1..=k_max)
        .map(|k| kmeans_with_restarts(points, k, restarts, seeds::derive(seed, &[k as u64])).map(|r| r.inertia))
        .collect()
}

/// The interior `k` with the largest second difference of the inertia curve
/// (ties: smaller `k`).
pub fn elbow_select_k(points: &PointSet, k_max: usize, seed: u64) -> Result<usize> {
    if k_max < 3 {
        return Err(Error::invalid(format!("elbow selection needs k_max >= 3, got {k_max}")));
    }
    let curve = elbow_curve(points, k_max, KMeansParams::default().restarts, seed)?;
    Ok(elbow_of(&curve))
}

/// `curve[i]` is the inertia at `k = i + 1`.
pub(crate) fn elbow_of(curve: &[f64]) -> usize {
    let mut best_k = 2;
    let mut best = f64::NEG_INFINITY;
    for k in 2..curve.len() {
        let second = curve[k - 2] - 2.0 * curve[k - 1] + curve[k];
        if second > best {
            best = second;
            best_k = k;
        }
    }
    best_k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_far_blobs() {
        let pts = PointSet::from_coords(&[(0.0, 0.0), (0.0, 1.0), (100.0, 0.0), (100.0, 1.0)]).unwrap();
        let r = kmeans(&pts, 2, 1).unwrap();
        assert_eq!(r.assignment[0], r.assignment[1]);
        assert_eq!(r.assignment[2], r.assignment[3]);
        assert_ne!(r.assignment[0], r.assignment[2]);
        assert!((r.inertia - 1.0).abs() < 1e-12);
    }

    #[test]
    fn k_equals_m_has_zero_inertia() {
        let pts = PointSet::from_coords(&[(0.0, 0.0), (1.0, 5.0), (3.0, 2.0), (7.0, 7.0)]).unwrap();
        let r = kmeans(&pts, 4, 9).unwrap();
        assert_eq!(r.inertia, 0.0);
        let mut seen = r.assignment.clone();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3]);
    }

    #[test]
    fn unit_square_pairs() {
        let pts = PointSet::from_coords(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]).unwrap();
        for seed in 0..5 {
            let r = kmeans(&pts, 2, seed).unwrap();
            assert!((r.inertia - 1.0).abs() < 1e-12, "seed {seed}: {}", r.inertia);
        }
    }

    #[test]
    fn k_out_of_range() {
        let pts = PointSet::from_coords(&[(0.0, 0.0), (1.0, 0.0)]).unwrap();
        assert!(kmeans(&pts, 3, 0).is_err());
        assert!(kmeans(&pts, 0, 0).is_err());
    }

    #[test]
    fn repair_fills_empty_clusters() {
        let pts = vec![[0.0, 0.0], [0.0, 1.0], [0.0, 5.0]];
        let mut assignment = vec![0, 0, 0];
        repair_empty(&pts, &mut assignment, &[[0.0, 0.0], [50.0, 50.0]], 2);
        assert_eq!(assignment, vec![0, 0, 1]);
    }

    #[test]
    fn elbow_on_three_points_is_two() {
        let pts = PointSet::from_coords(&[(0.0, 0.0), (1.0, 0.0), (5.0, 3.0)]).unwrap();
        assert_eq!(elbow_select_k(&pts, 3, 0).unwrap(), 2);
        assert!(elbow_select_k(&pts, 2, 0).is_err());
    }

    #[test]
    fn elbow_rule_ties_prefer_smaller_k() {
        assert_eq!(elbow_of(&[10.0, 5.0, 0.0, 0.0, 0.0]), 3);
        assert_eq!(elbow_of(&[3.0, 2.0, 1.0, 0.0]), 2);
    }
}
