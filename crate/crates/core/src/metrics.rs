//! Clustering quality scores: silhouette on point distances, and two graph
//! scores, the size-weighted cluster density `w` and the intra/inter cluster
//! cohesion `δ_ie`.
//!
//! Conventions for one-point clusters: silhouette contribution 0, density 1,
//! internal edge density 1.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{edge_counts, graph_density, DistanceMatrix, Graph};
use crate::qclust::Clustering;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterBreakdown {
    pub size: usize,
    pub density: f64,
    pub delta_int: f64,
    pub delta_ext: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    /// `None` when there is a single cluster.
    pub silhouette: Option<f64>,
    pub weighted_density: f64,
    pub cohesion: f64,
    pub per_cluster: Vec<ClusterBreakdown>,
}

impl MetricsReport {
    /// Checks the declared ranges and that the breakdown covers every point.
    pub fn check(&self, point_count: usize) -> Result<()> {
        let in_range = |v: f64, lo: f64, hi: f64| v >= lo - 1e-12 && v <= hi + 1e-12;
        if !self.silhouette.is_none_or(|s| in_range(s, -1.0, 1.0))
            || !in_range(self.weighted_density, 0.0, 1.0)
            || !in_range(self.cohesion, -1.0, 1.0)
        {
            return Err(Error::Numeric(format!("metric out of range: {self:?}")));
        }
        let total: usize = self.per_cluster.iter().map(|c| c.size).sum();
        if total != point_count {
            return Err(Error::Numeric(format!("cluster sizes sum to {total}, expected {point_count}")));
        }
        Ok(())
    }
}

fn check_sizes(clustering: &Clustering, n: usize, what: &str) -> Result<()> {
    if clustering.point_count() != n {
        return Err(Error::invalid(format!(
            "clustering covers {} points but the {what} has {n}",
            clustering.point_count()
        )));
    }
    Ok(())
}

/// Mean silhouette `(b − a) / max(a, b)` over all points.
pub fn silhouette(dist: &DistanceMatrix, clustering: &Clustering) -> Result<f64> {
    check_sizes(clustering, dist.len(), "distance matrix")?;
    if clustering.len() < 2 {
        return Err(Error::UndefinedMetric("silhouette needs at least two clusters".into()));
    }
    let clusters = clustering.clusters();
    let n = dist.len();
    let mut total = 0.0;
    for i in 0..n {
        let own = clustering.cluster_of(i);
        if clusters[own].len() == 1 {
            continue;
        }
        let mean_to = |c: &[usize]| c.iter().map(|&j| dist.get(i, j)).sum::<f64>();
        let a = mean_to(&clusters[own]) / (clusters[own].len() - 1) as f64;
        let b = clusters
            .iter()
            .enumerate()
            .filter(|&(cid, _)| cid != own)
            .map(|(_, c)| mean_to(c) / c.len() as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

/// Silhouette of a single point, 0 for singletons.
pub fn point_silhouette(dist: &DistanceMatrix, clustering: &Clustering, i: usize) -> Result<f64> {
    check_sizes(clustering, dist.len(), "distance matrix")?;
    if clustering.len() < 2 {
        return Err(Error::UndefinedMetric("silhouette needs at least two clusters".into()));
    }
    let clusters = clustering.clusters();
    let own = clustering.cluster_of(i);
    if clusters[own].len() == 1 {
        return Ok(0.0);
    }
    let sum_to = |c: &[usize]| c.iter().map(|&j| dist.get(i, j)).sum::<f64>();
    let a = sum_to(&clusters[own]) / (clusters[own].len() - 1) as f64;
    let b = clusters
        .iter()
        .enumerate()
        .filter(|&(cid, _)| cid != own)
        .map(|(_, c)| sum_to(c) / c.len() as f64)
        .fold(f64::INFINITY, f64::min);
    let denom = a.max(b);
    Ok(if denom > 0.0 { (b - a) / denom } else { 0.0 })
}

fn breakdown(clustering: &Clustering, g: &Graph) -> Result<Vec<ClusterBreakdown>> {
    check_sizes(clustering, g.node_count(), "graph")?;
    let m = g.node_count();
    clustering
        .clusters()
        .iter()
        .map(|c| {
            let n_i = c.len();
            let counts = edge_counts(g, c)?;
            let (density, delta_int) = if n_i == 1 {
                (1.0, 1.0)
            } else {
                let d = graph_density(g, c)?;
                (d, counts.internal as f64 / (n_i * (n_i - 1) / 2) as f64)
            };
            let delta_ext = if n_i == m { 0.0 } else { counts.external as f64 / (n_i * (m - n_i)) as f64 };
            Ok(ClusterBreakdown { size: n_i, density, delta_int, delta_ext })
        })
        .collect()
}

/// `w = Σ n_i d_i / M`.
pub fn weighted_density(clustering: &Clustering, g: &Graph) -> Result<f64> {
    let parts = breakdown(clustering, g)?;
    Ok(weighted_density_of(&parts, g.node_count()))
}

fn weighted_density_of(parts: &[ClusterBreakdown], m: usize) -> f64 {
    parts.iter().map(|p| p.size as f64 * p.density).sum::<f64>() / m as f64
}

/// Mean over clusters of `δ_int − δ_ext`.
pub fn cohesion(clustering: &Clustering, g: &Graph) -> Result<f64> {
    let parts = breakdown(clustering, g)?;
    cohesion_of(&parts)
}

fn cohesion_of(parts: &[ClusterBreakdown]) -> Result<f64> {
    if parts.is_empty() {
        return Err(Error::UndefinedMetric("cohesion of an empty clustering".into()));
    }
    Ok(parts.iter().map(|p| p.delta_int - p.delta_ext).sum::<f64>() / parts.len() as f64)
}

/// All three scores, range-checked. The silhouette is left out for a single cluster.
pub fn evaluate(dist: &DistanceMatrix, g: &Graph, clustering: &Clustering) -> Result<MetricsReport> {
    let per_cluster = breakdown(clustering, g)?;
    let silhouette = match silhouette(dist, clustering) {
        Ok(s) => Some(s),
        Err(Error::UndefinedMetric(_)) => None,
        Err(e) => return Err(e),
    };
    let report = MetricsReport {
        silhouette,
        weighted_density: weighted_density_of(&per_cluster, g.node_count()),
        cohesion: cohesion_of(&per_cluster)?,
        per_cluster,
    };
    report.check(g.node_count())?;
    Ok(report)
}
