use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::graph::{Graph, PointSet};
use crate::qclust::{post_process, Clustering, Method};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DbscanParams {
    pub eps: f64,
    /// Neighborhood size, the point itself included, that makes a core point.
    pub min_pts: usize,
}

impl Default for DbscanParams {
    fn default() -> Self {
        Self { eps: 0.005, min_pts: 2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DbscanResult {
    pub clusters: Vec<Vec<usize>>,
    pub noise: Vec<usize>,
}

fn region(points: &PointSet, p: usize, eps: f64) -> Vec<usize> {
    let a = points.coords(p);
    (0..points.len())
        .filter(|&q| {
            let b = points.coords(q);
            (a[0] - b[0]).hypot(a[1] - b[1]) <= eps
        })
        .collect()
}

/// Density-based clustering with closed `eps`-neighborhoods and brute-force
/// range queries, visiting points in index order.
pub fn dbscan(points: &PointSet, eps: f64, min_pts: usize) -> Result<DbscanResult> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    if min_pts == 0 {
        return Err(Error::invalid("min_pts must be at least 1"));
    }
    const UNSEEN: usize = usize::MAX;
    const NOISE: usize = usize::MAX - 1;
    let n = points.len();
    let mut label = vec![UNSEEN; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();

    for p in 0..n {
        if label[p] != UNSEEN {
            continue;
        }
        let neigh = region(points, p, eps);
        if neigh.len() < min_pts {
            label[p] = NOISE;
            continue;
        }
        let cid = clusters.len();
        clusters.push(Vec::new());
        label[p] = cid;
        let mut queue: std::collections::VecDeque<usize> = neigh.into_iter().filter(|&q| q != p).collect();
        while let Some(q) = queue.pop_front() {
            if label[q] == NOISE {
                // border point
                label[q] = cid;
                continue;
            }
            if label[q] != UNSEEN {
                continue;
            }
            label[q] = cid;
            let nq = region(points, q, eps);
            if nq.len() >= min_pts {
                queue.extend(nq.into_iter().filter(|&r| label[r] == UNSEEN || label[r] == NOISE));
            }
        }
    }

    let mut noise = Vec::new();
    for (v, &l) in label.iter().enumerate() {
        if l == NOISE {
            noise.push(v);
        } else {
            clusters[l].push(v);
        }
    }
    Ok(DbscanResult { clusters, noise })
}

/// DBSCAN, then noise points go through the cluster post-processing on `g`.
pub fn dbscan_with_postprocess(points: &PointSet, eps: f64, min_pts: usize, g: &Graph) -> Result<Clustering> {
    if g.node_count() != points.len() {
        return Err(Error::invalid(format!("graph has {} nodes for {} points", g.node_count(), points.len())));
    }
    let raw = dbscan(points, eps, min_pts)?;
    let clustering = post_process(&raw.noise, &raw.clusters, g, Method::Dbscan)?;
    Ok(clustering.with_params(json!({ "eps": eps, "min_pts": min_pts, "noise_reassigned": raw.noise.len() })))
}
