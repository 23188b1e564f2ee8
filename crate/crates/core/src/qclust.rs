//! Iterative densest-subgraph extraction with a boson sampler.
//!
//! Each outer step encodes the graph of not-yet-clustered points, draws `N`
//! subsets per round, keeps those with at least `L` nodes and accepts the
//! densest one once its density beats a decaying threshold. Accepted nodes
//! leave the graph; whatever is left at the end is attached to the closest
//! cluster by connectivity, or becomes a singleton.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::gbs::{GbsSampler, SampleBatch, SamplingMode, WeightCache};
use crate::graph::{
    build_adjacency, compute_distance_matrix, graph_density, induced_subgraph, DistanceMatrix, Graph, PointSet,
};
use crate::matchers::SymMatrix;
use crate::seeds;

/// Which algorithm produced a clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gbs,
    Kmeans,
    Dbscan,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Gbs => "gbs",
            Method::Kmeans => "kmeans",
            Method::Dbscan => "dbscan",
        }
    }
}

/// A partition of `0..n` into nonempty clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    assignment: Vec<usize>,
    clusters: Vec<Vec<usize>>,
    pub method: Method,
    pub params: Value,
}

impl Clustering {
    /// Validates that `clusters` partition `0..n`. Members are sorted; cluster
    /// order is kept.
    pub fn from_clusters(n: usize, mut clusters: Vec<Vec<usize>>, method: Method, params: Value) -> Result<Self> {
        let mut assignment = vec![usize::MAX; n];
        for (cid, cluster) in clusters.iter_mut().enumerate() {
            if cluster.is_empty() {
                return Err(Error::invalid(format!("cluster {cid} is empty")));
            }
            cluster.sort_unstable();
            for &v in cluster.iter() {
                if v >= n {
                    return Err(Error::invalid(format!("node {v} out of range for {n} points")));
                }
                if assignment[v] != usize::MAX {
                    return Err(Error::invalid(format!("node {v} assigned twice")));
                }
                assignment[v] = cid;
            }
        }
        if let Some(v) = assignment.iter().position(|&c| c == usize::MAX) {
            return Err(Error::invalid(format!("node {v} is not assigned to any cluster")));
        }
        Ok(Self { assignment, clusters, method, params })
    }

    /// Clustering from per-point labels; cluster ids are renumbered in order of
    /// first appearance.
    pub fn from_labels(labels: &[usize], method: Method, params: Value) -> Result<Self> {
        let mut remap = std::collections::HashMap::new();
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        for (v, &l) in labels.iter().enumerate() {
            let next = remap.len();
            let cid = *remap.entry(l).or_insert(next);
            if cid == clusters.len() {
                clusters.push(Vec::new());
            }
            clusters[cid].push(v);
        }
        Self::from_clusters(labels.len(), clusters, method, params)
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn point_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn cluster_of(&self, v: usize) -> usize {
        self.assignment[v]
    }

    pub fn with_params(mut self, params: Value) -> Self {
        self.params = params;
        self
    }

    /// `{"method": ..., "params": {...}, "clusters": [[ids...], ...]}`
    pub fn to_json(&self, points: &PointSet) -> Value {
        let clusters: Vec<Vec<&str>> =
            self.clusters.iter().map(|c| c.iter().map(|&v| points.points()[v].id.as_str()).collect()).collect();
        json!({ "method": self.method, "params": self.params, "clusters": clusters })
    }

    pub fn from_json(points: &PointSet, value: &Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            method: Method,
            #[serde(default)]
            params: Value,
            clusters: Vec<Vec<String>>,
        }
        let raw: Raw = serde_json::from_value(value.clone())?;
        let index: std::collections::HashMap<&str, usize> = points.ids().enumerate().map(|(i, id)| (id, i)).collect();
        let clusters = raw
            .clusters
            .iter()
            .map(|c| {
                c.iter()
                    .map(|id| {
                        index
                            .get(id.as_str())
                            .copied()
                            .ok_or_else(|| Error::invalid(format!("unknown point id `{id}`")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_clusters(points.len(), clusters, raw.method, raw.params)
    }
}

/// Knobs of the extraction loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterParams {
    /// Quantile of the pair distances used as the edge threshold.
    pub d_percentile: f64,
    /// Explicit edge threshold; overrides `d_percentile`.
    pub d_tilde: Option<f64>,
    /// Mean photon number as a fraction of the graph size.
    pub n_mean_factor: f64,
    /// Samples per round.
    pub samples: usize,
    /// Minimum candidate size as a fraction of the graph size (rounded up).
    pub l_factor: f64,
    pub t0: f64,
    pub gamma: f64,
    pub t_min: f64,
    /// The loop runs while at least this many nodes are unclustered.
    pub min_remaining: usize,
    /// Rounds without acceptance before an extraction gives up.
    pub max_rounds_per_cluster: usize,
    /// Consecutive rounds without acceptance before `L` is halved, rounding up (floor 2).
    pub l_patience: usize,
    /// Recompute `n_mean` and `L` from the shrinking graph instead of the initial size.
    pub recompute: bool,
    pub mode: SamplingMode,
    pub seed: u64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            d_percentile: 0.35,
            d_tilde: None,
            n_mean_factor: 0.5,
            samples: 50,
            l_factor: 1.0 / 3.0,
            t0: 0.90,
            gamma: 0.95,
            t_min: 0.50,
            min_remaining: 3,
            max_rounds_per_cluster: 50,
            l_patience: 10,
            recompute: true,
            mode: SamplingMode::PnrPostselected,
            seed: 0,
        }
    }
}

impl ClusterParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::invalid(format!("cluster params: {what}")));
        if !(self.d_percentile > 0.0 && self.d_percentile < 1.0) {
            return bad("d_percentile must lie in (0, 1)");
        }
        if let Some(d) = self.d_tilde {
            if !(d > 0.0) {
                return bad("d_tilde must be positive");
            }
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(self.t_min <= self.t0 && self.t0 <= 1.0) || !(self.t_min >= 0.0) {
            return bad("thresholds must satisfy 0 <= t_min <= t0 <= 1");
        }
        if !(self.n_mean_factor > 0.0) {
            return bad("n_mean_factor must be positive");
        }
        if !(self.l_factor > 0.0 && self.l_factor <= 1.0) {
            return bad("l_factor must lie in (0, 1]");
        }
        if self.samples == 0 || self.max_rounds_per_cluster == 0 || self.l_patience == 0 {
            return bad("samples, max_rounds_per_cluster and l_patience must be at least 1");
        }
        if self.min_remaining < 2 {
            return bad("min_remaining must be at least 2");
        }
        Ok(())
    }
}

/// Density threshold after `failed` unsuccessful rounds: `max(t_min, t0·γ^failed)`.
pub fn compute_threshold(failed: usize, params: &ClusterParams) -> f64 {
    let decayed = params.t0 * params.gamma.powi(failed.min(i32::MAX as usize) as i32);
    decayed.max(params.t_min)
}

/// Densest sample with at least `min_size` nodes. Ties go to the larger
/// sample, then to the lexicographically smallest node list.
pub fn find_densest_candidate(batch: &SampleBatch, g: &Graph, min_size: usize) -> Option<Vec<usize>> {
    densest_of(&batch.samples, g, min_size)
}

fn densest_of(samples: &[Vec<usize>], g: &Graph, min_size: usize) -> Option<Vec<usize>> {
    let mut best: Option<(f64, &Vec<usize>)> = None;
    for s in samples.iter().filter(|s| s.len() >= min_size) {
        let d = graph_density(g, s).expect("samples index nodes of the graph");
        let better = match best {
            None => true,
            Some((bd, bs)) => d > bd || (d == bd && (s.len() > bs.len() || (s.len() == bs.len() && s < bs))),
        };
        if better {
            best = Some((d, s));
        }
    }
    best.map(|(_, s)| s.clone())
}

/// Completes a partial clustering. Each unclustered node, in ascending order,
/// joins the cluster maximizing `edges(node, cluster) / |cluster|` over the
/// clusters as given (ties: lower index); nodes with no edge into any cluster
/// become singletons appended after them.
pub fn post_process(unclustered: &[usize], clusters: &[Vec<usize>], g: &Graph, method: Method) -> Result<Clustering> {
    let n = g.node_count();
    let mut owner = vec![usize::MAX; n];
    for (cid, c) in clusters.iter().enumerate() {
        for &v in c {
            if v >= n {
                return Err(Error::invalid(format!("node {v} out of range")));
            }
            owner[v] = cid;
        }
    }
    let mut pending = unclustered.to_vec();
    pending.sort_unstable();
    pending.dedup();

    let mut joined: Vec<Vec<usize>> = clusters.to_vec();
    let mut singletons = Vec::new();
    for &v in &pending {
        if v >= n {
            return Err(Error::invalid(format!("node {v} out of range")));
        }
        if owner[v] != usize::MAX {
            return Err(Error::invalid(format!("node {v} is both clustered and unclustered")));
        }
        let mut links = vec![0usize; clusters.len()];
        for u in g.neighbors(v) {
            if owner[u] != usize::MAX {
                links[owner[u]] += 1;
            }
        }
        let mut target: Option<(usize, f64)> = None;
        for (cid, &k) in links.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let ratio = k as f64 / clusters[cid].len() as f64;
            if target.is_none_or(|(_, r)| ratio > r) {
                target = Some((cid, ratio));
            }
        }
        match target {
            Some((cid, _)) => joined[cid].push(v),
            None => singletons.push(vec![v]),
        }
    }
    joined.extend(singletons);
    Clustering::from_clusters(n, joined, method, Value::Null)
}

/// Why the extraction loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Fewer than `min_remaining` nodes left (or fewer than all, on smaller inputs).
    TooFewNodes,
    /// The remaining nodes have no edges among them.
    NoEdges,
    /// An extraction hit `max_rounds_per_cluster` without accepting.
    RoundCap,
}

/// What happened during a run, for inspection and tests.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterTrace {
    pub d_tilde: f64,
    /// Clusters accepted by the density test, before post-processing.
    pub accepted: Vec<Vec<usize>>,
    /// Density of each accepted cluster at acceptance.
    pub accepted_density: Vec<f64>,
    pub rounds: usize,
    pub stop: StopReason,
}

/// Threshold graph with the strict `<` rule; a nonpositive threshold gives no edges.
pub fn threshold_graph(dist: &DistanceMatrix, d_tilde: f64) -> Result<Graph> {
    if d_tilde <= 0.0 {
        return Ok(Graph::empty(dist.len()));
    }
    build_adjacency(dist, d_tilde)
}

/// Edge threshold from `params`: the explicit value or the pair-distance percentile.
pub fn resolve_d_tilde(dist: &DistanceMatrix, params: &ClusterParams) -> Result<f64> {
    match params.d_tilde {
        Some(d) => Ok(d),
        None => dist.pair_percentile(params.d_percentile),
    }
}

pub fn gbs_cluster(points: &PointSet, params: &ClusterParams) -> Result<Clustering> {
    Ok(gbs_cluster_traced(points, params)?.0)
}

pub fn gbs_cluster_traced(points: &PointSet, params: &ClusterParams) -> Result<(Clustering, ClusterTrace)> {
    params.validate()?;
    let dist = compute_distance_matrix(points)?;
    let d_tilde = resolve_d_tilde(&dist, params)?;
    let g = threshold_graph(&dist, d_tilde)?;
    cluster_graph(&g, d_tilde, params)
}

/// The extraction loop on a prebuilt graph; `d_tilde` is only recorded.
pub fn cluster_graph(g: &Graph, d_tilde: f64, params: &ClusterParams) -> Result<(Clustering, ClusterTrace)> {
    params.validate()?;
    let m = g.node_count();
    if m < 2 {
        return Err(Error::invalid("clustering needs at least 2 points"));
    }
    let mut remaining: Vec<usize> = (0..m).collect();
    let mut trace = ClusterTrace {
        d_tilde,
        accepted: Vec::new(),
        accepted_density: Vec::new(),
        rounds: 0,
        stop: StopReason::TooFewNodes,
    };
    let mut cache = WeightCache::new(1);

    // a dataset smaller than the stop size still gets one extraction
    let stop_size = params.min_remaining.min(m);
    let mut extraction = 0u64;
    while remaining.len() >= stop_size {
        let sub = induced_subgraph(g, &remaining)?;
        if sub.graph.edge_count() == 0 {
            trace.stop = StopReason::NoEdges;
            break;
        }
        let size = if params.recompute { remaining.len() } else { m };
        let n_mean = params.n_mean_factor * size as f64;
        let mut min_size = ((params.l_factor * size as f64).ceil() as usize).max(2);
        let sampler = cache.get_or_build(&SymMatrix::adjacency(&sub.graph), n_mean, params.mode)?;

        let found = extract_one(&sampler, &sub.graph, &mut min_size, params, extraction, &mut trace);
        let Some((local, density)) = found else {
            trace.stop = StopReason::RoundCap;
            break;
        };
        let cluster: Vec<usize> = local.iter().map(|&k| sub.nodes[k]).collect();
        remaining.retain(|v| !cluster.contains(v));
        trace.accepted.push(cluster);
        trace.accepted_density.push(density);
        extraction += 1;
    }
    if remaining.len() < stop_size {
        trace.stop = StopReason::TooFewNodes;
    }

    let clustering = post_process(&remaining, &trace.accepted, g, Method::Gbs)?;
    let mut p = serde_json::to_value(params)?;
    p["d_tilde_used"] = json!(d_tilde);
    Ok((clustering.with_params(p), trace))
}

fn extract_one(
    sampler: &GbsSampler,
    g: &Graph,
    min_size: &mut usize,
    params: &ClusterParams,
    extraction: u64,
    trace: &mut ClusterTrace,
) -> Option<(Vec<usize>, f64)> {
    let mut stale = 0;
    for round in 0..params.max_rounds_per_cluster {
        let batch = sampler.sample(params.samples, seeds::derive(params.seed, &[extraction, round as u64]));
        trace.rounds += 1;
        if let Some(best) = find_densest_candidate(&batch, g, *min_size) {
            let density = graph_density(g, &best).expect("sampled nodes are in range");
            if density > compute_threshold(round, params) {
                return Some((best, density));
            }
        }
        stale += 1;
        if stale >= params.l_patience && *min_size > 2 {
            *min_size = min_size.div_ceil(2).max(2);
            stale = 0;
        }
    }
    None
}
