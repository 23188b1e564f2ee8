//! Synthetic benchmark: seeded blob datasets, the three clustering methods on
//! a shared distance matrix and graph per dataset, and a row file plus
//! per-method summary.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::baselines::kmeans::{elbow_curve, elbow_of, kmeans_with_restarts};
use crate::baselines::{dbscan_with_postprocess, DbscanParams, KMeansParams};
use crate::error::{Error, Result};
use crate::gbs::{SamplingMode, MAX_MODES};
use crate::graph::{compute_distance_matrix, PointSet};
use crate::metrics::evaluate;
use crate::qclust::{cluster_graph, resolve_d_tilde, threshold_graph, ClusterParams, Clustering, Method};
use crate::seeds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundingBox {
    pub lat: [f64; 2],
    pub lon: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorParams {
    /// Inclusive range for the number of blobs.
    pub blob_count: [usize; 2],
    /// Standard deviation of the isotropic jitter, in degrees.
    pub spread: f64,
    pub bbox: BoundingBox,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self { blob_count: [2, 4], spread: 0.004, bbox: BoundingBox { lat: [45.00, 45.04], lon: [9.00, 9.04] } }
    }
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.blob_count;
        if lo == 0 || lo > hi {
            return Err(Error::invalid(format!("blob_count range {lo}..={hi} is empty or starts at 0")));
        }
        if !(self.spread >= 0.0) || !self.spread.is_finite() {
            return Err(Error::invalid(format!("spread must be finite and nonnegative, got {}", self.spread)));
        }
        for (name, [a, b]) in [("lat", self.bbox.lat), ("lon", self.bbox.lon)] {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(Error::invalid(format!("degenerate bounding box: {name} range [{a}, {b}]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub dataset_count: usize,
    /// Inclusive range for the number of points per dataset.
    #[serde(alias = "M_range")]
    pub m_range: [usize; 2],
    pub generator: GeneratorParams,
    /// The seed inside is replaced by a per-dataset derived seed. Threshold
    /// detection by default.
    pub gbs: ClusterParams,
    pub kmeans: KMeansParams,
    pub dbscan: DbscanParams,
    pub master_seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            dataset_count: 30,
            m_range: [15, 25],
            generator: GeneratorParams::default(),
            gbs: ClusterParams { mode: SamplingMode::Threshold, ..ClusterParams::default() },
            kmeans: KMeansParams::default(),
            dbscan: DbscanParams::default(),
            master_seed: 0,
            output_dir: None,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dataset_count == 0 {
            return Err(Error::invalid("dataset_count must be at least 1"));
        }
        let [lo, hi] = self.m_range;
        if lo < 2 || lo > hi {
            return Err(Error::invalid(format!("m_range {lo}..={hi} must be nonempty and start at 2 or more")));
        }
        if hi > MAX_MODES {
            return Err(Error::Capacity { modes: hi, max: MAX_MODES });
        }
        self.generator.validate()?;
        self.gbs.validate()?;
        if self.kmeans.k.is_none() && self.kmeans.k_max < 3 {
            return Err(Error::invalid("elbow selection needs kmeans.k_max >= 3"));
        }
        if self.kmeans.k == Some(0) || self.kmeans.restarts == 0 {
            return Err(Error::invalid("kmeans.k and kmeans.restarts must be at least 1"));
        }
        if !(self.dbscan.eps > 0.0) || self.dbscan.min_pts == 0 {
            return Err(Error::invalid("dbscan needs eps > 0 and min_pts >= 1"));
        }
        Ok(())
    }
}

/// `m` points spread round-robin over a seeded number of Gaussian blobs.
pub fn generate_dataset(seed: u64, m: usize, params: &GeneratorParams) -> Result<PointSet> {
    if m < 2 {
        return Err(Error::invalid(format!("a dataset needs at least 2 points, got {m}")));
    }
    params.validate()?;
    let mut rng = seeds::rng(seed);
    let blobs = rng.random_range(params.blob_count[0]..=params.blob_count[1]);
    let centers: Vec<(f64, f64)> = (0..blobs)
        .map(|_| {
            let lat = rng.random_range(params.bbox.lat[0]..params.bbox.lat[1]);
            let lon = rng.random_range(params.bbox.lon[0]..params.bbox.lon[1]);
            (lat, lon)
        })
        .collect();
    let jitter = Normal::new(0.0, params.spread).map_err(|e| Error::invalid(e.to_string()))?;
    let coords: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let (lat, lon) = centers[i % blobs];
            (lat + jitter.sample(&mut rng), lon + jitter.sample(&mut rng))
        })
        .collect();
    PointSet::from_coords(&coords)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scores {
    /// `None` when the method returned a single cluster.
    pub silhouette: Option<f64>,
    pub w: f64,
    pub cohesion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub dataset_id: usize,
    pub method: Method,
    /// `Err` holds the failure message; such rows are left out of the summary.
    pub outcome: std::result::Result<Scores, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation, 0 for fewer than two rows.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub ok_rows: usize,
    pub failed_rows: usize,
    /// Successful rows with a defined silhouette.
    pub silhouette_rows: usize,
    pub silhouette: Option<Stat>,
    pub w: Option<Stat>,
    pub cohesion: Option<Stat>,
}

impl MethodSummary {
    pub fn means(&self) -> Option<Scores> {
        Some(Scores { silhouette: self.silhouette.map(|s| s.mean), w: self.w?.mean, cohesion: self.cohesion?.mean })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub summary: Vec<MethodSummary>,
}

impl BenchReport {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.outcome.is_ok())
    }

    pub fn method(&self, method: Method) -> Option<&MethodSummary> {
        self.summary.iter().find(|s| s.method == method)
    }
}

pub const METHODS: [Method; 3] = [Method::Gbs, Method::Kmeans, Method::Dbscan];

fn stat(values: &[f64]) -> Option<Stat> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Some(Stat { mean, std })
}

/// Per-method means and standard deviations over the successful rows.
pub fn summarize(rows: &[BenchRow]) -> Vec<MethodSummary> {
    METHODS
        .iter()
        .map(|&method| {
            let mine: Vec<&BenchRow> = rows.iter().filter(|r| r.method == method).collect();
            let ok: Vec<&Scores> = mine.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
            let col = |f: fn(&Scores) -> Option<f64>| stat(&ok.iter().filter_map(|s| f(s)).collect::<Vec<_>>());
            MethodSummary {
                method,
                ok_rows: ok.len(),
                failed_rows: mine.len() - ok.len(),
                silhouette_rows: ok.iter().filter(|s| s.silhouette.is_some()).count(),
                silhouette: col(|s| s.silhouette),
                w: col(|s| Some(s.w)),
                cohesion: col(|s| Some(s.cohesion)),
            }
        })
        .collect()
}

fn run_kmeans(points: &PointSet, params: &KMeansParams, seed: u64) -> Result<Clustering> {
    let (k, run_seed) = match params.k {
        Some(k) => (k, seed),
        None => {
            let k_max = params.k_max.min(points.len());
            let curve = elbow_curve(points, k_max, params.restarts, seed)?;
            let k = if curve.len() < 3 { curve.len() } else { elbow_of(&curve) };
            // same derived seed as the elbow run for this k
            (k, seeds::derive(seed, &[k as u64]))
        }
    };
    kmeans_with_restarts(points, k, params.restarts, run_seed)?.to_clustering(k, run_seed)
}

/// Runs all methods on the given datasets. Dataset `i` uses seeds derived
/// from the master seed and `i`.
pub fn run_datasets(datasets: &[PointSet], config: &BenchConfig) -> BenchReport {
    let mut rows = Vec::with_capacity(datasets.len() * METHODS.len());
    for (id, points) in datasets.iter().enumerate() {
        let shared = compute_distance_matrix(points).and_then(|dist| {
            let d_tilde = resolve_d_tilde(&dist, &config.gbs)?;
            let g = threshold_graph(&dist, d_tilde)?;
            Ok((dist, d_tilde, g))
        });
        for (slot, &method) in METHODS.iter().enumerate() {
            let seed = seeds::derive(config.master_seed, &[1, id as u64, slot as u64]);
            let outcome = match &shared {
                Err(e) => Err(e.to_string()),
                Ok((dist, d_tilde, g)) => {
                    let clustering = match method {
                        Method::Gbs => {
                            let params = ClusterParams { seed, ..config.gbs.clone() };
                            cluster_graph(g, *d_tilde, &params).map(|(c, _)| c)
                        }
                        Method::Kmeans => run_kmeans(points, &config.kmeans, seed),
                        Method::Dbscan => dbscan_with_postprocess(points, config.dbscan.eps, config.dbscan.min_pts, g),
                    };
                    clustering
                        .and_then(|c| evaluate(dist, g, &c))
                        .map(|r| Scores { silhouette: r.silhouette, w: r.weighted_density, cohesion: r.cohesion })
                        .map_err(|e| e.to_string())
                }
            };
            rows.push(BenchRow { dataset_id: id, method, outcome });
        }
    }
    let summary = summarize(&rows);
    BenchReport { rows, summary }
}

/// The datasets a config generates, in order.
pub fn generate_datasets(config: &BenchConfig) -> Result<Vec<PointSet>> {
    config.validate()?;
    (0..config.dataset_count)
        .map(|i| {
            let seed = seeds::derive(config.master_seed, &[0, i as u64]);
            let m = seeds::rng(seeds::derive(seed, &[0])).random_range(config.m_range[0]..=config.m_range[1]);
            generate_dataset(seed, m, &config.generator)
        })
        .collect()
}

pub fn run_benchmark(config: &BenchConfig) -> Result<BenchReport> {
    let datasets = generate_datasets(config)?;
    Ok(run_datasets(&datasets, config))
}

/// Writes `report.csv` and `summary.json` into `dir`, creating it if needed.
pub fn emit_report(report: &BenchReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut csv = csv::Writer::from_path(dir.join("report.csv"))?;
    csv.write_record(["dataset_id", "method", "silhouette", "w", "cohesion", "status"])?;
    for row in &report.rows {
        let id = row.dataset_id.to_string();
        let method = row.method.as_str();
        match &row.outcome {
            Ok(s) => csv.write_record([
                id.as_str(),
                method,
                &s.silhouette.map(|v| v.to_string()).unwrap_or_default(),
                &s.w.to_string(),
                &s.cohesion.to_string(),
                "ok",
            ])?,
            Err(msg) => csv.write_record([id.as_str(), method, "", "", "", &format!("error: {msg}")])?,
        }
    }
    csv.flush()?;
    let mut json = serde_json::to_string_pretty(&report.summary)?;
    json.push('\n');
    fs::write(dir.join("summary.json"), json)?;
    Ok(())
}
