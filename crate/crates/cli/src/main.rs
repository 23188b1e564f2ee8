use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::Value;

use gbs_cluster::baselines::{dbscan_with_postprocess, elbow_select_k, kmeans};
use gbs_cluster::bench::{emit_report, generate_dataset, run_benchmark, BenchConfig, GeneratorParams};
use gbs_cluster::gbs::{sample, SamplingMode};
use gbs_cluster::graph::compute_distance_matrix;
use gbs_cluster::matchers::{count_perfect_matchings, SymMatrix};
use gbs_cluster::metrics::evaluate;
use gbs_cluster::qclust::{gbs_cluster, threshold_graph};
use gbs_cluster::{ClusterParams, Clustering, Graph, PointSet};

#[derive(Parser)]
#[command(name = "gbsclust", version, about = "Graph clustering by simulated Gaussian boson sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic point set as `id,lat,lon` CSV.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster points with the sampling-based method.
    Cluster {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.35)]
        d_percentile: f64,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value = "pnr")]
        mode: SamplingMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON file with further cluster parameters; flags take precedence.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cluster points with k-means.
    Kmeans {
        #[arg(long)]
        input: PathBuf,
        /// `auto` for the elbow rule over 1..=8, or a fixed number.
        #[arg(long, default_value = "auto")]
        k: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cluster points with DBSCAN; noise is attached through the distance graph.
    Dbscan {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.005)]
        eps: f64,
        #[arg(long, default_value_t = 2)]
        min_pts: usize,
        #[arg(long, default_value_t = 0.35)]
        d_percentile: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a clustering JSON against its point set.
    Metrics {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        clustering: PathBuf,
        #[arg(long, default_value_t = 0.35)]
        d_percentile: f64,
    },
    /// Run the synthetic benchmark and write `report.csv` and `summary.json`.
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the Hafnian of a graph's adjacency matrix.
    Hafnian { graph: PathBuf },
    /// Draw node subsets from the encoded graph, one sorted line per draw.
    Sample {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        n_mean: f64,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value = "pnr")]
        mode: SamplingMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn read_points(path: &Path) -> Result<PointSet> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    PointSet::read_csv(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn read_graph(path: &Path) -> Result<Graph> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Graph::read_edge_list(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn write_json(value: &Value, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn distance_graph(points: &PointSet, d_percentile: f64) -> Result<Graph> {
    let dist = compute_distance_matrix(points)?;
    Ok(threshold_graph(&dist, dist.pair_percentile(d_percentile)?)?)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen { seed, m, out } => {
            let pts = generate_dataset(seed, m, &GeneratorParams::default())?;
            let f = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            pts.write_csv(BufWriter::new(f))?;
        }
        Command::Cluster { input, d_percentile, samples, mode, seed, params, out } => {
            let mut p: ClusterParams = match params {
                Some(path) => serde_json::from_str(&fs::read_to_string(&path)?)
                    .with_context(|| format!("parsing {}", path.display()))?,
                None => ClusterParams::default(),
            };
            p.d_percentile = d_percentile;
            p.samples = samples;
            p.mode = mode;
            p.seed = seed;
            let pts = read_points(&input)?;
            let c = gbs_cluster(&pts, &p)?;
            write_json(&c.to_json(&pts), out.as_deref())?;
        }
        Command::Kmeans { input, k, seed, out } => {
            let pts = read_points(&input)?;
            let k = match k.as_str() {
                "auto" => elbow_select_k(&pts, 8.min(pts.len()), seed)?,
                n => n.parse::<usize>().with_context(|| format!("--k expects `auto` or a count, got `{n}`"))?,
            };
            let c = kmeans(&pts, k, seed)?.to_clustering(k, seed)?;
            write_json(&c.to_json(&pts), out.as_deref())?;
        }
        Command::Dbscan { input, eps, min_pts, d_percentile, out } => {
            let pts = read_points(&input)?;
            let g = distance_graph(&pts, d_percentile)?;
            let c = dbscan_with_postprocess(&pts, eps, min_pts, &g)?;
            write_json(&c.to_json(&pts), out.as_deref())?;
        }
        Command::Metrics { input, clustering, d_percentile } => {
            let pts = read_points(&input)?;
            let value: Value = serde_json::from_str(&fs::read_to_string(&clustering)?)?;
            let c = Clustering::from_json(&pts, &value)?;
            let dist = compute_distance_matrix(&pts)?;
            let g = threshold_graph(&dist, dist.pair_percentile(d_percentile)?)?;
            write_json(&serde_json::to_value(evaluate(&dist, &g, &c)?)?, None)?;
        }
        Command::Bench { config, out } => {
            let cfg: BenchConfig = match config {
                Some(path) => serde_json::from_str(&fs::read_to_string(&path)?)
                    .with_context(|| format!("parsing {}", path.display()))?,
                None => BenchConfig::default(),
            };
            let Some(dir) = out.or_else(|| cfg.output_dir.clone()) else {
                bail!("no output directory: pass --out or set output_dir in the config");
            };
            let report = run_benchmark(&cfg)?;
            emit_report(&report, &dir)?;
            for row in report.rows.iter().filter(|r| r.outcome.is_err()) {
                eprintln!("dataset {} {}: {}", row.dataset_id, row.method.as_str(), row.outcome.as_ref().unwrap_err());
            }
            if !report.all_ok() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Hafnian { graph } => {
            println!("{}", count_perfect_matchings(&read_graph(&graph)?)?);
        }
        Command::Sample { graph, n_mean, samples, mode, seed } => {
            let a = SymMatrix::adjacency(&read_graph(&graph)?);
            let batch = sample(&a, n_mean, samples, mode, seed)?;
            let mut out = BufWriter::new(io::stdout().lock());
            for s in &batch.samples {
                let line: Vec<String> = s.iter().map(usize::to_string).collect();
                writeln!(out, "{}", line.join(" "))?;
            }
            out.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
