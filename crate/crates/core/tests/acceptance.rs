//! One test per acceptance criterion. Each prints a single `[PASS]` or
//! `[FAIL]` line with the measured quantity and the pinned tolerance, then
//! asserts.

mod common;

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use gbs_cluster::bench::{emit_report, run_benchmark, BenchConfig, BenchReport};
use gbs_cluster::gbs::{
    calibrate_scaling, probability_pnr, subset_weight, takagi, GbsEncoding, GbsSampler, SamplingMode,
};
use gbs_cluster::graph::compute_distance_matrix;
use gbs_cluster::matchers::{count_perfect_matchings, hafnian, hafnian_fast, SymMatrix};
use gbs_cluster::metrics::{cohesion, silhouette, weighted_density};
use gbs_cluster::qclust::gbs_cluster;
use gbs_cluster::seeds;
use gbs_cluster::{ClusterParams, Clustering, Graph, Method, PointSet};
use nalgebra::{Complex, DMatrix};
use rand::Rng;

use common::*;

const HAFNIAN_REL_TOL: f64 = 1e-9;
const HAFNIAN_TIME: Duration = Duration::from_secs(10);
const TAKAGI_TOL: f64 = 1e-10;
const CALIBRATION_TOL: f64 = 1e-9;
const CLOSED_FORM_TOL: f64 = 1e-12;
const NORMALIZATION_FLOOR: f64 = 0.999;
const CONSISTENCY_REL_TOL: f64 = 1e-3;
const CONSISTENCY_CUTOFF: u32 = 8;
/// Mean photon number for the consistency check; keeps the mass above the
/// per-mode cutoff far below the tolerance.
const CONSISTENCY_N_MEAN: f64 = 0.5;
const TV_TOL: f64 = 0.02;
const FIDELITY_SAMPLES: usize = 50_000;
const FIDELITY_TIME: Duration = Duration::from_secs(60);
const BENCH_TIME: Duration = Duration::from_secs(30 * 60);
const SILHOUETTE_TOL: f64 = 1e-3;

fn report(n: u32, name: &str, ok: bool, detail: String) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {n}: {name} ({detail})");
    assert!(ok, "criterion {n} failed: {detail}");
}

#[test]
fn criterion_01_hafnian_oracle() {
    let start = Instant::now();
    let mut rng = seeds::rng(101);
    let mut worst = 0.0f64;
    for trial in 0..200 {
        let n = rng.random_range(0..=12);
        let p = rng.random_range(0.2..0.9);
        let g = random_graph(&mut rng, n, p);
        let a = SymMatrix::adjacency(&g);
        let fast = hafnian_fast(&a).unwrap();
        let exact = hafnian(&a).unwrap();
        let rel = (fast - exact).abs() / exact.abs().max(1.0);
        worst = worst.max(rel);
        assert!(rel < HAFNIAN_REL_TOL, "trial {trial}: {fast} vs {exact}");
    }
    let k4 = count_perfect_matchings(&Graph::complete(4)).unwrap();
    let k6 = count_perfect_matchings(&Graph::complete(6)).unwrap();
    let odd = count_perfect_matchings(&Graph::complete(5)).unwrap();
    let elapsed = start.elapsed();
    let ok = worst < HAFNIAN_REL_TOL && (k4, k6, odd) == (3, 15, 0) && elapsed < HAFNIAN_TIME;
    report(
        1,
        "hafnian oracle equivalence",
        ok,
        format!(
            "200 matrices, max rel err {worst:.1e} < {HAFNIAN_REL_TOL:.0e}; K4={k4} K6={k6} K5={odd}; {:.2}s < {}s",
            elapsed.as_secs_f64(),
            HAFNIAN_TIME.as_secs()
        ),
    );
}

#[test]
fn criterion_02_takagi_reconstruction() {
    let mut rng = seeds::rng(202);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..=25);
        let a = random_symmetric(&mut rng, n);
        let t = takagi(&a).unwrap();
        let u = t.unitary();
        let lam = t.singular_values();
        let mut rebuilt = DMatrix::<Complex<f64>>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                rebuilt[(i, j)] = (0..n).map(|k| u[(i, k)] * u[(j, k)] * lam[k]).sum();
            }
        }
        let diff: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (rebuilt[(i, j)] - Complex::new(a.get(i, j), 0.0)).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let scale = a.matrix().norm().max(1.0);
        worst = worst.max(diff / scale);
        assert!(lam.windows(2).all(|w| w[0] >= w[1]) && lam.iter().all(|&l| l >= 0.0));
        let gram = u.adjoint() * &u;
        assert!((gram - DMatrix::<Complex<f64>>::identity(n, n)).norm() < 1e-10);
    }
    report(
        2,
        "takagi reconstruction",
        worst <= TAKAGI_TOL,
        format!("100 matrices M<=25, max ||A-U diag(l) U^T||_F / max(1,||A||_F) = {worst:.1e} <= {TAKAGI_TOL:.0e}"),
    );
}

#[test]
fn criterion_03_scaling_calibration() {
    let mut rng = seeds::rng(303);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let k = rng.random_range(1..=25);
        let lambda: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..5.0)).collect();
        let n_mean = rng.random_range(0.05..20.0);
        let c = calibrate_scaling(&lambda, n_mean).unwrap();
        let implied: f64 = lambda.iter().map(|l| (c * l).powi(2) / (1.0 - (c * l).powi(2))).sum();
        let lmax = lambda.iter().cloned().fold(0.0, f64::max);
        assert!(c * lmax < 1.0);
        worst = worst.max((implied - n_mean).abs());
    }
    let c = calibrate_scaling(&[1.0], 1.0).unwrap();
    let closed = (c - 0.5f64.sqrt()).abs();
    report(
        3,
        "scaling calibration",
        worst <= CALIBRATION_TOL && closed <= CLOSED_FORM_TOL,
        format!(
            "200 random spectra, max |n(c)-n_mean| = {worst:.1e} <= {CALIBRATION_TOL:.0e}; |c-1/sqrt2| = {closed:.1e} <= {CLOSED_FORM_TOL:.0e}"
        ),
    );
}

#[test]
fn criterion_04_normalization() {
    let a = SymMatrix::adjacency(&Graph::complete(2));
    let enc = GbsEncoding::new(&a, 1.0, SamplingMode::PnrPostselected).unwrap();
    let total = |cutoff: u32| -> f64 {
        let mut s = 0.0;
        for n0 in 0..=cutoff {
            for n1 in 0..=cutoff {
                s += probability_pnr(&a, &enc, &[n0, n1]).unwrap();
            }
        }
        s
    };
    let sums: Vec<f64> = (0..=20).map(total).collect();
    let increasing = sums.windows(2).all(|w| w[1] >= w[0]);
    let last = sums[20];
    report(
        4,
        "normalization oracle",
        last > NORMALIZATION_FLOOR && last <= 1.0 + 1e-12 && increasing,
        format!("single edge, n_mean=1: cutoff-20 sum {last:.9} > {NORMALIZATION_FLOOR}, nondecreasing over cutoffs 0..20: {increasing}"),
    );
}

fn patterns_on(support: &[usize], m: usize, cutoff: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![0u32; m]];
    for &i in support {
        out = out
            .into_iter()
            .flat_map(|p| {
                (1..=cutoff).map(move |n| {
                    let mut q = p.clone();
                    q[i] = n;
                    q
                })
            })
            .collect();
    }
    out
}

#[test]
fn criterion_05_threshold_pnr_consistency() {
    let mut worst = 0.0f64;
    let mut checked = 0;
    for m in 1..=4 {
        for g in all_graphs(m) {
            if g.edge_count() == 0 {
                continue;
            }
            let a = SymMatrix::adjacency(&g);
            let pnr = GbsEncoding::new(&a, CONSISTENCY_N_MEAN, SamplingMode::PnrPostselected).unwrap();
            let thr = GbsEncoding::new(&a, CONSISTENCY_N_MEAN, SamplingMode::Threshold).unwrap();
            // one constant for every subset: the vacuum probability
            let k = pnr.vacuum_probability();
            for mask in 0usize..(1 << m) {
                let support: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
                let summed: f64 = patterns_on(&support, m, CONSISTENCY_CUTOFF)
                    .iter()
                    .map(|p| probability_pnr(&a, &pnr, p).unwrap())
                    .sum();
                let w = subset_weight(&a, &thr, &support).unwrap();
                if w * k < 1e-300 {
                    assert!(summed < 1e-15, "{g:?} {support:?}: zero click weight but PNR mass {summed}");
                    continue;
                }
                let rel = (summed - k * w).abs() / (k * w);
                worst = worst.max(rel);
                checked += 1;
            }
        }
    }
    report(
        5,
        "threshold/PNR consistency",
        worst < CONSISTENCY_REL_TOL,
        format!(
            "all graphs M<=4, {checked} supports, n_mean={CONSISTENCY_N_MEAN}, cutoff {CONSISTENCY_CUTOFF}: max rel err {worst:.1e} < {CONSISTENCY_REL_TOL:.0e}"
        ),
    );
}

#[test]
fn criterion_06_sampler_fidelity() {
    let start = Instant::now();
    let g = six_node_fixture();
    let a = SymMatrix::adjacency(&g);
    let mut details = Vec::new();
    let mut ok = true;
    for mode in [SamplingMode::PnrPostselected, SamplingMode::Threshold] {
        let enc = GbsEncoding::new(&a, 3.0, mode).unwrap();
        let subsets: Vec<Vec<usize>> =
            (0usize..64).map(|mask| (0..6).filter(|i| mask & (1 << i) != 0).collect()).collect();
        let weights: Vec<f64> = subsets.iter().map(|s| subset_weight(&a, &enc, s).unwrap()).collect();
        let total: f64 = weights.iter().sum();
        let sampler = GbsSampler::new(&a, 3.0, mode).unwrap();
        let batch = sampler.sample(FIDELITY_SAMPLES, 606);
        let mut counts = [0usize; 64];
        for s in &batch.samples {
            counts[s.iter().fold(0usize, |m, &v| m | (1 << v))] += 1;
        }
        let tv: f64 =
            (0..64).map(|k| (counts[k] as f64 / FIDELITY_SAMPLES as f64 - weights[k] / total).abs()).sum::<f64>() / 2.0;
        ok &= tv < TV_TOL;
        details.push(format!("{mode} TV {tv:.4}"));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < FIDELITY_TIME;
    report(
        6,
        "sampler fidelity",
        ok,
        format!(
            "M=6, N={FIDELITY_SAMPLES}: {} < {TV_TOL}; {:.2}s < {}s",
            details.join(", "),
            elapsed.as_secs_f64(),
            FIDELITY_TIME.as_secs()
        ),
    );
}

#[test]
fn criterion_07_ground_truth_recovery() {
    let (points, labels) = three_cliques();
    let mut worst = 1.0f64;
    for mode in [SamplingMode::PnrPostselected, SamplingMode::Threshold] {
        for seed in 0..10 {
            let params = ClusterParams { d_tilde: Some(1.0), mode, seed, ..Default::default() };
            let c = gbs_cluster(&points, &params).unwrap();
            let ari = adjusted_rand_index(c.assignment(), &labels);
            worst = worst.min(ari);
        }
    }
    let far = PointSet::from_coords(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (2.0, 2.0)]).unwrap();
    let params = ClusterParams { d_tilde: Some(0.5), ..Default::default() };
    let singles = gbs_cluster(&far, &params).unwrap();
    let all_single = singles.len() == 5 && singles.clusters().iter().all(|c| c.len() == 1);
    report(
        7,
        "clustering ground-truth recovery",
        worst == 1.0 && all_single,
        format!("three 5-cliques, 10 seeds x 2 modes: min ARI {worst}; edgeless graph -> {} singletons", singles.len()),
    );
}

struct BenchRuns {
    first: BenchReport,
    files: [Vec<u8>; 2],
    second_files: [Vec<u8>; 2],
    elapsed: Duration,
}

fn bench_runs() -> &'static BenchRuns {
    static RUNS: OnceLock<BenchRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let config = BenchConfig::default();
        let read = |dir: &std::path::Path| {
            [std::fs::read(dir.join("report.csv")).unwrap(), std::fs::read(dir.join("summary.json")).unwrap()]
        };
        let start = Instant::now();
        let first = run_benchmark(&config).unwrap();
        let elapsed = start.elapsed();
        let d1 = tempfile::tempdir().unwrap();
        emit_report(&first, d1.path()).unwrap();
        let second = run_benchmark(&config).unwrap();
        let d2 = tempfile::tempdir().unwrap();
        emit_report(&second, d2.path()).unwrap();
        BenchRuns { first, files: read(d1.path()), second_files: read(d2.path()), elapsed }
    })
}

#[test]
fn criterion_08_paper_trend() {
    let runs = bench_runs();
    let mean = |m: Method| runs.first.method(m).unwrap().means().unwrap();
    let (g, k, d) = (mean(Method::Gbs), mean(Method::Kmeans), mean(Method::Dbscan));
    let w_order = g.w >= d.w && d.w >= k.w;
    let coh_order = g.cohesion >= d.cohesion && d.cohesion >= k.cohesion;
    let (gs, ks, ds) = (g.silhouette.unwrap(), k.silhouette.unwrap(), d.silhouette.unwrap());
    let sil_top = ks >= gs && ks >= ds;
    let ok = w_order && coh_order && sil_top && runs.first.all_ok() && runs.elapsed < BENCH_TIME;
    report(
        8,
        "paper-trend reproduction",
        ok,
        format!(
            "30 datasets; w gbs {:.3} >= dbscan {:.3} >= kmeans {:.3}: {w_order}; cohesion {:.3} >= {:.3} >= {:.3}: {coh_order}; \
             silhouette kmeans {ks:.3} highest vs {gs:.3}/{ds:.3}: {sil_top}; {:.1}s < {}s",
            g.w,
            d.w,
            k.w,
            g.cohesion,
            d.cohesion,
            k.cohesion,
            runs.elapsed.as_secs_f64(),
            BENCH_TIME.as_secs()
        ),
    );
}

#[test]
fn criterion_09_metric_units() {
    let tri = Graph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
    let two =
        Clustering::from_clusters(6, vec![vec![0, 1, 2], vec![3, 4, 5]], Method::Gbs, Default::default()).unwrap();
    let w = weighted_density(&two, &tri).unwrap();
    let coh = cohesion(&two, &tri).unwrap();

    let pairs = PointSet::from_coords(&[(0.0, 0.0), (0.0, 0.01), (10.0, 10.0), (10.0, 10.01)]).unwrap();
    let dist = compute_distance_matrix(&pairs).unwrap();
    let c = Clustering::from_clusters(4, vec![vec![0, 1], vec![2, 3]], Method::Gbs, Default::default()).unwrap();
    let s = silhouette(&dist, &c).unwrap();

    let rows = &bench_rows();
    let in_range = rows.iter().all(|(sil, w, coh)| {
        sil.is_none_or(|v| (-1.0..=1.0).contains(&v)) && (0.0..=1.0).contains(w) && (-1.0..=1.0).contains(coh)
    });
    report(
        9,
        "metric unit checks",
        w == 1.0 && coh == 1.0 && (s - 0.999).abs() <= SILHOUETTE_TOL && in_range,
        format!(
            "two triangles w={w} cohesion={coh}; tight pairs silhouette {s:.5} within {SILHOUETTE_TOL:.0e} of 0.999; {} bench rows in range: {in_range}",
            rows.len()
        ),
    );
}

fn bench_rows() -> Vec<(Option<f64>, f64, f64)> {
    bench_runs()
        .first
        .rows
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok())
        .map(|s| (s.silhouette, s.w, s.cohesion))
        .collect()
}

#[test]
fn criterion_10_determinism() {
    let runs = bench_runs();
    let same = runs.files == runs.second_files;
    let rows = runs.first.rows.len();
    report(
        10,
        "determinism",
        same && rows == 90,
        format!(
            "two runs of the default config: report.csv {} bytes, summary.json {} bytes, byte-identical: {same}; {rows} rows",
            runs.files[0].len(),
            runs.files[1].len()
        ),
    );
}
