use std::collections::VecDeque;
use std::sync::Arc;

use serde::Serialize;

use super::encoding::calibrate_scaling;
use super::takagi::takagi;
use super::SamplingMode;
use crate::error::{Error, Result};
use crate::matchers::{hafnian_table, pure_torontonian_table, SymMatrix, MAX_TABLE_DIM};
use crate::seeds;

/// Largest number of modes the exact sampler enumerates.
pub const MAX_MODES: usize = MAX_TABLE_DIM;

/// `N` subsets drawn from one encoded graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleBatch {
    /// Sorted node indices with a detected photon, one entry per draw.
    pub samples: Vec<Vec<usize>>,
    pub requested: usize,
    pub seed: u64,
    pub mode: SamplingMode,
}

/// Cumulative subset weights for one connected block of the encoded matrix.
#[derive(Debug)]
struct BlockTable {
    nodes: Vec<usize>,
    cumulative: Vec<f64>,
}

impl BlockTable {
    fn draw<R: rand::Rng>(&self, rng: &mut R, out: &mut Vec<usize>) {
        let total = *self.cumulative.last().expect("tables are never empty");
        let u = rng.random::<f64>() * total;
        let idx = self.cumulative.partition_point(|&x| x <= u).min(self.cumulative.len() - 1);
        let mut bits = idx;
        while bits != 0 {
            let k = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            out.push(self.nodes[k]);
        }
    }
}

/// Exact sampler over node subsets.
///
/// The weight of a subset factorizes over the connected blocks of the encoded
/// matrix, so each block keeps its own table of `2^k` cumulative weights and a
/// draw combines one independent draw per block.
#[derive(Debug)]
pub struct GbsSampler {
    mode: SamplingMode,
    c: f64,
    n_mean: f64,
    blocks: Vec<BlockTable>,
}

fn blocks_of(a: &SymMatrix) -> Vec<Vec<usize>> {
    let n = a.dim();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut block = vec![start];
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for (v, s) in seen.iter_mut().enumerate() {
                if !*s && v != u && a.get(u, v) != 0.0 {
                    *s = true;
                    block.push(v);
                    stack.push(v);
                }
            }
        }
        block.sort_unstable();
        out.push(block);
    }
    out
}

impl GbsSampler {
    /// Encodes `a` at mean photon number `n_mean` and tabulates every subset
    /// weight. A matrix with no nonzero singular value only emits the empty set.
    pub fn new(a: &SymMatrix, n_mean: f64, mode: SamplingMode) -> Result<Self> {
        let c = scaling_for(a, n_mean)?;
        Self::with_scaling(a, c, n_mean, mode)
    }

    fn with_scaling(a: &SymMatrix, c: f64, n_mean: f64, mode: SamplingMode) -> Result<Self> {
        let mut blocks = Vec::new();
        for nodes in blocks_of(a) {
            let b = a.submatrix(&nodes).scaled(c);
            let mut weights = match mode {
                SamplingMode::PnrPostselected => {
                    let mut t = hafnian_table(&b)?;
                    t.iter_mut().for_each(|h| *h *= *h);
                    t
                }
                SamplingMode::Threshold => pure_torontonian_table(&b)?,
            };
            let mut acc = 0.0;
            for w in &mut weights {
                acc += *w;
                *w = acc;
            }
            if !(acc > 0.0) || !acc.is_finite() {
                return Err(Error::Degenerate(format!("total subset weight {acc} on block {nodes:?}")));
            }
            blocks.push(BlockTable { nodes, cumulative: weights });
        }
        Ok(Self { mode, c, n_mean, blocks })
    }

    pub fn mode(&self) -> SamplingMode {
        self.mode
    }

    pub fn scaling(&self) -> f64 {
        self.c
    }

    pub fn n_mean(&self) -> f64 {
        self.n_mean
    }

    /// Normalized probability of drawing exactly `subset` (sorted or not).
    pub fn probability(&self, subset: &[usize]) -> f64 {
        let mut p = 1.0;
        for block in &self.blocks {
            let mask = block
                .nodes
                .iter()
                .enumerate()
                .filter(|(_, v)| subset.contains(v))
                .fold(0usize, |m, (k, _)| m | (1 << k));
            let cum = &block.cumulative;
            let w = cum[mask] - if mask == 0 { 0.0 } else { cum[mask - 1] };
            p *= w / cum[cum.len() - 1];
        }
        p
    }

    pub fn draw<R: rand::Rng>(&self, count: usize, rng: &mut R) -> Vec<Vec<usize>> {
        (0..count)
            .map(|_| {
                let mut s = Vec::new();
                for block in &self.blocks {
                    block.draw(rng, &mut s);
                }
                s.sort_unstable();
                s
            })
            .collect()
    }

    pub fn sample(&self, count: usize, seed: u64) -> SampleBatch {
        let mut rng = seeds::rng(seed);
        SampleBatch { samples: self.draw(count, &mut rng), requested: count, seed, mode: self.mode }
    }
}

fn scaling_for(a: &SymMatrix, n_mean: f64) -> Result<f64> {
    if a.dim() > MAX_MODES {
        return Err(Error::Capacity { modes: a.dim(), max: MAX_MODES });
    }
    let t = takagi(a)?;
    if t.lambda_max() == 0.0 {
        if !(n_mean > 0.0) {
            return Err(Error::invalid(format!("mean photon number must be positive, got {n_mean}")));
        }
        // nothing to squeeze: only the vacuum has weight
        return Ok(0.0);
    }
    calibrate_scaling(t.singular_values(), n_mean)
}

/// Draws `count` subsets from the encoding of `a`.
pub fn sample(a: &SymMatrix, n_mean: f64, count: usize, mode: SamplingMode, seed: u64) -> Result<SampleBatch> {
    Ok(GbsSampler::new(a, n_mean, mode)?.sample(count, seed))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    dim: usize,
    entries: Vec<u64>,
    c: u64,
    mode: SamplingMode,
}

/// Keeps the most recent samplers keyed by the matrix contents, the rescaling
/// and the mode, so repeated rounds on one graph skip the tabulation.
#[derive(Debug)]
pub struct WeightCache {
    capacity: usize,
    entries: VecDeque<(CacheKey, Arc<GbsSampler>)>,
    hits: usize,
    builds: usize,
}

impl Default for WeightCache {
    fn default() -> Self {
        Self::new(2)
    }
}

impl WeightCache {
    pub fn new(capacity: usize) -> Self {
        Self { capacity: capacity.max(1), entries: VecDeque::new(), hits: 0, builds: 0 }
    }

    pub fn get_or_build(&mut self, a: &SymMatrix, n_mean: f64, mode: SamplingMode) -> Result<Arc<GbsSampler>> {
        let c = scaling_for(a, n_mean)?;
        let key =
            CacheKey { dim: a.dim(), entries: a.matrix().iter().map(|v| v.to_bits()).collect(), c: c.to_bits(), mode };
        if let Some((_, s)) = self.entries.iter().find(|(k, _)| *k == key) {
            self.hits += 1;
            return Ok(Arc::clone(s));
        }
        let sampler = Arc::new(GbsSampler::with_scaling(a, c, n_mean, mode)?);
        self.builds += 1;
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back((key, Arc::clone(&sampler)));
        Ok(sampler)
    }

    pub fn sample(
        &mut self,
        a: &SymMatrix,
        n_mean: f64,
        count: usize,
        mode: SamplingMode,
        seed: u64,
    ) -> Result<SampleBatch> {
        Ok(self.get_or_build(a, n_mean, mode)?.sample(count, seed))
    }

    pub fn hits(&self) -> usize {
        self.hits
    }

    pub fn builds(&self) -> usize {
        self.builds
    }
}
