//! Hafnian and Torontonian kernels.
//!
//! [`hafnian`] sums over perfect-matching pairings directly and is the
//! reference; [`hafnian_fast`] expands along the lowest row with memoization
//! over the remaining index set and is what everything else calls.
//! [`hafnian_table`] and [`pure_torontonian_table`] evaluate a kernel on every
//! principal submatrix at once, which is what the exact sampler needs.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Absolute tolerance for the symmetry check.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Largest dimension accepted by the bitmask-based kernels.
const MAX_MASK_DIM: usize = 64;

/// Real symmetric matrix. The 0×0 matrix is allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid(format!("matrix is {}x{}, not square", m.nrows(), m.ncols())));
        }
        let n = m.nrows();
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (m[(i, j)], m[(j, i)]);
                if !a.is_finite() || !((a - b).abs() <= SYMMETRY_TOL) {
                    return Err(Error::invalid(format!("matrix is not symmetric at ({i}, {j}): {a} vs {b}")));
                }
            }
            if !m[(i, i)].is_finite() {
                return Err(Error::invalid(format!("non-finite diagonal entry at {i}")));
            }
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("rows must all have length equal to the row count"));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn adjacency(g: &Graph) -> Self {
        let n = g.node_count();
        Self(DMatrix::from_fn(n, n, |i, j| if g.has_edge(i, j) { 1.0 } else { 0.0 }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Principal submatrix on `idx`, in the given order (repeats allowed).
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        Self(DMatrix::from_fn(idx.len(), idx.len(), |a, b| self.0[(idx[a], idx[b])]))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(&self.0 * c)
    }

    /// `PᵀBP` for the permutation sending position `i` to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        self.submatrix(perm)
    }

    /// Row `i` as a bitmask of columns with a nonzero off-diagonal entry.
    fn support_masks(&self) -> Vec<u64> {
        let n = self.dim();
        (0..n).map(|i| (0..n).filter(|&j| j != i && self.0[(i, j)] != 0.0).fold(0u64, |m, j| m | (1 << j))).collect()
    }
}

fn check_mask_dim(n: usize) -> Result<()> {
    if n > MAX_MASK_DIM {
        return Err(Error::invalid(format!("dimension {n} exceeds the kernel limit {MAX_MASK_DIM}")));
    }
    Ok(())
}

/// Hafnian by explicit enumeration of perfect-matching pairings.
///
/// Cost is `(n−1)!!`; this is the reference the other routes are tested against.
pub fn hafnian(b: &SymMatrix) -> Result<f64> {
    let n = b.dim();
    if n % 2 == 1 {
        return Ok(0.0);
    }
    check_mask_dim(n)?;
    fn pairings(b: &SymMatrix, free: u64) -> f64 {
        if free == 0 {
            return 1.0;
        }
        let i = free.trailing_zeros() as usize;
        let rest = free & !(1 << i);
        let mut total = 0.0;
        let mut partners = rest;
        while partners != 0 {
            let j = partners.trailing_zeros() as usize;
            partners &= partners - 1;
            let w = b.get(i, j);
            if w != 0.0 {
                total += w * pairings(b, rest & !(1 << j));
            }
        }
        total
    }
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    Ok(pairings(b, full))
}

/// Hafnian by expansion along the lowest remaining row, memoized on the
/// remaining index set. At most `2^(n−1)` distinct states.
pub fn hafnian_fast(b: &SymMatrix) -> Result<f64> {
    let n = b.dim();
    if n % 2 == 1 {
        return Ok(0.0);
    }
    check_mask_dim(n)?;
    let support = b.support_masks();
    let mut memo: HashMap<u64, f64> = HashMap::new();
    fn expand(b: &SymMatrix, support: &[u64], free: u64, memo: &mut HashMap<u64, f64>) -> f64 {
        if free == 0 {
            return 1.0;
        }
        if let Some(&v) = memo.get(&free) {
            return v;
        }
        let i = free.trailing_zeros() as usize;
        let rest = free & !(1 << i);
        let mut partners = rest & support[i];
        let mut total = 0.0;
        while partners != 0 {
            let j = partners.trailing_zeros() as usize;
            partners &= partners - 1;
            total += b.get(i, j) * expand(b, support, rest & !(1 << j), memo);
        }
        memo.insert(free, total);
        total
    }
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    Ok(expand(b, &support, full, &mut memo))
}

/// Largest dimension for which full subset tables are built.
pub const MAX_TABLE_DIM: usize = 26;

/// Hafnian of every principal submatrix, indexed by the bitmask of kept rows.
/// Odd-size entries are zero; entry 0 is the empty Hafnian, 1.
pub fn hafnian_table(b: &SymMatrix) -> Result<Vec<f64>> {
    let n = b.dim();
    if n > MAX_TABLE_DIM {
        return Err(Error::Capacity { modes: n, max: MAX_TABLE_DIM });
    }
    let support = b.support_masks();
    let mut table = vec![0.0; 1usize << n];
    table[0] = 1.0;
    for mask in 1usize..table.len() {
        if mask.count_ones() % 2 == 1 {
            continue;
        }
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut partners = rest & support[i] as usize;
        let mut total = 0.0;
        while partners != 0 {
            let j = partners.trailing_zeros() as usize;
            partners &= partners - 1;
            total += b.get(i, j) * table[rest & !(1 << j)];
        }
        table[mask] = total;
    }
    Ok(table)
}

/// Number of perfect matchings of `g`.
pub fn count_perfect_matchings(g: &Graph) -> Result<u64> {
    let h = hafnian_fast(&SymMatrix::adjacency(g))?;
    let rounded = h.round();
    if h < -1e-6 || (h - rounded).abs() > 1e-6 {
        return Err(Error::Numeric(format!("hafnian of an adjacency matrix is not a nonnegative integer: {h}")));
    }
    Ok(rounded as u64)
}

/// Hafnian of the matrix obtained by repeating row/column `i` of `b`
/// `reps[i]` times (rows with `reps[i] == 0` are dropped).
///
/// Sums over matching profiles instead of pairings: with `m_ij` the number of
/// pairs joining copies of `i` and `j`,
/// `Haf = Πᵢ nᵢ! · Σ_m Π_{i<j} b_ij^m_ij / m_ij! · Πᵢ b_ii^m_ii / (m_ii! 2^m_ii)`.
/// Every term has the sign of the entries involved, so for nonnegative `b`
/// there is no cancellation.
pub fn hafnian_repeated(b: &SymMatrix, reps: &[u32]) -> Result<f64> {
    let n = b.dim();
    if reps.len() != n {
        return Err(Error::invalid(format!("{} repetition counts for a {n}x{n} matrix", reps.len())));
    }
    let total: u32 = reps.iter().sum();
    if total % 2 == 1 {
        return Ok(0.0);
    }
    let max_rep = reps.iter().copied().max().unwrap_or(0) as usize;
    let mut inv_fact = vec![1.0f64; max_rep + 1];
    for k in 1..=max_rep {
        inv_fact[k] = inv_fact[k - 1] / k as f64;
    }

    // Distribute the remaining copies of the lowest unfinished row among
    // self-pairs and later rows.
    fn profile_sum(b: &SymMatrix, remaining: &mut [u32], inv_fact: &[f64]) -> f64 {
        let Some(i) = remaining.iter().position(|&r| r > 0) else {
            return 1.0;
        };
        let r = remaining[i];
        remaining[i] = 0;
        let mut total = 0.0;
        let bii = b.get(i, i);
        for self_pairs in 0..=r / 2 {
            let left = r - 2 * self_pairs;
            let self_w = if self_pairs == 0 {
                1.0
            } else if bii == 0.0 {
                continue;
            } else {
                (bii / 2.0).powi(self_pairs as i32) * inv_fact[self_pairs as usize]
            };
            total += self_w * spread(b, i, i + 1, left, remaining, inv_fact);
        }
        remaining[i] = r;
        total
    }

    fn spread(b: &SymMatrix, i: usize, j: usize, left: u32, remaining: &mut [u32], inv_fact: &[f64]) -> f64 {
        if left == 0 {
            return profile_sum(b, remaining, inv_fact);
        }
        if j >= remaining.len() {
            return 0.0;
        }
        let bij = b.get(i, j);
        let cap = if bij == 0.0 { 0 } else { left.min(remaining[j]) };
        let mut total = 0.0;
        for m in 0..=cap {
            remaining[j] -= m;
            let w = bij.powi(m as i32) * inv_fact[m as usize];
            total += w * spread(b, i, j + 1, left - m, remaining, inv_fact);
            remaining[j] += m;
        }
        total
    }

    let mut remaining = reps.to_vec();
    let sum = profile_sum(b, &mut remaining, &inv_fact);
    let fact_prod: f64 = reps.iter().map(|&r| (1..=r).map(f64::from).product::<f64>()).product();
    Ok(fact_prod * sum)
}

/// Torontonian of a `2m×2m` symmetric matrix whose rows `z` and `z+m` belong
/// to mode `z`:
/// `Σ_{Z ⊆ modes} (−1)^{m−|Z|} / sqrt(det(I − O_Z))`.
pub fn torontonian(o: &SymMatrix) -> Result<f64> {
    let dim = o.dim();
    if dim % 2 == 1 {
        return Err(Error::invalid(format!("torontonian needs an even dimension, got {dim}")));
    }
    let m = dim / 2;
    if m > 30 {
        return Err(Error::invalid(format!("torontonian over {m} modes is out of reach")));
    }
    let mut total = 0.0;
    for z in 0u64..(1u64 << m) {
        let modes: Vec<usize> = (0..m).filter(|&k| z & (1 << k) != 0).collect();
        let idx: Vec<usize> = modes.iter().copied().chain(modes.iter().map(|&k| k + m)).collect();
        let det = if idx.is_empty() {
            1.0
        } else {
            let sub = o.submatrix(&idx);
            (DMatrix::identity(idx.len(), idx.len()) - sub.matrix()).determinant()
        };
        if !(det > 0.0) {
            return Err(Error::invalid(format!(
                "det(I - O_Z) = {det} is not positive; spectral radius of O must be below 1"
            )));
        }
        let sign = if (m - modes.len()).is_multiple_of(2) { 1.0 } else { -1.0 };
        total += sign / det.sqrt();
    }
    Ok(total)
}

/// For a pure encoding with scaled matrix `b` (spectral radius below 1), the
/// Torontonian of `O_S = [[0, b_S], [b_S, 0]]` for every subset `S`, each
/// multiplied by `sqrt(det(I − b²))`.
///
/// The scaled values are the click-pattern probabilities, so they lie in
/// `[0, 1]` and sum to 1. Principal minors of `I ∓ b` are grown one index at
/// a time with a Cholesky row update, then a subset Möbius transform turns the
/// "no click outside Z" probabilities into exact-pattern ones.
pub fn pure_torontonian_table(b: &SymMatrix) -> Result<Vec<f64>> {
    let n = b.dim();
    if n > MAX_TABLE_DIM {
        return Err(Error::Capacity { modes: n, max: MAX_TABLE_DIM });
    }
    let minus = DMatrix::identity(n, n) - b.matrix();
    let plus = DMatrix::identity(n, n) + b.matrix();

    let mut table = vec![0.0; 1usize << n];
    let mut walker = MinorWalker {
        mats: [minus, plus],
        rows: [Vec::with_capacity(n * n), Vec::with_capacity(n * n)],
        members: Vec::with_capacity(n),
    };
    // log det of the full matrices, for the normalization
    let mut full_logdet = 0.0;
    for k in 0..2 {
        let chol = walker.mats[k]
            .clone()
            .cholesky()
            .ok_or_else(|| Error::invalid("I ± cA is not positive definite; rescaling too large"))?;
        full_logdet += chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum::<f64>();
    }
    walker.visit(0, 0, 0.0, full_logdet, &mut table)?;

    for bit in 0..n {
        let step = 1usize << bit;
        for mask in 0..table.len() {
            if mask & step != 0 {
                table[mask] -= table[mask ^ step];
            }
        }
    }
    for v in &mut table {
        if *v < 0.0 {
            // rounding below zero on near-impossible patterns
            *v = 0.0;
        }
    }
    Ok(table)
}

/// Depth-first walk over index subsets in increasing order, carrying the
/// Cholesky factors of `I − b` and `I + b` restricted to the current subset.
struct MinorWalker {
    mats: [DMatrix<f64>; 2],
    // packed lower-triangular rows, one per member
    rows: [Vec<f64>; 2],
    members: Vec<usize>,
}

impl MinorWalker {
    fn visit(&mut self, mask: usize, next: usize, logdet: f64, full_logdet: f64, table: &mut [f64]) -> Result<()> {
        // sqrt(det(I−b²)_full) / sqrt(det(I−b²)_Z)
        table[mask] = (0.5 * (full_logdet - logdet)).exp();
        let n = self.mats[0].nrows();
        for k in next..n {
            let mut added = 0.0;
            let depth = self.members.len();
            for which in 0..2 {
                let mat = &self.mats[which];
                let rows = &mut self.rows[which];
                // row of L for the new index: solve L y = a_k restricted to members
                let base = rows.len();
                for a in 0..depth {
                    let row_a = tri_offset(a);
                    let mut s = mat[(self.members[a], k)];
                    for c in 0..a {
                        s -= rows[row_a + c] * rows[base + c];
                    }
                    let y = s / rows[row_a + a];
                    rows.push(y);
                }
                let sq: f64 = rows[base..].iter().map(|y| y * y).sum();
                let pivot = mat[(k, k)] - sq;
                if !(pivot > 0.0) {
                    return Err(Error::invalid("principal minor of I ± cA is not positive; rescaling too large"));
                }
                let d = pivot.sqrt();
                rows.push(d);
                added += 2.0 * d.ln();
            }
            self.members.push(k);
            self.visit(mask | (1 << k), k + 1, logdet + added, full_logdet, table)?;
            self.members.pop();
            for rows in &mut self.rows {
                rows.truncate(tri_offset(depth));
            }
        }
        Ok(())
    }
}

fn tri_offset(row: usize) -> usize {
    row * (row + 1) / 2
}
