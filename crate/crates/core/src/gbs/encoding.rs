use nalgebra::DMatrix;

use super::takagi::{takagi, TakagiFactors};
use super::SamplingMode;
use crate::error::{Error, Result};
use crate::matchers::{hafnian_fast, hafnian_repeated, torontonian, SymMatrix};

/// Expected total photon number `Σ (cλ)² / (1 − (cλ)²)` of the encoded state.
pub fn mean_photon_number(c: f64, lambda: &[f64]) -> f64 {
    lambda
        .iter()
        .map(|&l| {
            let x2 = (c * l) * (c * l);
            x2 / (1.0 - x2)
        })
        .sum()
}

/// Finds the rescaling `c ∈ (0, 1/λ_max)` whose state has mean photon number
/// `n_mean`. The photon count is strictly increasing in `c`, so bisection
/// runs until the bracket stops shrinking in floating point.
pub fn calibrate_scaling(lambda: &[f64], n_mean: f64) -> Result<f64> {
    if !(n_mean > 0.0) || !n_mean.is_finite() {
        return Err(Error::invalid(format!("mean photon number must be positive, got {n_mean}")));
    }
    if lambda.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
        return Err(Error::invalid("singular values must be finite and nonnegative"));
    }
    let lambda_max = lambda.iter().copied().fold(0.0, f64::max);
    if lambda_max == 0.0 {
        return Err(Error::NoSolution("all singular values are zero; the graph has no edges".into()));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0 / lambda_max);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mean_photon_number(mid, lambda) < n_mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let err = |c: f64| (mean_photon_number(c, lambda) - n_mean).abs();
    // `hi` may still be the pole 1/λ_max, where the count is infinite
    let c = if hi * lambda_max < 1.0 && err(hi) < err(lo) { hi } else { lo };
    if c <= 0.0 {
        return Err(Error::NoSolution(format!("mean photon number {n_mean} is below floating-point resolution")));
    }
    Ok(c)
}

/// A symmetric matrix prepared for sampling.
#[derive(Debug, Clone)]
pub struct GbsEncoding {
    pub takagi: TakagiFactors,
    pub c: f64,
    pub n_mean: f64,
    pub mode: SamplingMode,
}

impl GbsEncoding {
    pub fn new(a: &SymMatrix, n_mean: f64, mode: SamplingMode) -> Result<Self> {
        let takagi = takagi(a)?;
        let c = calibrate_scaling(takagi.singular_values(), n_mean)?;
        Ok(Self { takagi, c, n_mean, mode })
    }

    pub fn squeezing(&self) -> impl Iterator<Item = f64> + '_ {
        self.takagi.singular_values().iter().map(move |l| self.c * l)
    }

    /// `det σ_Q = Π 1/(1 − (cλ)²)` for the pure encoded state.
    pub fn det_sigma_q(&self) -> f64 {
        self.squeezing().map(|x| 1.0 / (1.0 - x * x)).product()
    }

    /// Probability of detecting no photon at all, `1/sqrt(det σ_Q)`.
    pub fn vacuum_probability(&self) -> f64 {
        self.squeezing().map(|x| (1.0 - x * x).sqrt()).product()
    }

    pub fn implied_mean_photons(&self) -> f64 {
        mean_photon_number(self.c, self.takagi.singular_values())
    }
}

fn check_nodes(n: usize, subset: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    for &v in subset {
        if v >= n || std::mem::replace(&mut seen[v], true) {
            return Err(Error::invalid(format!("subset entry {v} is out of range or repeated")));
        }
    }
    Ok(())
}

/// `[[0, B], [B, 0]]`, the `I − σ_Q⁻¹` matrix of the pure state encoding `B`.
pub(crate) fn click_matrix(b: &SymMatrix) -> SymMatrix {
    let n = b.dim();
    let big = DMatrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, false) => b.get(i, j - n),
        (false, true) => b.get(i - n, j),
        _ => 0.0,
    });
    SymMatrix::new(big).expect("block matrix of a symmetric matrix is symmetric")
}

/// Unnormalized probability of detecting exactly the nodes in `subset`.
///
/// PNR mode: `c^|S| Haf(A_S)²`. Threshold mode: the Torontonian of the click
/// matrix of `cA` restricted to `S`.
pub fn subset_weight(a: &SymMatrix, enc: &GbsEncoding, subset: &[usize]) -> Result<f64> {
    check_nodes(a.dim(), subset)?;
    let b = a.submatrix(subset);
    match enc.mode {
        SamplingMode::PnrPostselected => {
            if subset.len() % 2 == 1 {
                return Ok(0.0);
            }
            let h = hafnian_fast(&b)?;
            Ok(enc.c.powi(subset.len() as i32) * h * h)
        }
        SamplingMode::Threshold => torontonian(&click_matrix(&b.scaled(enc.c))),
    }
}

/// Probability of the photon-count pattern under photon-number-resolving
/// detection: `c^s Haf(A_n)² / (n! sqrt(det σ_Q))`, where `A_n` repeats row
/// and column `i` `n_i` times.
pub fn probability_pnr(a: &SymMatrix, enc: &GbsEncoding, pattern: &[u32]) -> Result<f64> {
    if pattern.len() != a.dim() {
        return Err(Error::invalid(format!("pattern has {} modes, matrix has {}", pattern.len(), a.dim())));
    }
    let s: u32 = pattern.iter().sum();
    let h = hafnian_repeated(a, pattern)?;
    let fact: f64 = pattern.iter().map(|&k| (1..=k).map(f64::from).product::<f64>()).product();
    Ok(enc.c.powi(s as i32) * h * h / fact * enc.vacuum_probability())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    #[test]
    fn calibration_closed_forms() {
        let c = calibrate_scaling(&[1.0], 1.0).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        let c = calibrate_scaling(&[1.0, 1.0], 2.0).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        let tiny = calibrate_scaling(&[1.0], 1e-12).unwrap();
        assert!(tiny > 0.0 && tiny < 1e-5);
    }

    #[test]
    fn calibration_errors() {
        assert!(matches!(calibrate_scaling(&[0.0, 0.0], 1.0), Err(Error::NoSolution(_))));
        assert!(matches!(calibrate_scaling(&[1.0], 0.0), Err(Error::InvalidInput(_))));
        assert!(matches!(calibrate_scaling(&[1.0], -1.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn subset_weight_examples() {
        let edge = SymMatrix::adjacency(&Graph::complete(2));
        let enc = GbsEncoding::new(&edge, 1.0, SamplingMode::PnrPostselected).unwrap();
        assert_eq!(subset_weight(&edge, &enc, &[]).unwrap(), 1.0);
        assert!((subset_weight(&edge, &enc, &[0, 1]).unwrap() - enc.c * enc.c).abs() < 1e-15);
        assert_eq!(subset_weight(&edge, &enc, &[1]).unwrap(), 0.0);
        assert!(subset_weight(&edge, &enc, &[2]).is_err());
    }

    #[test]
    fn pnr_probability_examples() {
        let edge = SymMatrix::adjacency(&Graph::complete(2));
        let enc = GbsEncoding::new(&edge, 1.0, SamplingMode::PnrPostselected).unwrap();
        let vac = 1.0 / enc.det_sigma_q().sqrt();
        assert!((probability_pnr(&edge, &enc, &[0, 0]).unwrap() - vac).abs() < 1e-15);
        let c = enc.c;
        assert!((probability_pnr(&edge, &enc, &[1, 1]).unwrap() - c * c * vac).abs() < 1e-15);
        // repeated matrix of the (2,2) pattern is K_{2,2}: Haf = 2, n! = 4
        let p22 = probability_pnr(&edge, &enc, &[2, 2]).unwrap();
        assert!((p22 - c.powi(4) * 4.0 / 4.0 * vac).abs() < 1e-15);
        assert_eq!(probability_pnr(&edge, &enc, &[2, 1]).unwrap(), 0.0);
    }

    #[test]
    fn encoding_invariants() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)]).unwrap();
        let a = SymMatrix::adjacency(&g);
        let enc = GbsEncoding::new(&a, 2.5, SamplingMode::Threshold).unwrap();
        assert!(enc.squeezing().all(|x| x < 1.0));
        assert!((enc.implied_mean_photons() - 2.5).abs() < 1e-9);
        assert!((enc.vacuum_probability() * enc.det_sigma_q().sqrt() - 1.0).abs() < 1e-12);
    }
}
