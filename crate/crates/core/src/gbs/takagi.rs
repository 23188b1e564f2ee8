use nalgebra::{Complex, DMatrix};

use crate::error::Result;
use crate::matchers::SymMatrix;

/// `A = U diag(λ) Uᵀ` with `λ ≥ 0` sorted descending.
///
/// For real symmetric `A` the unitary `U` is a real orthogonal eigenbasis
/// whose columns for negative eigenvalues carry a factor `i`; the basis and
/// the per-column phase are stored separately.
#[derive(Debug, Clone)]
pub struct TakagiFactors {
    basis: DMatrix<f64>,
    singular_values: Vec<f64>,
    imaginary: Vec<bool>,
}

impl TakagiFactors {
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn lambda_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Real orthogonal part of `U`.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Columns of `U` that carry the phase `i`.
    pub fn imaginary_columns(&self) -> &[bool] {
        &self.imaginary
    }

    pub fn unitary(&self) -> DMatrix<Complex<f64>> {
        let n = self.basis.nrows();
        DMatrix::from_fn(n, n, |r, c| {
            let v = self.basis[(r, c)];
            if self.imaginary[c] {
                Complex::new(0.0, v)
            } else {
                Complex::new(v, 0.0)
            }
        })
    }

    /// `U diag(λ) Uᵀ` (plain transpose, not adjoint).
    pub fn reconstruct(&self) -> DMatrix<Complex<f64>> {
        let u = self.unitary();
        let n = u.nrows();
        let scaled = DMatrix::from_fn(n, n, |r, c| u[(r, c)] * self.singular_values[c]);
        scaled * u.transpose()
    }
}

pub fn takagi(a: &SymMatrix) -> Result<TakagiFactors> {
    let n = a.dim();
    if n == 0 {
        return Ok(TakagiFactors { basis: DMatrix::zeros(0, 0), singular_values: vec![], imaginary: vec![] });
    }
    let eig = a.matrix().clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].abs().total_cmp(&eig.eigenvalues[x].abs()).then(x.cmp(&y)));
    let basis = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    let singular_values = order.iter().map(|&k| eig.eigenvalues[k].abs()).collect();
    let imaginary = order.iter().map(|&k| eig.eigenvalues[k] < 0.0).collect();
    Ok(TakagiFactors { basis, singular_values, imaginary })
}
