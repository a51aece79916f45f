//! Dense linear algebra backed by nalgebra.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;

use crate::error::{bail, Error, Result};

const EIGEN_EPS: f64 = f64::EPSILON;
const EIGEN_MAX_ITER: usize = 0;

/// Eigenpairs of a real symmetric matrix, eigenvalues ascending.
///
/// `vectors` is row-major with row `α` holding the unit eigenvector of
/// `values[α]`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub n: usize,
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

fn to_matrix(data: &[f64], n: usize) -> Result<DMatrix<f64>> {
    if data.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, got: data.len() });
    }
    if data.iter().any(|x| !x.is_finite()) {
        bail!(NumericalDegeneracy, "matrix has non-finite entries");
    }
    // symmetric, so row-major and column-major agree
    Ok(DMatrix::from_column_slice(n, n, data))
}

fn sorted_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    order
}

/// Full eigendecomposition of the symmetric row-major matrix `data`.
pub fn symmetric_eigen(data: &[f64], n: usize) -> Result<SymmetricEigen> {
    let m = to_matrix(data, n)?;
    let Some(eig) = m.try_symmetric_eigen(EIGEN_EPS, EIGEN_MAX_ITER) else {
        bail!(NumericalDegeneracy, "symmetric eigensolver did not converge");
    };
    let raw = eig.eigenvalues.as_slice();
    let order = sorted_order(raw);
    let cols = eig.eigenvectors.as_slice();
    let mut vectors = Vec::with_capacity(n * n);
    for &a in &order {
        vectors.extend_from_slice(&cols[a * n..(a + 1) * n]);
    }
    let values = order.iter().map(|&a| raw[a]).collect();
    Ok(SymmetricEigen { n, values, vectors })
}

/// Eigenvalues only, ascending.
pub fn symmetric_eigenvalues(data: &[f64], n: usize) -> Result<Vec<f64>> {
    let m = to_matrix(data, n)?;
    let mut values: Vec<f64> = m.symmetric_eigenvalues().as_slice().to_vec();
    if values.iter().any(|x| !x.is_finite()) {
        bail!(NumericalDegeneracy, "symmetric eigensolver produced non-finite values");
    }
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// LU factorization of `H - z` for a real symmetric row-major `H`.
pub struct ComplexLu {
    n: usize,
    lu: LU<Complex64, Dyn, Dyn>,
}

impl ComplexLu {
    pub fn shifted(h: &[f64], n: usize, z: Complex64) -> Result<ComplexLu> {
        if h.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: h.len() });
        }
        let m = DMatrix::from_fn(n, n, |i, j| {
            let x = Complex64::new(h[i * n + j], 0.0);
            if i == j { x - z } else { x }
        });
        let lu = m.lu();
        if !lu.is_invertible() {
            bail!(NumericalDegeneracy, "H - z is singular at z = {z}");
        }
        Ok(ComplexLu { n, lu })
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: b.len() });
        }
        let rhs = DVector::from_column_slice(b);
        match self.lu.solve(&rhs) {
            Some(x) if x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) => {
                Ok(x.as_slice().to_vec())
            }
            _ => bail!(NumericalDegeneracy, "LU solve failed"),
        }
    }

    /// Column `j` of `(H - z)^{-1}`.
    pub fn column(&self, j: usize) -> Result<Vec<Complex64>> {
        let mut e = vec![Complex64::new(0.0, 0.0); self.n];
        e[j] = Complex64::new(1.0, 0.0);
        self.solve(&e)
    }
}
