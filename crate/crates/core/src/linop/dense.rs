//! Dense materialization and the dense eigen-decomposition oracle.

use faer::{c64, Mat, MatRef, Side};

use super::{vector, HermitianOperator};
use crate::{Error, Result};

pub const DEFAULT_DENSE_CAP: usize = 4096;

/// Full spectrum of a dense matrix, sorted by `(Re, Im)`.
#[derive(Clone, Debug)]
pub struct DenseSpectrum {
    pub values: Vec<c64>,
    /// Unit-norm eigenvectors as columns, in the order of `values`.
    pub vectors: Mat<c64>,
    /// `max_j ‖A·x_j − λ_j·x_j‖`.
    pub residual_bound: f64,
}

impl DenseSpectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, j: usize) -> Vec<c64> {
        self.vectors.col(j).iter().copied().collect()
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }
}

/// Column `j` of the result is `op·e_j`.
pub fn dense_materialize(op: &dyn HermitianOperator, cap: usize) -> Result<Mat<c64>> {
    let n = op.dim();
    if n > cap {
        return Err(Error::CapExceeded { dim: n, cap });
    }
    let mut m = Mat::<c64>::zeros(n, n);
    let mut e = vector::zeros(n);
    let mut col = vector::zeros(n);
    for j in 0..n {
        e[j] = c64::new(1.0, 0.0);
        op.apply_into(&e, &mut col);
        e[j] = c64::new(0.0, 0.0);
        for i in 0..n {
            m[(i, j)] = col[i];
        }
    }
    Ok(m)
}

/// Eigen-decomposition of a dense square matrix.
///
/// Hermitian input yields real eigenvalues and orthonormal eigenvectors;
/// general input yields unit eigenvectors (assumed non-defective).
pub fn dense_eig(m: MatRef<'_, c64>, hermitian: bool) -> Result<DenseSpectrum> {
    dense_eig_capped(m, hermitian, DEFAULT_DENSE_CAP)
}

pub fn dense_eig_capped(m: MatRef<'_, c64>, hermitian: bool, cap: usize) -> Result<DenseSpectrum> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m.ncols(),
        });
    }
    if n > cap {
        return Err(Error::CapExceeded { dim: n, cap });
    }
    for j in 0..n {
        for i in 0..n {
            let z = m[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "matrix entry ({i}, {j}) is not finite"
                )));
            }
        }
    }
    if n == 0 {
        return Ok(DenseSpectrum {
            values: vec![],
            vectors: Mat::zeros(0, 0),
            residual_bound: 0.0,
        });
    }

    let (values, vectors) = if hermitian {
        let evd = m.self_adjoint_eigen(Side::Lower).map_err(|_| Error::EigenFailure {
            best_residual: f64::INFINITY,
        })?;
        let values: Vec<c64> = (0..n).map(|j| c64::new(evd.S()[j].re, 0.0)).collect();
        (values, evd.U().to_owned())
    } else {
        let evd = m.eigen().map_err(|_| Error::EigenFailure {
            best_residual: f64::INFINITY,
        })?;
        let values: Vec<c64> = (0..n).map(|j| evd.S()[j]).collect();
        (values, evd.U().to_owned())
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .re
            .total_cmp(&values[b].re)
            .then(values[a].im.total_cmp(&values[b].im))
    });
    let sorted_values: Vec<c64> = order.iter().map(|&j| values[j]).collect();
    let mut sorted_vectors = Mat::<c64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let nrm = vectors.col(src).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let inv = if nrm > 0.0 { 1.0 / nrm } else { 1.0 };
        for i in 0..n {
            sorted_vectors[(i, dst)] = vectors[(i, src)] * inv;
        }
    }

    let residual_bound = max_residual(m, &sorted_values, sorted_vectors.as_ref());
    if !residual_bound.is_finite() {
        return Err(Error::EigenFailure {
            best_residual: residual_bound,
        });
    }
    Ok(DenseSpectrum {
        values: sorted_values,
        vectors: sorted_vectors,
        residual_bound,
    })
}

fn max_residual(m: MatRef<'_, c64>, values: &[c64], vectors: MatRef<'_, c64>) -> f64 {
    let ax = m * vectors;
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for (j, &lam) in values.iter().enumerate() {
        let r: f64 = (0..n)
            .map(|i| (ax[(i, j)] - lam * vectors[(i, j)]).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r);
    }
    worst
}

/// Frobenius norm, used as a cheap scale for tolerances.
pub fn frobenius(m: MatRef<'_, c64>) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}
