//! Operators on `ℂⁿ` with the standard inner product.
//!
//! Everything downstream talks to [`HermitianOperator`]; concrete storage is
//! dense, CSR sparse, diagonal, or a matrix-free closure. Operators that can
//! expose their entries (`entries()`) get direct factorizations in
//! [`crate::perturb`]; matrix-free ones fall back to GMRES.

pub mod dense;
pub mod ortho;
pub mod vector;

use std::fmt;

use faer::{c64, Mat};
use rand::Rng;
use serde::Serialize;

use crate::{Error, Result};

pub use dense::{dense_eig, dense_materialize, DenseSpectrum, DEFAULT_DENSE_CAP};
pub use ortho::{orthonormalize, Orthonormalized, DROP_TOLERANCE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    Dense,
    Sparse,
    Diagonal,
    MatrixFree,
}

/// A self-adjoint linear map on `ℂⁿ`.
///
/// Implementors must be immutable after construction; `apply_into` is called
/// concurrently from several threads.
pub trait HermitianOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// `y ← L·x`. Lengths are checked by [`apply`], not here.
    fn apply_into(&self, x: &[c64], y: &mut [c64]);

    fn structure(&self) -> Structure;

    /// True when the operator maps real vectors to real vectors.
    fn is_real(&self) -> bool;

    /// Explicit `(row, col, value)` entries, when the operator has them.
    /// Operators returning `Some` support direct shifted solves.
    fn entries(&self) -> Option<Vec<(usize, usize, c64)>> {
        None
    }

    /// Upper bound (or a reliable estimate) of the spectral norm.
    fn norm_bound(&self) -> f64 {
        power_norm_estimate(self, 40)
    }
}

impl fmt::Debug for dyn HermitianOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HermitianOperator")
            .field("dim", &self.dim())
            .field("structure", &self.structure())
            .field("is_real", &self.is_real())
            .finish()
    }
}

/// Checked application `op·v`.
pub fn apply(op: &dyn HermitianOperator, v: &[c64]) -> Result<Vec<c64>> {
    if v.len() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: v.len(),
        });
    }
    let mut y = vector::zeros(v.len());
    op.apply_into(v, &mut y);
    Ok(y)
}

fn power_norm_estimate<T: HermitianOperator + ?Sized>(op: &T, steps: usize) -> f64 {
    let n = op.dim();
    if n == 0 {
        return 0.0;
    }
    // deterministic, generic start vector
    let mut x: Vec<c64> = (0..n)
        .map(|j| c64::new(1.0 + (j as f64 * 0.618_033_988_7).fract(), 0.0))
        .collect();
    vector::normalize(&mut x);
    let mut y = vector::zeros(n);
    let mut est = 0.0;
    for _ in 0..steps {
        op.apply_into(&x, &mut y);
        est = vector::norm(&y);
        if est == 0.0 {
            return 0.0;
        }
        x.copy_from_slice(&y);
        vector::normalize(&mut x);
    }
    // power iteration underestimates; pad it
    1.05 * est
}

/// Largest relative self-adjointness defect `|⟨Lu,v⟩ − ⟨u,Lv⟩| / (‖u‖‖v‖‖L‖)`
/// over `trials` random pairs.
pub fn self_adjoint_defect<R: Rng + ?Sized>(
    op: &dyn HermitianOperator,
    trials: usize,
    rng: &mut R,
) -> f64 {
    let n = op.dim();
    let scale = op.norm_bound().max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    let mut lu = vector::zeros(n);
    let mut lv = vector::zeros(n);
    for _ in 0..trials {
        let u = vector::random_complex(rng, n);
        let v = vector::random_complex(rng, n);
        op.apply_into(&u, &mut lu);
        op.apply_into(&v, &mut lv);
        let defect = (vector::dot(&lu, &v) - vector::dot(&u, &lv)).norm();
        worst = worst.max(defect / (vector::norm(&u) * vector::norm(&v) * scale));
    }
    worst
}

fn max_row_abs_sum(entries: impl Iterator<Item = (usize, usize, c64)>, n: usize) -> f64 {
    let mut sums = vec![0.0; n];
    for (i, _, v) in entries {
        sums[i] += v.norm();
    }
    sums.into_iter().fold(0.0, f64::max)
}

/// Dense Hermitian matrix.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    mat: Mat<c64>,
    real: bool,
}

impl DenseOperator {
    /// Wraps `mat` after checking that it is square and Hermitian to `1e-12` relative.
    pub fn new(mat: Mat<c64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                got: mat.ncols(),
            });
        }
        let n = mat.nrows();
        let mut scale: f64 = 0.0;
        let mut defect: f64 = 0.0;
        let mut real = true;
        for j in 0..n {
            for i in 0..n {
                let a = mat[(i, j)];
                scale = scale.max(a.norm());
                defect = defect.max((a - mat[(j, i)].conj()).norm());
                real &= a.im == 0.0;
            }
        }
        if defect > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NotHermitian {
                defect: defect / scale,
            });
        }
        Ok(Self { mat, real })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> c64) -> Result<Self> {
        Self::new(Mat::from_fn(n, n, f))
    }

    pub fn matrix(&self) -> &Mat<c64> {
        &self.mat
    }
}

impl HermitianOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.mat.nrows()
    }

    fn apply_into(&self, x: &[c64], y: &mut [c64]) {
        let n = self.dim();
        for yi in y.iter_mut() {
            *yi = c64::new(0.0, 0.0);
        }
        for j in 0..n {
            let xj = x[j];
            if xj == c64::new(0.0, 0.0) {
                continue;
            }
            let col = self.mat.col(j);
            for i in 0..n {
                y[i] += col[i] * xj;
            }
        }
    }

    fn structure(&self) -> Structure {
        Structure::Dense
    }

    fn is_real(&self) -> bool {
        self.real
    }

    fn entries(&self) -> Option<Vec<(usize, usize, c64)>> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let v = self.mat[(i, j)];
                if v != c64::new(0.0, 0.0) {
                    out.push((i, j, v));
                }
            }
        }
        Some(out)
    }

    fn norm_bound(&self) -> f64 {
        let n = self.dim();
        max_row_abs_sum(
            (0..n).flat_map(|j| (0..n).map(move |i| (i, j))).map(|(i, j)| (i, j, self.mat[(i, j)])),
            n,
        )
    }
}

/// Hermitian matrix in compressed sparse row form.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<c64>,
    real: bool,
}

impl SparseOperator {
    /// Builds from triplets, summing duplicates. The result must be Hermitian
    /// to `1e-12` relative to its largest entry.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, c64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, c64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: i.max(j) + 1,
                });
            }
            sorted.push((i, j, v));
        }
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(sorted.len());
        let mut vals: Vec<c64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *vals.last_mut().expect("duplicate follows an entry") += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let op = Self {
            n,
            row_ptr,
            cols,
            vals,
            real: false,
        };
        op.check_hermitian()?;
        let real = op.vals.iter().all(|v| v.im == 0.0);
        Ok(Self { real, ..op })
    }

    /// Real symmetric convenience constructor.
    pub fn from_real_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let t: Vec<_> = triplets
            .iter()
            .map(|&(i, j, v)| (i, j, c64::new(v, 0.0)))
            .collect();
        Self::from_triplets(n, &t)
    }

    fn get(&self, i: usize, j: usize) -> c64 {
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        match row.binary_search(&j) {
            Ok(k) => self.vals[self.row_ptr[i] + k],
            Err(_) => c64::new(0.0, 0.0),
        }
    }

    fn check_hermitian(&self) -> Result<()> {
        let scale = self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut defect: f64 = 0.0;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                defect = defect.max((self.vals[k] - self.get(j, i).conj()).norm());
            }
        }
        if defect > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NotHermitian {
                defect: defect / scale,
            });
        }
        Ok(())
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn diagonal(&self) -> Vec<c64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }
}

impl HermitianOperator for SparseOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, x: &[c64], y: &mut [c64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = c64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }

    fn structure(&self) -> Structure {
        Structure::Sparse
    }

    fn is_real(&self) -> bool {
        self.real
    }

    fn entries(&self) -> Option<Vec<(usize, usize, c64)>> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.push((i, self.cols[k], self.vals[k]));
            }
        }
        Some(out)
    }

    fn norm_bound(&self) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..self.n {
            let s: f64 = self.vals[self.row_ptr[i]..self.row_ptr[i + 1]]
                .iter()
                .map(|v| v.norm())
                .sum();
            best = best.max(s);
        }
        best
    }
}

/// Real diagonal operator.
#[derive(Clone, Debug)]
pub struct DiagonalOperator {
    diag: Vec<f64>,
}

impl DiagonalOperator {
    pub fn new(diag: Vec<f64>) -> Self {
        Self { diag }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(vec![1.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.diag
    }
}

impl HermitianOperator for DiagonalOperator {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply_into(&self, x: &[c64], y: &mut [c64]) {
        for ((yi, xi), d) in y.iter_mut().zip(x).zip(&self.diag) {
            *yi = xi * d;
        }
    }

    fn structure(&self) -> Structure {
        Structure::Diagonal
    }

    fn is_real(&self) -> bool {
        true
    }

    fn entries(&self) -> Option<Vec<(usize, usize, c64)>> {
        Some(
            self.diag
                .iter()
                .enumerate()
                .map(|(i, &d)| (i, i, c64::new(d, 0.0)))
                .collect(),
        )
    }

    fn norm_bound(&self) -> f64 {
        self.diag.iter().map(|d| d.abs()).fold(0.0, f64::max)
    }
}

type ApplyFn = dyn Fn(&[c64], &mut [c64]) + Send + Sync;

/// Operator known only through its action. Self-adjointness is the caller's
/// promise; [`self_adjoint_defect`] can check it.
pub struct MatrixFreeOperator {
    dim: usize,
    real: bool,
    f: Box<ApplyFn>,
}

impl MatrixFreeOperator {
    pub fn new(
        dim: usize,
        real: bool,
        f: impl Fn(&[c64], &mut [c64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            real,
            f: Box::new(f),
        }
    }
}

impl HermitianOperator for MatrixFreeOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_into(&self, x: &[c64], y: &mut [c64]) {
        (self.f)(x, y)
    }

    fn structure(&self) -> Structure {
        Structure::MatrixFree
    }

    fn is_real(&self) -> bool {
        self.real
    }
}
