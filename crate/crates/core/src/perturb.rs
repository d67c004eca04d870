//! `L(s) = L + i·s·Q` and shifted solves `(L(s) − σ)x = b`.
//!
//! The projector is split as `Q = D + S + U·Σ·U*` (diagonal mask, sparse
//! orbit coupling, signed low-rank part). The first two join `L − σ` in one
//! sparse (or dense) LU; the low-rank part is handled by Woodbury with a
//! `k × k` capacitance system. Operators without explicit entries are solved
//! by restarted GMRES on the full `L(s) − σ`.

use std::sync::Arc;

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::sparse::linalg::solvers::Lu as SparseLu;
use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat};

use crate::linop::{dense_eig, vector, DenseSpectrum, HermitianOperator, Structure, DEFAULT_DENSE_CAP};
use crate::projectors::{OrthoProjector, RankStructure};
use crate::{Error, Result};

/// Condition estimates of the capacitance matrix above this mean the shift
/// sits on (or numerically at) an eigenvalue.
pub const SINGULAR_CONDITION: f64 = 1e14;

/// Residual contract of [`ShiftedSolveWorkspace::solve`], relative to `‖b‖`.
pub const SOLVE_TOLERANCE: f64 = 1e-9;

/// Systems up to this size are factorized densely even if `L` is sparse.
const DENSE_FACTOR_LIMIT: usize = 600;

const GMRES_RESTART: usize = 60;
const GMRES_MAX_ITERS: usize = 6000;

#[derive(Clone)]
pub struct PerturbedOperator {
    base: Arc<dyn HermitianOperator>,
    projector: OrthoProjector,
    s: f64,
    split: Arc<RankStructure>,
}

impl std::fmt::Debug for PerturbedOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PerturbedOperator")
            .field("dim", &self.dim())
            .field("s", &self.s)
            .field("projector", &self.projector.kind())
            .field("rank", &self.split.rank)
            .finish()
    }
}

impl PerturbedOperator {
    pub fn new(base: Arc<dyn HermitianOperator>, projector: OrthoProjector, s: f64) -> Result<Self> {
        if base.dim() != projector.dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                got: projector.dim(),
            });
        }
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "perturbation strength must be finite and nonnegative, got {s}"
            )));
        }
        let split = Arc::new(projector.rank_structure());
        Ok(Self {
            base,
            projector,
            s,
            split,
        })
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn base(&self) -> &Arc<dyn HermitianOperator> {
        &self.base
    }

    pub fn projector(&self) -> &OrthoProjector {
        &self.projector
    }

    /// Same `L` and `s`, different projector.
    pub fn with_projector(&self, projector: OrthoProjector) -> Result<Self> {
        Self::new(self.base.clone(), projector, self.s)
    }

    pub fn with_s(&self, s: f64) -> Result<Self> {
        Self::new(self.base.clone(), self.projector.clone(), s)
    }

    /// `y ← L·x + i·s·Q·x`.
    pub fn apply_into(&self, x: &[c64], y: &mut [c64]) {
        self.base.apply_into(x, y);
        if self.s != 0.0 {
            let mut qx = vector::zeros(x.len());
            self.projector.apply_into(x, &mut qx);
            let is = c64::new(0.0, self.s);
            vector::axpy(is, &qx, y);
        }
    }

    pub fn apply(&self, v: &[c64]) -> Result<Vec<c64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        let mut y = vector::zeros(v.len());
        self.apply_into(v, &mut y);
        Ok(y)
    }

    /// Factorizes `L(s) − σ` for repeated solves.
    pub fn workspace(&self, sigma: c64) -> Result<ShiftedSolveWorkspace> {
        ShiftedSolveWorkspace::new(self.clone(), sigma)
    }

    /// Dense matrix of `L(s)`.
    pub fn materialize(&self, cap: usize) -> Result<Mat<c64>> {
        let n = self.dim();
        if n > cap {
            return Err(Error::CapExceeded { dim: n, cap });
        }
        let mut m = Mat::<c64>::zeros(n, n);
        let mut e = vector::zeros(n);
        let mut col = vector::zeros(n);
        for j in 0..n {
            e[j] = c64::new(1.0, 0.0);
            self.apply_into(&e, &mut col);
            e[j] = c64::new(0.0, 0.0);
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        Ok(m)
    }
}

pub fn apply_perturbed(p: &PerturbedOperator, v: &[c64]) -> Result<Vec<c64>> {
    p.apply(v)
}

/// Single solve; builds and discards a workspace.
pub fn shifted_solve(p: &PerturbedOperator, sigma: c64, b: &[c64]) -> Result<Vec<c64>> {
    p.workspace(sigma)?.solve(b)
}

/// Full spectrum of the dense materialization of `L(s)`.
pub fn spectrum_dense(p: &PerturbedOperator) -> Result<DenseSpectrum> {
    spectrum_dense_capped(p, DEFAULT_DENSE_CAP)
}

pub fn spectrum_dense_capped(p: &PerturbedOperator, cap: usize) -> Result<DenseSpectrum> {
    let m = p.materialize(cap)?;
    dense_eig(m.as_ref(), false)
}

enum Factor {
    Dense(PartialPivLu<c64>),
    Sparse(SparseLu<usize, c64>),
    Iterative,
}

/// Factorization of `L(s) − σ` bound to one shift.
///
/// `solve` takes `&self`, so one workspace serves concurrent right-hand
/// sides once built.
pub struct ShiftedSolveWorkspace {
    op: PerturbedOperator,
    sigma: c64,
    factor: Factor,
    /// `A₀⁻¹·U` for the Woodbury correction.
    z: Vec<Vec<c64>>,
    /// LU of the capacitance `I + i·s·Σ·U*·A₀⁻¹·U`.
    capacitance: Option<PartialPivLu<c64>>,
    capacitance_condition: f64,
    scale: f64,
}

impl std::fmt::Debug for ShiftedSolveWorkspace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.factor {
            Factor::Dense(_) => "dense",
            Factor::Sparse(_) => "sparse",
            Factor::Iterative => "gmres",
        };
        f.debug_struct("ShiftedSolveWorkspace")
            .field("sigma", &self.sigma)
            .field("factor", &kind)
            .field("rank", &self.z.len())
            .field("capacitance_condition", &self.capacitance_condition)
            .finish()
    }
}

impl ShiftedSolveWorkspace {
    fn new(op: PerturbedOperator, sigma: c64) -> Result<Self> {
        if !(sigma.re.is_finite() && sigma.im.is_finite()) {
            return Err(Error::InvalidParameter(format!("shift {sigma} is not finite")));
        }
        let n = op.dim();
        let scale = op.base.norm_bound() + op.s + sigma.norm();
        let entries = op.base.entries();
        let Some(entries) = entries else {
            return Ok(Self {
                op,
                sigma,
                factor: Factor::Iterative,
                z: Vec::new(),
                capacitance: None,
                capacitance_condition: 1.0,
                scale,
            });
        };

        let split = op.split.clone();
        let is = c64::new(0.0, op.s);
        let mut triplets: Vec<(usize, usize, c64)> = entries;
        for i in 0..n {
            let d = split.diagonal.get(i).copied().unwrap_or(0.0);
            triplets.push((i, i, is * d - sigma));
        }
        for &(i, j, v) in &split.sparse {
            triplets.push((i, j, is * v));
        }

        let dense = n <= DENSE_FACTOR_LIMIT || op.base.structure() == Structure::Dense;
        let factor = if dense {
            let mut a = Mat::<c64>::zeros(n, n);
            for &(i, j, v) in &triplets {
                a[(i, j)] += v;
            }
            Factor::Dense(a.partial_piv_lu())
        } else {
            let t: Vec<Triplet<usize, usize, c64>> =
                triplets.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
            let a = SparseColMat::<usize, c64>::try_new_from_triplets(n, n, &t)
                .map_err(|e| Error::Factorization(format!("{e:?}")))?;
            let lu = a.sp_lu().map_err(|e| Error::Factorization(format!("{e:?}")))?;
            Factor::Sparse(lu)
        };

        let mut ws = Self {
            op,
            sigma,
            factor,
            z: Vec::new(),
            capacitance: None,
            capacitance_condition: 1.0,
            scale,
        };

        let k = split.rank;
        if k > 0 && ws.op.s != 0.0 {
            let mut z = Vec::with_capacity(k);
            for u in &split.factor {
                z.push(ws.base_solve(u));
            }
            let mut c = Mat::<c64>::zeros(k, k);
            for i in 0..k {
                for j in 0..k {
                    let uz = vector::dot(&z[j], &split.factor[i]);
                    c[(i, j)] = is * split.signs[i] * uz + if i == j { 1.0 } else { 0.0 };
                }
            }
            let cond = condition_1(&c);
            if !(cond.is_finite() && cond <= SINGULAR_CONDITION) {
                return Err(Error::SingularShift {
                    re: sigma.re,
                    im: sigma.im,
                });
            }
            ws.capacitance = Some(c.partial_piv_lu());
            ws.capacitance_condition = cond;
            ws.z = z;
        }
        Ok(ws)
    }

    pub fn sigma(&self) -> c64 {
        self.sigma
    }

    pub fn capacitance_condition(&self) -> f64 {
        self.capacitance_condition
    }

    pub fn is_iterative(&self) -> bool {
        matches!(self.factor, Factor::Iterative)
    }

    /// `A₀⁻¹·b` with `A₀ = L + i·s·(D + S) − σ`.
    fn base_solve(&self, b: &[c64]) -> Vec<c64> {
        let n = b.len();
        let mut rhs = Mat::<c64>::from_fn(n, 1, |i, _| b[i]);
        match &self.factor {
            Factor::Dense(lu) => lu.solve_in_place(rhs.as_mut()),
            Factor::Sparse(lu) => lu.solve_in_place(rhs.as_mut()),
            Factor::Iterative => unreachable!("iterative workspaces have no base factor"),
        }
        (0..n).map(|i| rhs[(i, 0)]).collect()
    }

    /// One pass of the Woodbury formula.
    fn direct_solve(&self, b: &[c64]) -> Vec<c64> {
        let mut y = self.base_solve(b);
        if let Some(cap) = &self.capacitance {
            let split = &self.op.split;
            let k = self.z.len();
            let is = c64::new(0.0, self.op.s);
            let mut t = Mat::<c64>::from_fn(k, 1, |i, _| {
                is * split.signs[i] * vector::dot(&y, &split.factor[i])
            });
            cap.solve_in_place(t.as_mut());
            for (j, zj) in self.z.iter().enumerate() {
                vector::axpy(-t[(j, 0)], zj, &mut y);
            }
        }
        y
    }

    fn residual(&self, x: &[c64], b: &[c64]) -> Vec<c64> {
        let mut ax = vector::zeros(x.len());
        self.op.apply_into(x, &mut ax);
        vector::axpy(-self.sigma, x, &mut ax);
        vector::sub(b, &ax)
    }

    /// `x` with `‖(L(s) − σ)x − b‖ ≤ 1e-9·‖b‖`.
    pub fn solve(&self, b: &[c64]) -> Result<Vec<c64>> {
        let n = self.op.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let nb = vector::norm(b);
        if nb == 0.0 {
            return Ok(vector::zeros(n));
        }
        if self.is_iterative() {
            return self.gmres(b, nb);
        }
        let singular = || Error::SingularShift {
            re: self.sigma.re,
            im: self.sigma.im,
        };
        let mut x = self.direct_solve(b);
        let mut r = self.residual(&x, b);
        let mut nr = vector::norm(&r);
        // iterative refinement absorbs mild ill-conditioning of A₀
        for _ in 0..2 {
            if nr <= 1e-12 * nb {
                break;
            }
            let dx = self.direct_solve(&r);
            vector::axpy(c64::new(1.0, 0.0), &dx, &mut x);
            r = self.residual(&x, b);
            nr = vector::norm(&r);
        }
        let nx = vector::norm(&x);
        if !nx.is_finite() || nx > SINGULAR_CONDITION * nb / self.scale.max(f64::MIN_POSITIVE) {
            return Err(singular());
        }
        if nr > SOLVE_TOLERANCE * nb {
            return Err(singular());
        }
        Ok(x)
    }

    fn gmres(&self, b: &[c64], nb: f64) -> Result<Vec<c64>> {
        let n = b.len();
        let tol = 1e-11 * nb;
        let mut x = vector::zeros(n);
        let mut iters = 0;
        let mut nr = nb;
        while iters < GMRES_MAX_ITERS {
            let r = self.residual(&x, b);
            nr = vector::norm(&r);
            if nr <= tol {
                return Ok(x);
            }
            let m = GMRES_RESTART;
            let mut v: Vec<Vec<c64>> = Vec::with_capacity(m + 1);
            let mut h = vec![vec![c64::new(0.0, 0.0); m]; m + 1];
            let mut cs = vec![0.0f64; m];
            let mut sn = vec![c64::new(0.0, 0.0); m];
            let mut g = vec![c64::new(0.0, 0.0); m + 1];
            g[0] = c64::new(nr, 0.0);
            v.push(vector::scaled(&r, c64::new(1.0 / nr, 0.0)));
            let mut used = 0;
            for j in 0..m {
                iters += 1;
                let mut w = vector::zeros(n);
                self.op.apply_into(&v[j], &mut w);
                vector::axpy(-self.sigma, &v[j], &mut w);
                for _ in 0..2 {
                    for (i, vi) in v.iter().enumerate() {
                        let hij = vector::dot(&w, vi);
                        h[i][j] += hij;
                        vector::axpy(-hij, vi, &mut w);
                    }
                }
                let hn = vector::norm(&w);
                h[j + 1][j] = c64::new(hn, 0.0);
                for i in 0..j {
                    let (a, bb) = (h[i][j], h[i + 1][j]);
                    h[i][j] = cs[i] * a + sn[i] * bb;
                    h[i + 1][j] = -sn[i].conj() * a + cs[i] * bb;
                }
                let (c, s) = givens(h[j][j], h[j + 1][j]);
                cs[j] = c;
                sn[j] = s;
                h[j][j] = c * h[j][j] + s * h[j + 1][j];
                h[j + 1][j] = c64::new(0.0, 0.0);
                g[j + 1] = -s.conj() * g[j];
                g[j] *= c;
                used = j + 1;
                if g[j + 1].norm() <= tol || hn == 0.0 {
                    break;
                }
                v.push(vector::scaled(&w, c64::new(1.0 / hn, 0.0)));
            }
            let mut yk = vec![c64::new(0.0, 0.0); used];
            for i in (0..used).rev() {
                let mut acc = g[i];
                for l in i + 1..used {
                    acc -= h[i][l] * yk[l];
                }
                if h[i][i].norm() == 0.0 {
                    return Err(Error::SingularShift {
                        re: self.sigma.re,
                        im: self.sigma.im,
                    });
                }
                yk[i] = acc / h[i][i];
            }
            for (i, yi) in yk.iter().enumerate() {
                vector::axpy(*yi, &v[i], &mut x);
            }
        }
        let r = self.residual(&x, b);
        nr = nr.min(vector::norm(&r));
        if nr <= SOLVE_TOLERANCE * nb {
            Ok(x)
        } else {
            Err(Error::IterativeSolve { residual: nr / nb })
        }
    }
}

/// Complex Givens rotation `(c, s)` with `c` real, zeroing `b` in `(a, b)`.
pub(crate) fn givens(a: c64, b: c64) -> (f64, c64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, c64::new(0.0, 0.0));
    }
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let r = na.hypot(nb);
    let c = na / r;
    let s = (a / na) * b.conj() / r;
    (c, s)
}

/// 1-norm condition number of a small dense matrix.
fn condition_1(c: &Mat<c64>) -> f64 {
    let k = c.nrows();
    let norm1 = |m: &Mat<c64>| -> f64 {
        (0..k)
            .map(|j| (0..k).map(|i| m[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let lu = c.partial_piv_lu();
    let mut inv = Mat::<c64>::identity(k, k);
    lu.solve_in_place(inv.as_mut());
    let ni = norm1(&inv);
    if !ni.is_finite() {
        return f64::INFINITY;
    }
    norm1(c) * ni
}
