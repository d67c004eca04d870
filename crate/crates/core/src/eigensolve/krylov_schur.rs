//! Krylov–Schur iteration with locking.
//!
//! One call to [`sweep`] grows a Krylov decomposition from a single start
//! vector, locks the converged prefix of the sorted Schur form as soon as it
//! appears, and stops when the caller's `done` predicate is satisfied.
//! Locked vectors stay orthonormal and span an invariant subspace of the
//! operator; later sweeps work on the deflated operator `(I − YY*)·T`.

use faer::{c64, Mat};

use super::schur::{complex_schur, sort_schur};
use crate::linop::vector;
use crate::Result;

pub(crate) struct SweepConfig {
    pub krylov_dim: usize,
    pub max_restarts: usize,
}

#[derive(Debug, Default)]
pub(crate) struct SweepResult {
    /// Ritz values of `T` locked during this sweep, in locking order.
    pub thetas: Vec<c64>,
    pub restarts: usize,
    pub applications: usize,
    /// False when the restart budget ran out before `done` held.
    pub finished: bool,
}

/// Orthogonalizes `w` against `basis` with two classical Gram–Schmidt passes,
/// returning the accumulated coefficients.
fn orthogonalize(basis: &[Vec<c64>], w: &mut [c64]) -> Vec<c64> {
    let mut h = vec![c64::new(0.0, 0.0); basis.len()];
    for _ in 0..2 {
        let coeffs: Vec<c64> = basis.iter().map(|q| vector::dot(w, q)).collect();
        for ((q, c), hk) in basis.iter().zip(&coeffs).zip(h.iter_mut()) {
            vector::axpy(-*c, q, w);
            *hk += c;
        }
    }
    h
}

/// `Σ_i V[i]·z[i]`.
fn combine(v: &[Vec<c64>], z: &Mat<c64>, col: usize) -> Vec<c64> {
    let n = v[0].len();
    let mut y = vector::zeros(n);
    for (i, vi) in v.iter().enumerate() {
        let c = z[(i, col)];
        if c != c64::new(0.0, 0.0) {
            vector::axpy(c, vi, &mut y);
        }
    }
    y
}

pub(crate) fn sweep(
    apply: &dyn Fn(&[c64]) -> Result<Vec<c64>>,
    locked: &mut Vec<Vec<c64>>,
    start: Vec<c64>,
    cfg: &SweepConfig,
    score: &dyn Fn(c64) -> f64,
    converged: &dyn Fn(f64, c64) -> bool,
    done: &dyn Fn(&[c64]) -> bool,
) -> Result<SweepResult> {
    let n = start.len();
    let mut out = SweepResult::default();
    let mut v0 = start;
    orthogonalize(locked, &mut v0);
    let nv = vector::normalize(&mut v0);
    if nv == 0.0 || locked.len() >= n {
        out.finished = true;
        return Ok(out);
    }

    // Krylov–Schur form: apply(V[:, ..k]) = V[:, ..k+1]·H[..k+1, ..k]
    let mut v: Vec<Vec<c64>> = vec![v0];
    let mut h = Mat::<c64>::zeros(cfg.krylov_dim + 1, cfg.krylov_dim);
    let mut k = 0usize;

    loop {
        let m = cfg.krylov_dim.min(n - locked.len()).max(1);
        let mut invariant = false;
        let mut m_act = m;
        for j in k..m {
            let mut w = apply(&v[j])?;
            out.applications += 1;
            let wn0 = vector::norm(&w);
            orthogonalize(locked, &mut w);
            let coeffs = orthogonalize(&v, &mut w);
            for (i, c) in coeffs.into_iter().enumerate() {
                h[(i, j)] += c;
            }
            let beta = vector::norm(&w);
            h[(j + 1, j)] = c64::new(beta, 0.0);
            if beta <= 1e-13 * wn0 || beta == 0.0 || j + 1 + locked.len() >= n {
                invariant = true;
                m_act = j + 1;
                h[(j + 1, j)] = c64::new(0.0, 0.0);
                break;
            }
            vector::scale(&mut w, c64::new(1.0 / beta, 0.0));
            v.push(w);
        }

        let hm = Mat::from_fn(m_act, m_act, |i, j| h[(i, j)]);
        let (mut t, mut z) = complex_schur(&hm)?;
        sort_schur(&mut t, &mut z, score);
        let beta_last = h[(m_act, m_act - 1)];
        let b: Vec<c64> = (0..m_act).map(|j| beta_last * z[(m_act - 1, j)]).collect();

        let mut p = 0;
        if invariant {
            p = m_act;
        } else {
            while p < m_act && converged(b[p].norm(), t[(p, p)]) {
                p += 1;
            }
        }

        for j in 0..p {
            let mut y = combine(&v[..m_act], &z, j);
            orthogonalize(locked, &mut y);
            if vector::normalize(&mut y) > 0.0 {
                locked.push(y);
                out.thetas.push(t[(j, j)]);
            }
        }
        out.restarts += 1;

        if invariant || locked.len() >= n || (p > 0 && done(&out.thetas)) {
            out.finished = true;
            return Ok(out);
        }
        if out.restarts > cfg.max_restarts {
            return Ok(out);
        }

        // thick restart: keep the next-best half of the unlocked Schur vectors
        let room = cfg.krylov_dim.min(n - locked.len());
        let keep = ((m_act - p) / 2).max(1).min(room.saturating_sub(1)).min(m_act - p);
        let mut nv: Vec<Vec<c64>> = (p..p + keep).map(|j| combine(&v[..m_act], &z, j)).collect();
        let residual_dir = v.pop().expect("non-invariant step leaves a residual vector");
        nv.push(residual_dir);
        let mut nh = Mat::<c64>::zeros(cfg.krylov_dim + 1, cfg.krylov_dim);
        for i in 0..keep {
            for j in i..keep {
                nh[(i, j)] = t[(p + i, p + j)];
            }
            nh[(keep, i)] = b[p + i];
        }
        v = nv;
        h = nh;
        k = keep;
        if k == 0 {
            // only the residual direction survives; restart from it
            let mut r = v.pop().expect("residual vector present");
            orthogonalize(locked, &mut r);
            if vector::normalize(&mut r) == 0.0 {
                out.finished = true;
                return Ok(out);
            }
            v = vec![r];
        }
    }
}
