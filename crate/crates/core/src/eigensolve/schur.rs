//! Complex Schur decomposition `A = Z·T·Z*` for the small projected matrices
//! of the Krylov–Schur iteration, with reordering of the diagonal.

use faer::{c64, Mat};

use crate::perturb::givens;
use crate::{Error, Result};

const ZERO: c64 = c64 { re: 0.0, im: 0.0 };

/// Returns `(T, Z)` with `T` upper triangular and `Z` unitary.
pub(crate) fn complex_schur(a: &Mat<c64>) -> Result<(Mat<c64>, Mat<c64>)> {
    let n = a.nrows();
    let mut t = a.clone();
    let mut z = Mat::<c64>::identity(n, n);
    hessenberg(&mut t, &mut z);
    hessenberg_qr(&mut t, &mut z)?;
    Ok((t, z))
}

/// Householder reduction to upper Hessenberg form, accumulating into `z`.
fn hessenberg(a: &mut Mat<c64>, z: &mut Mat<c64>) {
    let n = a.nrows();
    for k in 0..n.saturating_sub(2) {
        let xnorm = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() == 0.0 { c64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * xnorm;
        let mut v: Vec<c64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= vn);
        // A ← (I − 2vv*)·A on rows k+1..
        for j in 0..n {
            let dot: c64 = v.iter().enumerate().map(|(r, vr)| vr.conj() * a[(k + 1 + r, j)]).sum();
            for (r, vr) in v.iter().enumerate() {
                a[(k + 1 + r, j)] -= 2.0 * vr * dot;
            }
        }
        // A ← A·(I − 2vv*), Z ← Z·(I − 2vv*) on columns k+1..
        for m in [&mut *a, &mut *z] {
            for i in 0..n {
                let dot: c64 = v.iter().enumerate().map(|(r, vr)| m[(i, k + 1 + r)] * vr).sum();
                for (r, vr) in v.iter().enumerate() {
                    m[(i, k + 1 + r)] -= 2.0 * dot * vr.conj();
                }
            }
        }
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = ZERO;
        }
    }
}

/// Rows `k, k+1` of `m` (columns `cols`) ← `G·rows` with `G = [c s; −s̄ c]`.
fn rotate_rows(m: &mut Mat<c64>, k: usize, c: f64, s: c64, cols: std::ops::Range<usize>) {
    for j in cols {
        let (x, y) = (m[(k, j)], m[(k + 1, j)]);
        m[(k, j)] = c * x + s * y;
        m[(k + 1, j)] = -s.conj() * x + c * y;
    }
}

/// Columns `k, k+1` of `m` (rows `rows`) ← `cols·G*`.
fn rotate_cols(m: &mut Mat<c64>, k: usize, c: f64, s: c64, rows: std::ops::Range<usize>) {
    for i in rows {
        let (x, y) = (m[(i, k)], m[(i, k + 1)]);
        m[(i, k)] = c * x + s.conj() * y;
        m[(i, k + 1)] = -s * x + c * y;
    }
}

/// Single-shift QR on a Hessenberg matrix with Wilkinson shifts.
fn hessenberg_qr(h: &mut Mat<c64>, z: &mut Mat<c64>) -> Result<()> {
    let n = h.nrows();
    if n == 0 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let hnorm = (0..n)
        .flat_map(|j| (0..n).map(move |i| (i, j)))
        .map(|(i, j)| h[(i, j)].norm_sqr())
        .sum::<f64>()
        .sqrt();
    let small = f64::MIN_POSITIVE * (n as f64) / eps;
    let mut ihi = n - 1;
    let mut its = 0usize;
    let mut total = 0usize;
    let budget = 60 * n.max(10);
    while ihi > 0 {
        let mut l = ihi;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let diag = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            let diag = if diag == 0.0 { hnorm } else { diag };
            if sub <= eps * diag || sub <= small {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == ihi {
            ihi -= 1;
            its = 0;
            continue;
        }
        total += 1;
        if total > budget {
            return Err(Error::EigenFailure {
                best_residual: h[(ihi, ihi - 1)].norm(),
            });
        }
        its += 1;
        let shift = if its % 10 == 0 {
            // exceptional shift to break cycles
            h[(ihi, ihi)] + 0.75 * h[(ihi, ihi - 1)].norm()
        } else {
            wilkinson(h[(ihi - 1, ihi - 1)], h[(ihi - 1, ihi)], h[(ihi, ihi - 1)], h[(ihi, ihi)])
        };
        for k in l..ihi {
            let (x, y) = if k == l {
                (h[(l, l)] - shift, h[(l + 1, l)])
            } else {
                (h[(k, k - 1)], h[(k + 1, k - 1)])
            };
            let (c, s) = givens(x, y);
            let from = if k == l { l } else { k - 1 };
            rotate_rows(h, k, c, s, from..n);
            rotate_cols(h, k, c, s, 0..(k + 3).min(ihi + 1));
            rotate_cols(z, k, c, s, 0..n);
            if k > l {
                h[(k + 1, k - 1)] = ZERO;
            }
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = ZERO;
        }
    }
    Ok(())
}

/// Eigenvalue of `[a b; c d]` closer to `d`.
fn wilkinson(a: c64, b: c64, c: c64, d: c64) -> c64 {
    let tr_half = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (tr_half * tr_half - det).sqrt();
    let (r1, r2) = (tr_half + disc, tr_half - disc);
    if (r1 - d).norm() <= (r2 - d).norm() {
        r1
    } else {
        r2
    }
}

/// Swaps diagonal entries `k` and `k+1` of the triangular `t`, updating `z`.
pub(crate) fn swap_adjacent(t: &mut Mat<c64>, z: &mut Mat<c64>, k: usize) {
    let n = t.nrows();
    let (a, b) = (t[(k, k)], t[(k + 1, k + 1)]);
    if a == b {
        return;
    }
    // (t_{k,k+1}, b − a) is the eigenvector for b; rotate it onto e_k
    let (c, s) = givens(t[(k, k + 1)], b - a);
    rotate_rows(t, k, c, s, k..n);
    rotate_cols(t, k, c, s, 0..k + 2);
    rotate_cols(z, k, c, s, 0..n);
    t[(k + 1, k)] = ZERO;
    t[(k, k)] = b;
    t[(k + 1, k + 1)] = a;
}

/// Reorders so that diagonal scores are nonincreasing (selection by swaps).
pub(crate) fn sort_schur(t: &mut Mat<c64>, z: &mut Mat<c64>, score: impl Fn(c64) -> f64) {
    let n = t.nrows();
    for i in 0..n {
        let mut best = i;
        for j in i + 1..n {
            if score(t[(j, j)]) > score(t[(best, best)]) {
                best = j;
            }
        }
        for k in (i..best).rev() {
            swap_adjacent(t, z, k);
        }
    }
}
