//! Free functions on complex vectors stored as `[c64]`.
//!
//! The inner product is conjugate-linear in its *second* argument:
//! `dot(u, v) = Σ u_j · conj(v_j)`, so `⟨Lu, v⟩` reads as `dot(&lu, &v)`.

use faer::c64;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn zeros(n: usize) -> Vec<c64> {
    vec![c64::new(0.0, 0.0); n]
}

pub fn from_real(x: &[f64]) -> Vec<c64> {
    x.iter().map(|&r| c64::new(r, 0.0)).collect()
}

pub fn dot(u: &[c64], v: &[c64]) -> c64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a * b.conj()).sum()
}

pub fn norm_sqr(v: &[c64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn norm(v: &[c64]) -> f64 {
    norm_sqr(v).sqrt()
}

pub fn real_part(v: &[c64]) -> Vec<c64> {
    v.iter().map(|z| c64::new(z.re, 0.0)).collect()
}

pub fn imag_part(v: &[c64]) -> Vec<c64> {
    v.iter().map(|z| c64::new(z.im, 0.0)).collect()
}

pub fn scale(v: &mut [c64], a: c64) {
    for z in v {
        *z *= a;
    }
}

pub fn scaled(v: &[c64], a: c64) -> Vec<c64> {
    v.iter().map(|z| z * a).collect()
}

/// `y ← y + a·x`
pub fn axpy(a: c64, x: &[c64], y: &mut [c64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn sub(x: &[c64], y: &[c64]) -> Vec<c64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn add(x: &[c64], y: &[c64]) -> Vec<c64> {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

/// Normalizes in place and returns the original norm. Zero vectors are left alone.
pub fn normalize(v: &mut [c64]) -> f64 {
    let nrm = norm(v);
    if nrm > 0.0 {
        scale(v, c64::new(1.0 / nrm, 0.0));
    }
    nrm
}

pub fn is_real(v: &[c64], tol: f64) -> bool {
    v.iter().all(|z| z.im.abs() <= tol)
}

/// Standard complex Gaussian vector (independent N(0,1) real and imaginary parts).
pub fn random_complex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<c64> {
    (0..n)
        .map(|_| c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

pub fn random_real<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<c64> {
    (0..n)
        .map(|_| c64::new(rng.sample(StandardNormal), 0.0))
        .collect()
}
