//! Zernike functions `Z^m_n(r, θ) = R^{|m|}_n(r)·e^{imθ}` sampled on a grid.

use faer::c64;

use super::grid::GridDomain;
use crate::linop::orthonormalize;
use crate::projectors::{span_projector, OrthoProjector};
use crate::{Error, Result};

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `R^m_n(r) = Σ_k (−1)^k (n−k)! / (k! ((n+m)/2−k)! ((n−m)/2−k)!) · r^{n−2k}`
/// for `0 ≤ m ≤ n` with `n − m` even (zero otherwise).
pub fn zernike_radial(n: usize, m: usize, r: f64) -> f64 {
    if m > n || (n - m) % 2 != 0 {
        return 0.0;
    }
    let (p, q) = ((n + m) / 2, (n - m) / 2);
    (0..=q)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * factorial(n - k) / (factorial(k) * factorial(p - k) * factorial(q - k)) * r.powi((n - 2 * k) as i32)
        })
        .sum()
}

pub fn zernike(n: usize, m: i32, x: f64, y: f64) -> c64 {
    let r = x.hypot(y);
    let theta = y.atan2(x);
    c64::from_polar(zernike_radial(n, m.unsigned_abs() as usize, r), m as f64 * theta)
}

/// All `(n, m)` with `n ≤ n_max`, `|m| ≤ n`, `n − |m|` even and `keep(m)`.
pub fn zernike_indices(n_max: usize, keep: impl Fn(i32) -> bool) -> Vec<(usize, i32)> {
    let mut out = Vec::new();
    for n in 0..=n_max {
        let n_i = n as i32;
        for m in (-n_i..=n_i).step_by(2) {
            if keep(m) {
                out.push((n, m));
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct ZernikeBasis {
    pub n_max: usize,
    pub indices: Vec<(usize, i32)>,
    /// Raw samples at the active cell centres, one column per index.
    pub columns: Vec<Vec<c64>>,
    /// Euclidean norms of the raw columns.
    pub column_norms: Vec<f64>,
    /// Dimension of the sampled span on the domain.
    pub rank: usize,
}

impl ZernikeBasis {
    /// Orthogonal projector onto the sampled span, orthonormalized on the
    /// active cells only (functions are extended by zero off the domain).
    pub fn projector(&self) -> Result<OrthoProjector> {
        span_projector(&self.columns)
    }

    /// `‖P(χ_Ω φ)‖² / ‖φ‖²` with `P` the L²(disk)-orthogonal projector onto
    /// the span, i.e. `Σ |⟨Z, φ⟩|² / ‖Z‖²_disk` with `‖Z^m_n‖²_disk = π/(n+1)`.
    ///
    /// This is the value obtained when functions on the domain are read as
    /// functions on the whole disk, extended by zero; it is smaller than the
    /// on-domain τ² because the domain misses part of the disk.
    pub fn disk_tau2(&self, phi: &[c64], h: f64) -> f64 {
        let area = h * h;
        let mass = area * crate::linop::vector::norm_sqr(phi);
        let captured: f64 = self
            .indices
            .iter()
            .zip(&self.columns)
            .map(|(&(n, _), z)| {
                let overlap = area * crate::linop::vector::dot(z, phi);
                overlap.norm_sqr() * (n + 1) as f64 / std::f64::consts::PI
            })
            .sum();
        captured / mass
    }
}

pub fn zernike_basis(domain: &GridDomain, n_max: usize, keep: impl Fn(i32) -> bool) -> Result<ZernikeBasis> {
    let centers = domain.centers();
    let reach = centers.iter().map(|(x, y)| x.hypot(*y)).fold(0.0, f64::max);
    if reach > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "domain reaches radius {reach}; Zernike functions live on the unit disk"
        )));
    }
    let indices = zernike_indices(n_max, keep);
    if indices.is_empty() {
        return Err(Error::EmptyFilter);
    }
    let columns: Vec<Vec<c64>> = indices
        .iter()
        .map(|&(n, m)| centers.iter().map(|&(x, y)| zernike(n, m, x, y)).collect())
        .collect();
    let column_norms = columns.iter().map(|c| crate::linop::vector::norm(c)).collect();
    let rank = orthonormalize(&columns)?.rank;
    Ok(ZernikeBasis {
        n_max,
        indices,
        columns,
        column_norms,
        rank,
    })
}
