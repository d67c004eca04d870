//! Probability current `J = Im(φ*∇φ)` and angular-momentum density
//! `Re(φ* L_z φ) = x·J_y − y·J_x` with `L_z = −i(x∂_y − y∂_x)`.

use faer::c64;
use serde::Serialize;

use super::grid::GridDomain;
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct CurrentField {
    pub jx: Vec<f64>,
    pub jy: Vec<f64>,
    /// Local angular momentum; negative means clockwise current.
    pub lz: Vec<f64>,
}

impl CurrentField {
    /// Fraction of cells where `lz` has the sign of its integral, counting
    /// only cells with `|lz|` above `floor` times the largest value.
    pub fn sign_uniformity(&self, floor: f64) -> f64 {
        let total: f64 = self.lz.iter().sum();
        let top = self.lz.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let counted: Vec<f64> = self.lz.iter().copied().filter(|v| v.abs() > floor * top).collect();
        if counted.is_empty() {
            return 1.0;
        }
        let agree = counted.iter().filter(|v| v.signum() == total.signum()).count();
        agree as f64 / counted.len() as f64
    }
}

/// Derivative along one axis at coordinate `k`: centred when both
/// neighbours are active, one-sided when only one is, zero otherwise.
fn derivative(domain: &GridDomain, phi: &[c64], k: usize, axis: usize) -> c64 {
    let (i, j) = domain.cell(k);
    let at = |di: isize| -> Option<usize> {
        let (ii, jj) = if axis == 0 {
            (i as isize + di, j as isize)
        } else {
            (i as isize, j as isize + di)
        };
        if ii < 0 || jj < 0 {
            None
        } else {
            domain.coordinate(ii as usize, jj as usize)
        }
    };
    let h = domain.h;
    match (at(-1), at(1)) {
        (Some(a), Some(b)) => (phi[b] - phi[a]) / (2.0 * h),
        (None, Some(b)) => (phi[b] - phi[k]) / h,
        (Some(a), None) => (phi[k] - phi[a]) / h,
        (None, None) => c64::new(0.0, 0.0),
    }
}

pub fn probability_current(domain: &GridDomain, phi: &[c64]) -> Result<CurrentField> {
    let n = domain.n_active();
    if phi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: phi.len(),
        });
    }
    let mut out = CurrentField {
        jx: Vec::with_capacity(n),
        jy: Vec::with_capacity(n),
        lz: Vec::with_capacity(n),
    };
    for k in 0..n {
        let conj = phi[k].conj();
        let jx = (conj * derivative(domain, phi, k, 0)).im;
        let jy = (conj * derivative(domain, phi, k, 1)).im;
        let (x, y) = domain.center(k);
        out.jx.push(jx);
        out.jy.push(jy);
        out.lz.push(x * jy - y * jx);
    }
    Ok(out)
}
