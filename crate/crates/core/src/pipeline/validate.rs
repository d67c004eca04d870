//! Dense checks of the encoding and decoding bounds.
//!
//! Encoding (eigenpair of `L` → eigenvalue of `L(s)`): with `d` the gap of
//! `λ` and `D` the largest `δ` over its eigenspace,
//! `dist(λ + i·s, Spec L(s)) ≤ s·D²/(1 − 2s/d)` for `s < d/2`, and
//! `≤ s·D` for `s ≤ (1 − D)·d/2`.
//!
//! Decoding (eigenpair `(μ, φ)` of `L(s)` → `L`):
//! `s·δ² ≤ dist(μ, Spec L + i·s) ≤ s·δ`, `dist(Re μ, Spec L) ≤ s·δ·τ`, and
//! the distance from `φ` to the eigenspace of the eigenvalue nearest `Re μ`
//! is at most `s·δ·τ / dist(Re μ, rest of Spec L)`.
//!
//! Margins are `bound − observed`; a bound holds when its margin is at least
//! `−tol`.

use faer::{c64, Mat};
use serde::Serialize;

use crate::linop::{dense_eig, dense_materialize, vector, DenseSpectrum, HermitianOperator, DEFAULT_DENSE_CAP};
use crate::projectors::{tau_delta, OrthoProjector};
use crate::Result;

#[derive(Clone, Debug, Serialize)]
pub struct EncodingEntry {
    pub lambda: f64,
    pub multiplicity: usize,
    /// Distance to the rest of `Spec L` (infinite for a single cluster).
    pub gap: f64,
    pub big_d: f64,
    pub s: f64,
    /// `dist(λ + i·s, Spec L(s))`.
    pub distance: f64,
    /// `s·D − distance` when `s ≤ (1 − D)·d/2`.
    pub margin_linear: Option<f64>,
    /// `s·D²/(1 − 2s/d) − distance` when `s < d/2`.
    pub margin_quadratic: Option<f64>,
    /// Set for repeated eigenvalues (`D` is then taken over the eigenspace).
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EncodingReport {
    pub entries: Vec<EncodingEntry>,
    pub tolerance: f64,
}

impl EncodingReport {
    pub fn all_hold(&self) -> bool {
        self.worst_margin() >= -self.tolerance
    }

    /// Smallest margin over all applicable bounds (`+∞` if none apply).
    pub fn worst_margin(&self) -> f64 {
        self.entries
            .iter()
            .flat_map(|e| [e.margin_linear, e.margin_quadratic])
            .flatten()
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DecodingEntry {
    #[serde(with = "super::serde_c64")]
    pub mu: c64,
    pub tau: f64,
    pub delta: f64,
    /// `dist(μ, Spec L + i·s)`.
    pub distance: f64,
    /// `distance − s·δ²`.
    pub margin_lower: f64,
    /// `s·δ − distance`.
    pub margin_upper: f64,
    /// `s·δ·τ − dist(Re μ, Spec L)`.
    pub margin_real: f64,
    /// `s·δ·τ/gap − ‖(I − P)φ‖` (`None` when the gap is zero).
    pub margin_vector: Option<f64>,
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecodingReport {
    pub entries: Vec<DecodingEntry>,
    pub tolerance: f64,
}

impl DecodingReport {
    pub fn all_hold(&self) -> bool {
        self.worst_margin() >= -self.tolerance
    }

    pub fn worst_margin(&self) -> f64 {
        self.entries
            .iter()
            .flat_map(|e| [Some(e.margin_lower), Some(e.margin_upper), Some(e.margin_real), e.margin_vector])
            .flatten()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Clusters of (sorted) eigenvalues closer than `tol`, as index ranges.
fn clusters(values: &[f64], tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > tol {
            out.push(start..i);
            start = i;
        }
    }
    out
}

struct HermitianOracle {
    values: Vec<f64>,
    vectors: Mat<c64>,
    groups: Vec<std::ops::Range<usize>>,
    scale: f64,
}

fn hermitian_oracle(l: &dyn HermitianOperator) -> Result<HermitianOracle> {
    let m = dense_materialize(l, DEFAULT_DENSE_CAP)?;
    let spec = dense_eig(m.as_ref(), true)?;
    let values = spec.real_values();
    let scale = values.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let groups = clusters(&values, 1e-10 * scale);
    Ok(HermitianOracle {
        values,
        vectors: spec.vectors,
        groups,
        scale,
    })
}

impl HermitianOracle {
    fn column(&self, j: usize) -> Vec<c64> {
        (0..self.vectors.nrows()).map(|i| self.vectors[(i, j)]).collect()
    }

    fn center(&self, g: usize) -> f64 {
        let r = &self.groups[g];
        self.values[r.clone()].iter().sum::<f64>() / r.len() as f64
    }

    /// Distance from `x` to the eigenvalues outside group `g`.
    fn gap_outside(&self, g: usize, x: f64) -> f64 {
        let r = &self.groups[g];
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| !r.contains(i))
            .map(|(_, v)| (v - x).abs())
            .fold(f64::INFINITY, f64::min)
    }

    fn nearest_group(&self, x: f64) -> usize {
        (0..self.groups.len())
            .min_by(|&g, &h| {
                let dg = self.values[self.groups[g].clone()].iter().map(|v| (v - x).abs()).fold(f64::INFINITY, f64::min);
                let dh = self.values[self.groups[h].clone()].iter().map(|v| (v - x).abs()).fold(f64::INFINITY, f64::min);
                dg.total_cmp(&dh)
            })
            .expect("nonempty spectrum")
    }
}

fn materialize_pair(l: &dyn HermitianOperator, q: &OrthoProjector) -> Result<(Mat<c64>, Mat<c64>)> {
    let lm = dense_materialize(l, DEFAULT_DENSE_CAP)?;
    let n = lm.nrows();
    let mut qm = Mat::<c64>::zeros(n, n);
    let mut e = vector::zeros(n);
    let mut col = vector::zeros(n);
    for j in 0..n {
        e[j] = c64::new(1.0, 0.0);
        q.apply_into(&e, &mut col);
        e[j] = c64::new(0.0, 0.0);
        for i in 0..n {
            qm[(i, j)] = col[i];
        }
    }
    Ok((lm, qm))
}

fn perturbed_spectrum(lm: &Mat<c64>, qm: &Mat<c64>, s: f64) -> Result<DenseSpectrum> {
    let m = Mat::from_fn(lm.nrows(), lm.ncols(), |i, j| lm[(i, j)] + c64::new(0.0, s) * qm[(i, j)]);
    dense_eig(m.as_ref(), false)
}

/// `sqrt(λ_max(E*(I − Q)E))` for the orthonormal columns `E`.
fn largest_delta(q: &OrthoProjector, e: &[Vec<c64>]) -> Result<f64> {
    if e.len() == 1 {
        return Ok(tau_delta(q, &e[0])?.1);
    }
    let rest: Vec<Vec<c64>> = e
        .iter()
        .map(|v| Ok(vector::sub(v, &q.apply(v)?)))
        .collect::<Result<_>>()?;
    let k = e.len();
    let g = Mat::from_fn(k, k, |i, j| vector::dot(&rest[j], &e[i]));
    let spec = dense_eig(g.as_ref(), true)?;
    let top = spec.real_values().into_iter().fold(0.0f64, f64::max);
    Ok(top.max(0.0).sqrt())
}

fn encoding_note(multiplicity: usize, linear: bool, quadratic: bool) -> Option<String> {
    let mut parts = Vec::new();
    if multiplicity > 1 {
        parts.push(format!("multiplicity {multiplicity}: D taken over the eigenspace"));
    }
    if !linear {
        parts.push("linear bound not applicable: s > (1 - D) d / 2".to_string());
    }
    if !quadratic {
        parts.push("quadratic bound not applicable: s >= d / 2".to_string());
    }
    (!parts.is_empty()).then(|| parts.join("; "))
}

/// Encoding-bound margins for every eigenvalue cluster of `L` and every `s`.
pub fn validate_encoding(l: &dyn HermitianOperator, q: &OrthoProjector, s_list: &[f64]) -> Result<EncodingReport> {
    let oracle = hermitian_oracle(l)?;
    let tolerance = 1e-9 * oracle.scale;
    let mut per_group = Vec::with_capacity(oracle.groups.len());
    for (g, r) in oracle.groups.iter().enumerate() {
        let e: Vec<Vec<c64>> = r.clone().map(|j| oracle.column(j)).collect();
        let lambda = oracle.center(g);
        per_group.push((lambda, r.len(), oracle.gap_outside(g, lambda), largest_delta(q, &e)?));
    }
    let (lm, qm) = materialize_pair(l, q)?;
    let mut entries = Vec::new();
    for &s in s_list {
        let mu = perturbed_spectrum(&lm, &qm, s)?.values;
        for &(lambda, multiplicity, gap, big_d) in &per_group {
            let target = c64::new(lambda, s);
            let distance = mu.iter().map(|m| (m - target).norm()).fold(f64::INFINITY, f64::min);
            let margin_quadratic = (s < gap / 2.0).then(|| s * big_d * big_d / (1.0 - 2.0 * s / gap) - distance);
            let margin_linear = (s <= (1.0 - big_d) * gap / 2.0).then(|| s * big_d - distance);
            entries.push(EncodingEntry {
                lambda,
                multiplicity,
                gap,
                big_d,
                s,
                distance,
                margin_linear,
                margin_quadratic,
                note: encoding_note(multiplicity, margin_linear.is_some(), margin_quadratic.is_some()),
            });
        }
    }
    Ok(EncodingReport { entries, tolerance })
}

/// Decoding-bound margins for every eigenpair of `L(s)`.
pub fn validate_decoding(l: &dyn HermitianOperator, q: &OrthoProjector, s: f64) -> Result<DecodingReport> {
    let oracle = hermitian_oracle(l)?;
    let tolerance = 1e-9 * oracle.scale;
    let (lm, qm) = materialize_pair(l, q)?;
    let spec = perturbed_spectrum(&lm, &qm, s)?;
    let mut entries = Vec::with_capacity(spec.len());
    for j in 0..spec.len() {
        let mu = spec.values[j];
        let mut phi = spec.vector(j);
        vector::normalize(&mut phi);
        let (tau, delta) = tau_delta(q, &phi)?;
        let distance = oracle
            .values
            .iter()
            .map(|v| (mu - c64::new(*v, s)).norm())
            .fold(f64::INFINITY, f64::min);
        let real_distance = oracle.values.iter().map(|v| (mu.re - v).abs()).fold(f64::INFINITY, f64::min);
        let g = oracle.nearest_group(mu.re);
        let gap = oracle.gap_outside(g, mu.re);
        // ‖(I − P)φ‖ with P onto the nearest eigenspace, formed explicitly
        // (1 − ‖Pφ‖² would lose half the digits)
        let mut rest = phi.clone();
        for i in oracle.groups[g].clone() {
            let e = oracle.column(i);
            vector::axpy(-vector::dot(&phi, &e), &e, &mut rest);
        }
        let off = vector::norm(&rest);
        let bound = s * delta * tau;
        entries.push(DecodingEntry {
            mu,
            tau,
            delta,
            distance,
            margin_lower: distance - s * delta * delta,
            margin_upper: s * delta - distance,
            margin_real: bound - real_distance,
            margin_vector: (gap > 0.0).then(|| bound / gap - off),
            gap,
        });
    }
    Ok(DecodingReport { entries, tolerance })
}
