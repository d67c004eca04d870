//! The constrained eigensolver driver.
//!
//! [`run`] solves for the eigenpairs `(μ, φ)` of `L(s)` near `[a, b] + i·s`,
//! optionally replaces `φ` by its canonical real rescaling and/or refines it
//! with inverse iteration on `L`, then accepts `(λ̃, ψ̃)` when
//! `δ(ψ̃) ≤ δ*` and `λ̃ ∈ [a, b]`. Everything the solver returned is kept in
//! the report, with the reason for each rejection.
//!
//! [`avoid_run`] searches for the eigenvectors that are *far* from `W` by
//! running the same procedure against `W⊥` with tolerance `1 − δ*`.

mod validate;

use std::sync::Arc;
use std::time::Instant;

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::eigensolve::{find_in_region, shifted_inverse_iteration, RegionSpec, RitzPair, SolverDiagnostics, SolverParams};
use crate::linop::{vector, HermitianOperator};
use crate::perturb::PerturbedOperator;
use crate::projectors::{tau_delta, OrthoProjector};
use crate::{Error, Result};

pub use validate::{
    validate_decoding, validate_encoding, DecodingEntry, DecodingReport, EncodingEntry, EncodingReport,
};

/// Serializes a complex number as `[re, im]`.
pub mod serde_c64 {
    use faer::c64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &c64, s: S) -> std::result::Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<c64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(c64::new(re, im))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Eigenvectors close to `W`.
    #[default]
    Near,
    /// Eigenvectors close to `W⊥` ("pattern-breaking" modes).
    Avoid,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PostProcess {
    #[default]
    Off,
    InverseIteration { steps: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    /// `[a, b]`, `s` and the acceptance tolerance `δ*`.
    pub region: RegionSpec,
    #[serde(default)]
    pub mode: SearchMode,
    #[serde(default)]
    pub post_process: PostProcess,
    #[serde(default)]
    pub rescale_real: bool,
    /// Radius (in units of `s`) of the solver's search region. `None` uses
    /// the acceptance tolerance; a larger value also reports the nearby
    /// rejected pairs.
    #[serde(default)]
    pub search_delta: Option<f64>,
}

impl SearchSpec {
    pub fn new(region: RegionSpec) -> Self {
        Self {
            region,
            mode: SearchMode::Near,
            post_process: PostProcess::Off,
            rescale_real: false,
            search_delta: None,
        }
    }

    /// `τ²` threshold equivalent to `δ*`.
    pub fn tau2_threshold(&self) -> f64 {
        1.0 - self.region.delta_star * self.region.delta_star
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionReason {
    None,
    OutOfInterval,
    BelowTauThreshold,
}

#[derive(Clone, Debug, Serialize)]
pub struct CandidateEigenpair {
    #[serde(with = "serde_c64")]
    pub mu: c64,
    /// Unit eigenvector of `L(s)`.
    #[serde(skip)]
    pub phi: Vec<c64>,
    pub tau2: f64,
    pub delta2: f64,
    /// `‖L(s)φ − μφ‖` as reported by the solver.
    pub solver_residual: f64,
    /// `‖(L − Re μ)φ‖`.
    pub residual_complex: f64,
    /// `‖(L − Re μ)Re(cφ)‖` after canonical rescaling; real `L` only.
    pub residual_real: Option<f64>,
    /// `|Im μ − s·τ²|`.
    pub im_identity_defect: f64,
    /// `λ̃` and `τ²(ψ̃)`, the quantities the filter looks at.
    pub lambda: f64,
    pub final_tau2: f64,
    /// `τ²` of the final vector under a second convention, when the problem
    /// defines one (see `problems::Tau2Convention`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau2_alt: Option<f64>,
    pub accepted: bool,
    pub reason: RejectionReason,
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    /// `‖(L − λ̃)ψ̃‖` with `‖ψ̃‖ = 1`.
    pub residual: f64,
    /// `s·δ·τ ≥ dist(Re μ, Spec L)`.
    pub eigenvalue_bound: f64,
    /// `s·δ·τ / gap`, where `gap` estimates the distance from `Re μ` to the
    /// rest of the spectrum using the other candidates.
    pub eigenvector_bound: Option<f64>,
    pub gap_estimate: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AcceptedPair {
    /// Index into the candidate list.
    pub candidate: usize,
    pub lambda: f64,
    /// Unit vector.
    #[serde(skip)]
    pub psi: Vec<c64>,
    pub tau2: f64,
    pub certificate: Certificate,
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub threads: usize,
    pub version: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timings {
    pub solve_seconds: f64,
    pub postprocess_seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub spec: SearchSpec,
    /// "near" or "pattern_breaking".
    pub label: String,
    /// Set when the solver found nothing in the region.
    pub message: Option<String>,
    pub candidates: Vec<CandidateEigenpair>,
    pub accepted: Vec<AcceptedPair>,
    pub diagnostics: SolverDiagnostics,
    pub timings: Timings,
    pub provenance: Provenance,
}

impl RunReport {
    pub fn accepted_indices(&self) -> Vec<usize> {
        self.accepted.iter().map(|a| a.candidate).collect()
    }
}

fn shifted_residual(l: &dyn HermitianOperator, shift: f64, v: &[c64]) -> f64 {
    let mut r = vector::zeros(v.len());
    l.apply_into(v, &mut r);
    vector::axpy(c64::new(-shift, 0.0), v, &mut r);
    vector::norm(&r)
}

/// Closeness measures and residuals of one solver pair. `φ` is normalized
/// here; the remaining fields are filled in by [`run`].
pub fn metrics(l: &dyn HermitianOperator, q: &OrthoProjector, s: f64, pair: &RitzPair) -> Result<CandidateEigenpair> {
    let mut phi = pair.phi.clone();
    if vector::normalize(&mut phi) == 0.0 {
        return Err(Error::ZeroVector);
    }
    let (tau, delta) = tau_delta(q, &phi)?;
    let tau2 = tau * tau;
    Ok(CandidateEigenpair {
        mu: pair.mu,
        residual_complex: shifted_residual(l, pair.mu.re, &phi),
        phi,
        tau2,
        delta2: delta * delta,
        solver_residual: pair.residual,
        residual_real: None,
        im_identity_defect: (pair.mu.im - s * tau2).abs(),
        lambda: pair.mu.re,
        final_tau2: tau2,
        tau2_alt: None,
        accepted: false,
        reason: RejectionReason::None,
    })
}

#[derive(Clone, Debug)]
pub struct Rescaled {
    /// Unit complex `c = e^{iθ}`.
    pub c: c64,
    /// `Re(c·φ)`, stored as a complex vector with zero imaginary part.
    pub phi: Vec<c64>,
    /// `‖(L − Re μ)Re(c·φ)‖`.
    pub residual_real: f64,
}

/// Smallest-eigenvalue eigenvector `(x, y)` of the symmetric `[[a, b], [b, c]]`,
/// or `None` when the two eigenvalues coincide to within `tol`.
fn min_eigvec_2x2(a: f64, b: f64, c: f64, tol: f64) -> Option<(f64, f64)> {
    let half_gap = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    if 2.0 * half_gap <= tol {
        return None;
    }
    let lmin = 0.5 * (a + c) - half_gap;
    // rows of (G − λ_min) are orthogonal to the eigenvector; use the larger one
    let (x, y) = if (a - lmin).abs() >= (c - lmin).abs() {
        (-b, a - lmin)
    } else {
        (c - lmin, -b)
    };
    let n = x.hypot(y);
    Some((x / n, y / n))
}

fn real_dot(u: &[c64], v: &[c64]) -> f64 {
    vector::dot(u, v).re
}

/// The rotation `c = e^{iθ}` minimizing `‖(L − Re μ)Re(c·φ)‖`.
///
/// With `r₁ = (L − Re μ)Re φ` and `r₂ = (L − Re μ)Im φ` the residual of
/// `Re(e^{iθ}φ) = cos θ·Re φ − sin θ·Im φ` is `‖cos θ·r₁ − sin θ·r₂‖`, a
/// quadratic form in `(cos θ, sin θ)`. When the form is (numerically) a
/// multiple of the identity every `θ` is optimal and the one maximizing
/// `‖Re(c·φ)‖` is used. The sign makes the largest-magnitude entry positive.
pub fn canonical_rescale(l: &dyn HermitianOperator, mu: c64, phi: &[c64]) -> Result<Rescaled> {
    if !l.is_real() {
        return Err(Error::NotReal);
    }
    if phi.len() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            got: phi.len(),
        });
    }
    let re = vector::real_part(phi);
    let im = vector::imag_part(phi);
    let n = phi.len();
    let shifted = |v: &[c64]| {
        let mut r = vector::zeros(n);
        l.apply_into(v, &mut r);
        vector::axpy(c64::new(-mu.re, 0.0), v, &mut r);
        // L is real, so roundoff is the only source of imaginary parts
        r.iter_mut().for_each(|z| z.im = 0.0);
        r
    };
    let r1 = shifted(&re);
    let r2 = shifted(&im);
    let (g11, g12, g22) = (real_dot(&r1, &r1), -real_dot(&r1, &r2), real_dot(&r2, &r2));
    let floor = (1e-14 * (l.norm_bound().max(1.0)) * vector::norm(phi)).powi(2);
    let tol = 1e-12 * (g11 + g22) + floor;
    let (cos, sin) = match min_eigvec_2x2(g11, g12, g22, tol) {
        Some(v) => v,
        None => {
            // maximize ‖cos θ·Re φ − sin θ·Im φ‖: minimize the negated form
            let (h11, h12, h22) = (real_dot(&re, &re), -real_dot(&re, &im), real_dot(&im, &im));
            min_eigvec_2x2(-h11, -h12, -h22, 1e-14 * (h11 + h22)).unwrap_or((1.0, 0.0))
        }
    };
    let mut c = c64::new(cos, sin);
    let mut out: Vec<c64> = re
        .iter()
        .zip(&im)
        .map(|(x, y)| c64::new(cos * x.re - sin * y.re, 0.0))
        .collect();
    let big = out.iter().map(|z| z.re).fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if big < 0.0 {
        c = -c;
        out.iter_mut().for_each(|z| z.re = -z.re);
    }
    if vector::norm(&out) == 0.0 {
        return Err(Error::ZeroVector);
    }
    let residual_real = shifted_residual(l, mu.re, &out);
    Ok(Rescaled {
        c,
        phi: out,
        residual_real,
    })
}

/// Both sides of `‖(L − Re μ)Re φ‖² = s²(τ⁴‖(I−Q)Im φ‖² + δ⁴‖Q Im φ‖²)`.
pub fn residual_real_identity_check(
    l: &dyn HermitianOperator,
    q: &OrthoProjector,
    s: f64,
    mu: c64,
    phi: &[c64],
) -> Result<(f64, f64)> {
    if !l.is_real() {
        return Err(Error::NotReal);
    }
    let (tau, delta) = tau_delta(q, phi)?;
    let re = vector::real_part(phi);
    let im = vector::imag_part(phi);
    let lhs = shifted_residual(l, mu.re, &re).powi(2);
    let q_im = q.apply(&im)?;
    let rest = vector::sub(&im, &q_im);
    let rhs = s * s * (tau.powi(4) * vector::norm_sqr(&rest) + delta.powi(4) * vector::norm_sqr(&q_im));
    Ok((lhs, rhs))
}

/// Distance from `Re μ` of candidate `k` to the nearest other candidate's
/// eigenvalue interval `Re μⱼ ± s·δⱼ·τⱼ`. `None` with a single candidate.
fn gap_estimate(cands: &[CandidateEigenpair], k: usize, s: f64) -> Option<f64> {
    let x = cands[k].mu.re;
    cands
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(_, c)| ((x - c.mu.re).abs() - s * (c.delta2 * c.tau2).sqrt()).max(0.0))
        .min_by(f64::total_cmp)
}

/// Solve in the region, measure, rescale, filter. In avoid mode this is [`avoid_run`].
pub fn run(l: Arc<dyn HermitianOperator>, q: &OrthoProjector, spec: &SearchSpec, params: &SolverParams) -> Result<RunReport> {
    match spec.mode {
        SearchMode::Near => run_near(l, q, spec, params, "near"),
        SearchMode::Avoid => avoid_run(l, q, spec, params),
    }
}

/// Searches for eigenvectors within `δ*` of `W⊥`: the near-mode run against
/// `I − Q` with tolerance `1 − δ*`.
pub fn avoid_run(l: Arc<dyn HermitianOperator>, q: &OrthoProjector, spec: &SearchSpec, params: &SolverParams) -> Result<RunReport> {
    let flipped = 1.0 - spec.region.delta_star;
    if flipped <= 0.0 {
        return Err(Error::InvalidParameter("avoid mode needs delta_star < 1".into()));
    }
    let mut inner = *spec;
    inner.mode = SearchMode::Near;
    inner.region.delta_star = flipped;
    let mut report = run_near(l, &q.clone().complement(), &inner, params, "pattern_breaking")?;
    report.spec = *spec;
    Ok(report)
}

fn run_near(
    l: Arc<dyn HermitianOperator>,
    q: &OrthoProjector,
    spec: &SearchSpec,
    params: &SolverParams,
    label: &str,
) -> Result<RunReport> {
    spec.region.validate()?;
    let search_delta = spec.search_delta.unwrap_or(spec.region.delta_star);
    let mut search = spec.region;
    search.delta_star = search_delta;
    search.validate()?;
    if spec.rescale_real && !l.is_real() {
        return Err(Error::NotReal);
    }
    let s = spec.region.s;
    let p = PerturbedOperator::new(l.clone(), q.clone(), s)?;

    let t0 = Instant::now();
    let outcome = find_in_region(&p, &search, params)?;
    let solve_seconds = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let mut candidates = outcome
        .pairs
        .iter()
        .map(|pair| metrics(l.as_ref(), q, s, pair))
        .collect::<Result<Vec<_>>>()?;

    let (a, b) = (spec.region.a, spec.region.b);
    let widen = 1e-12 * a.abs().max(b.abs());
    let d2_max = spec.region.delta_star * spec.region.delta_star;
    let mut accepted = Vec::new();
    for k in 0..candidates.len() {
        let cand = &candidates[k];
        let mut psi = cand.phi.clone();
        let mut residual_real = None;
        if spec.rescale_real {
            let r = canonical_rescale(l.as_ref(), cand.mu, &psi)?;
            residual_real = Some(r.residual_real);
            psi = r.phi;
        }
        vector::normalize(&mut psi);
        let mut lambda = cand.mu.re;
        if let PostProcess::InverseIteration { steps } = spec.post_process {
            let it = shifted_inverse_iteration(l.clone(), lambda, &psi, steps)?;
            lambda = it.lambda;
            psi = it.psi;
            vector::normalize(&mut psi);
        }
        let (tau, delta) = tau_delta(q, &psi)?;
        let reason = if lambda < a - widen || lambda > b + widen {
            RejectionReason::OutOfInterval
        } else if delta * delta > d2_max {
            RejectionReason::BelowTauThreshold
        } else {
            RejectionReason::None
        };
        let gap = gap_estimate(&candidates, k, s);
        let bound = s * (cand.delta2 * cand.tau2).sqrt();
        let cand = &mut candidates[k];
        cand.residual_real = residual_real;
        cand.lambda = lambda;
        cand.final_tau2 = tau * tau;
        cand.reason = reason;
        cand.accepted = reason == RejectionReason::None;
        if cand.accepted {
            accepted.push(AcceptedPair {
                candidate: k,
                lambda,
                tau2: tau * tau,
                certificate: Certificate {
                    residual: shifted_residual(l.as_ref(), lambda, &psi),
                    eigenvalue_bound: bound,
                    eigenvector_bound: gap.filter(|g| *g > 0.0).map(|g| bound / g),
                    gap_estimate: gap,
                },
                psi,
            });
        }
    }
    let postprocess_seconds = t1.elapsed().as_secs_f64();
    let message = candidates.is_empty().then(|| "No constrained eigenpairs exist".to_string());
    Ok(RunReport {
        spec: *spec,
        label: label.to_string(),
        message,
        candidates,
        accepted,
        diagnostics: outcome.diagnostics,
        timings: Timings {
            solve_seconds,
            postprocess_seconds,
        },
        provenance: Provenance {
            seed: params.seed,
            threads: 1,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
    })
}

#[cfg(test)]
mod tests;
