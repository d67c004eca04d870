//! Eigenpairs of `L(s)` near the segment `[a, b] + i·s`.
//!
//! The region search uses shift-invert Krylov–Schur: with `σ = mid + i·s` the
//! eigenvalues of `(L(s) − σ)⁻¹` inside a disk of radius `R` around `σ` are
//! exactly those with `|θ| ≥ 1/R`, and they are the first to converge.
//! Repeated sweeps from fresh random starts, orthogonal to everything
//! already locked, pick up multiple eigenvalues; the search stops after two
//! consecutive sweeps find nothing new inside the disk. Intervals whose disk
//! holds more than `max_per_shift` eigenvalues are bisected.
//!
//! Final eigenpairs come from a Rayleigh–Ritz step with `L(s)` itself on the
//! locked (invariant) subspace, so reported residuals are measured directly.

mod krylov_schur;
pub(crate) mod schur;

use std::sync::Arc;

use faer::{c64, Mat};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linop::{dense_eig, vector, HermitianOperator};
use crate::perturb::{spectrum_dense, PerturbedOperator, ShiftedSolveWorkspace};
use crate::projectors::OrthoProjector;
use crate::{Error, Result};

use krylov_schur::{sweep, SweepConfig};

/// `{μ : dist(μ, [a, b] + i·s) ≤ s·δ*}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub a: f64,
    pub b: f64,
    pub s: f64,
    pub delta_star: f64,
}

impl RegionSpec {
    pub fn new(a: f64, b: f64, s: f64, delta_star: f64) -> Result<Self> {
        let r = Self { a, b, s, delta_star };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.a, self.b, self.s, self.delta_star].iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("region parameters must be finite".into()));
        }
        if self.a > self.b {
            return Err(Error::InvalidParameter(format!(
                "interval is empty: a = {} > b = {}",
                self.a, self.b
            )));
        }
        if self.s <= 0.0 {
            return Err(Error::InvalidParameter(format!("s must be positive, got {}", self.s)));
        }
        if !(self.delta_star > 0.0 && self.delta_star <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta_star must lie in (0, 1], got {}",
                self.delta_star
            )));
        }
        Ok(())
    }

    pub fn radius(&self) -> f64 {
        self.s * self.delta_star
    }

    pub fn contains(&self, mu: c64, slack: f64) -> bool {
        segment_distance(mu, self) <= self.radius() + slack
    }
}

/// Distance from `μ` to `{x + i·s : a ≤ x ≤ b}`.
pub fn segment_distance(mu: c64, region: &RegionSpec) -> f64 {
    let dx = if mu.re < region.a {
        region.a - mu.re
    } else if mu.re > region.b {
        mu.re - region.b
    } else {
        0.0
    };
    dx.hypot(mu.im - region.s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    Region,
    LargestImag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    /// Krylov basis size; 0 picks `max(40, 4·nev)`.
    pub krylov_dim: usize,
    /// Restart budget per sweep.
    pub max_restarts: usize,
    /// Relative residual tolerance: `‖L(s)φ − μφ‖ ≤ tol·(‖L‖ + s)`.
    pub tol: f64,
    pub seed: u64,
    pub mode: SolverMode,
    /// Pairs requested in largest-imaginary mode.
    pub nev: usize,
    /// Bisect the interval when one shift's disk holds more than this.
    pub max_per_shift: usize,
    /// Use the dense oracle instead of Krylov–Schur up to this dimension.
    pub dense_below: usize,
    pub max_sweeps: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            krylov_dim: 0,
            max_restarts: 500,
            tol: 1e-9,
            seed: 0,
            mode: SolverMode::Region,
            nev: 1,
            max_per_shift: 128,
            dense_below: 0,
            max_sweeps: 400,
        }
    }
}

impl SolverParams {
    fn krylov_dim_for(&self, nev: usize) -> usize {
        if self.krylov_dim > 0 {
            self.krylov_dim.max(2)
        } else {
            (4 * nev).max(40)
        }
    }
}

#[derive(Clone, Debug)]
pub struct RitzPair {
    pub mu: c64,
    /// Unit norm.
    pub phi: Vec<c64>,
    /// `‖L(s)φ − μφ‖`.
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ShiftRecord {
    pub sigma: [f64; 2],
    pub radius: f64,
    pub owned: [f64; 2],
    pub locked: usize,
    pub in_disk: usize,
    pub sweeps: usize,
    pub restarts: usize,
    pub bisected: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SolverDiagnostics {
    pub method: String,
    pub shifts: Vec<ShiftRecord>,
    pub restarts: usize,
    pub operator_applications: usize,
    /// False if some sweep ran out of restarts or some pair missed the tolerance.
    pub converged: bool,
    pub max_residual: f64,
    pub scale: f64,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    /// Sorted by `(Re μ, Im μ)`.
    pub pairs: Vec<RitzPair>,
    pub diagnostics: SolverDiagnostics,
}

fn operator_scale(p: &PerturbedOperator) -> f64 {
    p.base().norm_bound() + p.s()
}

fn sort_pairs(pairs: &mut [RitzPair]) {
    pairs.sort_by(|x, y| x.mu.re.total_cmp(&y.mu.re).then(x.mu.im.total_cmp(&y.mu.im)));
}

fn residual(p: &PerturbedOperator, mu: c64, phi: &[c64]) -> f64 {
    let mut r = vector::zeros(phi.len());
    p.apply_into(phi, &mut r);
    vector::axpy(-mu, phi, &mut r);
    vector::norm(&r)
}

/// Rayleigh–Ritz with `L(s)` on the span of the orthonormal `basis`.
fn rayleigh_ritz(p: &PerturbedOperator, basis: &[Vec<c64>]) -> Result<Vec<RitzPair>> {
    let k = basis.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    let images: Vec<Vec<c64>> = basis
        .iter()
        .map(|y| {
            let mut ly = vector::zeros(y.len());
            p.apply_into(y, &mut ly);
            ly
        })
        .collect();
    let g = Mat::from_fn(k, k, |i, j| vector::dot(&images[j], &basis[i]));
    let spec = dense_eig(g.as_ref(), false)?;
    let n = basis[0].len();
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let mu = spec.values[j];
        let mut phi = vector::zeros(n);
        let mut lphi = vector::zeros(n);
        for i in 0..k {
            let w = spec.vectors[(i, j)];
            vector::axpy(w, &basis[i], &mut phi);
            vector::axpy(w, &images[i], &mut lphi);
        }
        let nrm = vector::normalize(&mut phi);
        vector::scale(&mut lphi, c64::new(1.0 / nrm, 0.0));
        vector::axpy(-mu, &phi, &mut lphi);
        out.push(RitzPair {
            mu,
            phi,
            residual: vector::norm(&lphi),
        });
    }
    Ok(out)
}

/// Drops near-duplicates (`|μᵢ − μⱼ| ≤ 1e-10·scale` and `|⟨φᵢ, φⱼ⟩| > 0.5`),
/// keeping the smaller residual.
pub fn dedupe(mut pairs: Vec<RitzPair>, scale: f64) -> Vec<RitzPair> {
    pairs.sort_by(|x, y| x.residual.total_cmp(&y.residual));
    let mut kept: Vec<RitzPair> = Vec::with_capacity(pairs.len());
    for cand in pairs {
        let dup = kept.iter().any(|k| {
            (k.mu - cand.mu).norm() <= 1e-10 * scale && vector::dot(&k.phi, &cand.phi).norm() > 0.5
        });
        if !dup {
            kept.push(cand);
        }
    }
    sort_pairs(&mut kept);
    kept
}

/// Factorizes at `σ`, nudging it upward on singular shifts.
fn workspace_with_nudge(p: &PerturbedOperator, sigma: c64, nudge: f64) -> Result<ShiftedSolveWorkspace> {
    let mut last = None;
    for attempt in 0..4 {
        let shifted = sigma + c64::new(0.0, nudge * attempt as f64);
        // singular dense/sparse factors only show up when solving
        let probed = p.workspace(shifted).and_then(|ws| {
            let n = p.dim();
            let b: Vec<c64> = (0..n).map(|i| c64::new(1.0, (i as f64 * 0.7548776662).fract())).collect();
            ws.solve(&b).map(|_| ws)
        });
        match probed {
            Ok(ws) => return Ok(ws),
            Err(e @ Error::SingularShift { .. }) => {
                log::debug!("singular shift at {shifted}, nudging");
                last = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

struct DiskResult {
    pairs: Vec<RitzPair>,
    locked: usize,
    in_disk: usize,
    sweeps: usize,
    restarts: usize,
    applications: usize,
    finished: bool,
    cap_exceeded: bool,
    sigma: c64,
    radius: f64,
}

/// All eigenpairs of `L(s)` in the disk `|μ − σ| ≤ radius` (plus whatever
/// else was locked on the way).
fn solve_disk(
    p: &PerturbedOperator,
    sigma: c64,
    radius: f64,
    nudge: f64,
    params: &SolverParams,
    cap: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DiskResult> {
    let ws = workspace_with_nudge(p, sigma, nudge)?;
    let sigma_used = ws.sigma();
    let radius = radius + (sigma_used - sigma).norm();
    let n = p.dim();
    let inv_r = 1.0 / radius;
    let inner_tol = 0.1 * params.tol;
    let cfg = SweepConfig {
        krylov_dim: params.krylov_dim_for(16),
        max_restarts: params.max_restarts,
    };
    let apply = |x: &[c64]| ws.solve(x);
    let mut locked: Vec<Vec<c64>> = Vec::new();
    let mut res = DiskResult {
        pairs: Vec::new(),
        locked: 0,
        in_disk: 0,
        sweeps: 0,
        restarts: 0,
        applications: 0,
        finished: true,
        cap_exceeded: false,
        sigma: sigma_used,
        radius,
    };
    let mut quiet = 0;
    while quiet < 2 && res.sweeps < params.max_sweeps && locked.len() < n {
        let start = vector::random_complex(rng, n);
        let in_disk_before = res.in_disk;
        let sw = sweep(
            &apply,
            &mut locked,
            start,
            &cfg,
            &|t| t.norm(),
            &|b, t| b <= inner_tol * t.norm(),
            &|th| {
                th.last().is_some_and(|t| t.norm() < inv_r)
                    || in_disk_before + th.iter().filter(|t| t.norm() >= inv_r).count() > cap
            },
        )?;
        res.sweeps += 1;
        res.restarts += sw.restarts;
        res.applications += sw.applications;
        res.finished &= sw.finished;
        let new_in = sw.thetas.iter().filter(|t| t.norm() >= inv_r).count();
        res.in_disk += new_in;
        if res.in_disk > cap {
            res.cap_exceeded = true;
            res.locked = locked.len();
            return Ok(res);
        }
        if new_in == 0 {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if !sw.finished {
            break;
        }
    }
    res.locked = locked.len();
    res.pairs = rayleigh_ritz(p, &locked)?;
    Ok(res)
}

/// All eigenpairs of `L(s)` in `region` (see module docs).
pub fn find_in_region(p: &PerturbedOperator, region: &RegionSpec, params: &SolverParams) -> Result<SolveOutcome> {
    region.validate()?;
    if (p.s() - region.s).abs() > 1e-15 * region.s.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "region s = {} differs from operator s = {}",
            region.s,
            p.s()
        )));
    }
    let scale = operator_scale(p);
    let slack = 10.0 * params.tol * scale;
    if p.dim() <= params.dense_below {
        return dense_region(p, region, params, scale, slack);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut diag = SolverDiagnostics {
        method: "krylov_schur_shift_invert".into(),
        converged: true,
        scale,
        ..Default::default()
    };
    let mut pairs = Vec::new();
    // (lo, hi, owned_lo, owned_hi, depth)
    let mut stack = vec![(region.a, region.b, f64::NEG_INFINITY, f64::INFINITY, 0usize)];
    while let Some((lo, hi, own_lo, own_hi, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let r = region.radius();
        let radius = 0.5 * (hi - lo) + r * (1.0 + 1e-3) + slack;
        let nudge = if r > 0.0 { 0.25 * r } else { 1e-8 * scale };
        let d = solve_disk(p, c64::new(mid, region.s), radius, nudge, params, params.max_per_shift, &mut rng)?;
        let bisect = d.cap_exceeded && depth < 40 && hi > lo;
        diag.shifts.push(ShiftRecord {
            sigma: [d.sigma.re, d.sigma.im],
            radius: d.radius,
            owned: [own_lo.max(lo - r), own_hi.min(hi + r)],
            locked: d.locked,
            in_disk: d.in_disk,
            sweeps: d.sweeps,
            restarts: d.restarts,
            bisected: bisect,
        });
        diag.restarts += d.restarts;
        diag.operator_applications += d.applications;
        diag.converged &= d.finished;
        if bisect {
            // right half pushed first so the left half is solved first
            stack.push((mid, hi, mid, own_hi, depth + 1));
            stack.push((lo, mid, own_lo, mid, depth + 1));
            continue;
        }
        if d.cap_exceeded {
            diag.converged = false;
        }
        pairs.extend(d.pairs.into_iter().filter(|q| {
            q.mu.re >= own_lo && q.mu.re < own_hi && region.contains(q.mu, slack)
        }));
    }
    let mut pairs = dedupe(pairs, scale);
    sort_pairs(&mut pairs);
    finish(pairs, diag, params.tol * scale)
}

fn finish(pairs: Vec<RitzPair>, mut diag: SolverDiagnostics, tol_abs: f64) -> Result<SolveOutcome> {
    diag.max_residual = pairs.iter().map(|q| q.residual).fold(0.0, f64::max);
    if diag.max_residual > tol_abs {
        log::warn!(
            "largest residual {:.3e} exceeds tolerance {:.3e}",
            diag.max_residual,
            tol_abs
        );
        diag.converged = false;
    }
    Ok(SolveOutcome { pairs, diagnostics: diag })
}

fn dense_pairs(p: &PerturbedOperator) -> Result<Vec<RitzPair>> {
    let spec = spectrum_dense(p)?;
    Ok((0..spec.len())
        .map(|j| {
            let phi = spec.vector(j);
            let mu = spec.values[j];
            RitzPair {
                residual: residual(p, mu, &phi),
                mu,
                phi,
            }
        })
        .collect())
}

fn dense_region(
    p: &PerturbedOperator,
    region: &RegionSpec,
    params: &SolverParams,
    scale: f64,
    slack: f64,
) -> Result<SolveOutcome> {
    let pairs: Vec<RitzPair> = dense_pairs(p)?
        .into_iter()
        .filter(|q| region.contains(q.mu, slack))
        .collect();
    let diag = SolverDiagnostics {
        method: "dense".into(),
        converged: true,
        scale,
        ..Default::default()
    };
    finish(pairs, diag, params.tol * scale)
}

/// The `k` eigenpairs of `L(s)` with largest imaginary part.
pub fn find_largest_imag(p: &PerturbedOperator, k: usize, params: &SolverParams) -> Result<SolveOutcome> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let n = p.dim();
    let k = k.min(n);
    let scale = operator_scale(p);
    let top_k = |mut pairs: Vec<RitzPair>| {
        pairs.sort_by(|x, y| y.mu.im.total_cmp(&x.mu.im));
        pairs.truncate(k);
        sort_pairs(&mut pairs);
        pairs
    };
    if n <= params.dense_below {
        let diag = SolverDiagnostics {
            method: "dense".into(),
            converged: true,
            scale,
            ..Default::default()
        };
        return finish(top_k(dense_pairs(p)?), diag, params.tol * scale);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let cfg = SweepConfig {
        krylov_dim: params.krylov_dim_for(k),
        max_restarts: params.max_restarts,
    };
    let inner_tol = 0.1 * params.tol * scale;
    let apply = |x: &[c64]| -> Result<Vec<c64>> {
        let mut y = vector::zeros(x.len());
        p.apply_into(x, &mut y);
        Ok(y)
    };
    let mut diag = SolverDiagnostics {
        method: "krylov_schur".into(),
        converged: true,
        scale,
        ..Default::default()
    };
    let mut locked: Vec<Vec<c64>> = Vec::new();
    let mut thetas: Vec<c64> = Vec::new();
    let mut quiet = 0;
    let mut sweeps = 0;
    while quiet < 2 && sweeps < params.max_sweeps && locked.len() < n {
        let kth = kth_largest_imag(&thetas, k);
        let start = vector::random_complex(&mut rng, n);
        let sw = sweep(
            &apply,
            &mut locked,
            start,
            &cfg,
            &|t| t.im,
            &|b, _| b <= inner_tol,
            &|th| th.len() >= k || kth.is_some_and(|q| th.last().is_some_and(|t| t.im < q)),
        )?;
        sweeps += 1;
        diag.restarts += sw.restarts;
        diag.operator_applications += sw.applications;
        diag.converged &= sw.finished;
        let improved = match kth {
            None => !sw.thetas.is_empty(),
            Some(q) => sw.thetas.iter().any(|t| t.im >= q - inner_tol),
        };
        thetas.extend(sw.thetas);
        if improved {
            quiet = 0;
        } else {
            quiet += 1;
        }
        if !sw.finished {
            break;
        }
    }
    let pairs = top_k(rayleigh_ritz(p, &locked)?);
    finish(pairs, diag, params.tol * scale)
}

fn kth_largest_imag(thetas: &[c64], k: usize) -> Option<f64> {
    if thetas.len() < k {
        return None;
    }
    let mut ims: Vec<f64> = thetas.iter().map(|t| t.im).collect();
    ims.sort_by(|a, b| b.total_cmp(a));
    Some(ims[k - 1])
}

#[derive(Clone, Debug)]
pub struct InverseIterationResult {
    pub lambda: f64,
    pub psi: Vec<c64>,
    pub residual: f64,
    /// Residual after each step.
    pub history: Vec<f64>,
}

/// A few steps of inverse iteration on `L` at a real shift, phase-aligned
/// with the guess.
pub fn shifted_inverse_iteration(
    l: Arc<dyn HermitianOperator>,
    shift: f64,
    guess: &[c64],
    steps: usize,
) -> Result<InverseIterationResult> {
    let n = l.dim();
    if guess.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: guess.len(),
        });
    }
    if vector::norm(guess) == 0.0 {
        return Err(Error::ZeroVector);
    }
    let scale = l.norm_bound().max(1.0);
    let p = PerturbedOperator::new(l.clone(), OrthoProjector::zero(n), 0.0)?;
    let ws = match p.workspace(c64::new(shift, 0.0)) {
        Err(Error::SingularShift { .. }) => p.workspace(c64::new(shift + 1e-8 * scale, 0.0))?,
        other => other?,
    };
    let rayleigh = |psi: &[c64]| -> (f64, f64) {
        let mut lpsi = vector::zeros(n);
        l.apply_into(psi, &mut lpsi);
        let lam = vector::dot(&lpsi, psi).re;
        vector::axpy(c64::new(-lam, 0.0), psi, &mut lpsi);
        (lam, vector::norm(&lpsi))
    };
    let mut psi = guess.to_vec();
    vector::normalize(&mut psi);
    let mut history = Vec::with_capacity(steps);
    let (mut lambda, mut res) = rayleigh(&psi);
    for _ in 0..steps {
        let next = match ws.solve(&psi) {
            Ok(x) => x,
            // the guess is an eigenvector to working precision
            Err(Error::SingularShift { .. }) if res <= 1e-12 * scale => break,
            Err(e) => return Err(e),
        };
        let mut next = next;
        if vector::normalize(&mut next) == 0.0 {
            break;
        }
        let overlap = vector::dot(guess, &next);
        if overlap.norm() > 0.0 {
            vector::scale(&mut next, overlap / overlap.norm());
        }
        psi = next;
        (lambda, res) = rayleigh(&psi);
        history.push(res);
    }
    Ok(InverseIterationResult {
        lambda,
        psi,
        residual: res,
        history,
    })
}
