use super::*;
use crate::eigensolve::RegionSpec;
use crate::linop::{orthonormalize, DenseOperator, DiagonalOperator};
use crate::perturb::spectrum_dense;
use crate::projectors::{indicator_projector, span_projector};
use faer::Mat;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> c64 {
    c64::new(re, im)
}

fn dense() -> SolverParams {
    SolverParams {
        dense_below: 10_000,
        ..Default::default()
    }
}

/// Real symmetric (or complex Hermitian) matrix with the given spectrum.
fn with_spectrum(values: &[f64], real: bool, rng: &mut ChaCha8Rng) -> DenseOperator {
    let n = values.len();
    let vs: Vec<_> = (0..n)
        .map(|_| {
            if real {
                vector::random_real(rng, n)
            } else {
                vector::random_complex(rng, n)
            }
        })
        .collect();
    let basis = orthonormalize(&vs).unwrap().basis;
    let m = Mat::from_fn(n, n, |i, j| {
        (0..n).map(|k| basis[k][i] * basis[k][j].conj() * values[k]).sum::<c64>()
    });
    let m = Mat::from_fn(n, n, |i, j| {
        let z = 0.5 * (m[(i, j)] + m[(j, i)].conj());
        if real {
            c(z.re, 0.0)
        } else {
            z
        }
    });
    DenseOperator::new(m).unwrap()
}

fn random_real_span(n: usize, k: usize, rng: &mut ChaCha8Rng) -> OrthoProjector {
    let vs: Vec<_> = (0..k).map(|_| vector::random_real(rng, n)).collect();
    span_projector(&vs).unwrap()
}

fn random_mask(n: usize, rng: &mut ChaCha8Rng) -> OrthoProjector {
    let mask: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.3) { 1.0 } else { 0.0 }).collect();
    indicator_projector(&mask).unwrap()
}

fn spectrum_values(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-5.0..5.0)).collect()
}

/// Eigenpairs of `L(s)` from the dense oracle, each with residual.
fn oracle_pairs(l: Arc<dyn HermitianOperator>, q: &OrthoProjector, s: f64) -> Vec<RitzPair> {
    let p = PerturbedOperator::new(l, q.clone(), s).unwrap();
    let spec = spectrum_dense(&p).unwrap();
    (0..spec.len())
        .map(|j| {
            let mut phi = spec.vector(j);
            vector::normalize(&mut phi);
            let mu = spec.values[j];
            let mut r = p.apply(&phi).unwrap();
            vector::axpy(-mu, &phi, &mut r);
            RitzPair {
                mu,
                phi,
                residual: vector::norm(&r),
            }
        })
        .collect()
}

#[test]
fn diagonal_example_accepts_two() {
    let l: Arc<dyn HermitianOperator> = Arc::new(DiagonalOperator::new(vec![1.0, 2.0, 3.0]));
    let q = indicator_projector(&[1.0, 1.0, 0.0]).unwrap();
    let spec = SearchSpec::new(RegionSpec::new(0.5, 2.5, 0.1, 0.3).unwrap());
    for params in [SolverParams::default(), dense()] {
        let rep = run(l.clone(), &q, &spec, &params).unwrap();
        assert_eq!(rep.candidates.len(), 2);
        assert_eq!(rep.accepted_indices(), vec![0, 1]);
        for (acc, (lam, k)) in rep.accepted.iter().zip([(1.0, 0), (2.0, 1)]) {
            assert!((acc.lambda - lam).abs() < 1e-10);
            assert!(acc.psi[k].norm() > 1.0 - 1e-10);
            assert!(acc.certificate.residual < 1e-10);
        }
        assert!(rep.message.is_none());
        assert_eq!(rep.label, "near");
    }
}

#[test]
fn zero_projector_accepts_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let l: Arc<dyn HermitianOperator> = Arc::new(with_spectrum(&spectrum_values(30, &mut rng), false, &mut rng));
    let q = OrthoProjector::zero(30);
    let mut spec = SearchSpec::new(RegionSpec::new(-4.0, 4.0, 0.1, 0.9).unwrap());
    let rep = run(l.clone(), &q, &spec, &dense()).unwrap();
    assert!(rep.candidates.is_empty());
    assert!(rep.accepted.is_empty());
    assert_eq!(rep.message.as_deref(), Some("No constrained eigenpairs exist"));

    // widening the search shows the real eigenvalues, all rejected
    spec.search_delta = Some(1.0);
    let rep = run(l, &q, &spec, &dense()).unwrap();
    assert!(!rep.candidates.is_empty());
    assert!(rep.accepted.is_empty());
    for cand in &rep.candidates {
        assert!(cand.tau2 < 1e-20);
        assert_eq!(cand.reason, RejectionReason::BelowTauThreshold);
    }
}

#[test]
fn metrics_examples() {
    let l = DiagonalOperator::new(vec![1.0, 2.0]);
    let q = indicator_projector(&[1.0, 0.0]).unwrap();
    let pair = RitzPair {
        mu: c(1.0, 0.1),
        phi: vec![c(1.0, 0.0), c(0.0, 0.0)],
        residual: 0.0,
    };
    let m = metrics(&l, &q, 0.1, &pair).unwrap();
    assert_eq!(m.tau2, 1.0);
    assert_eq!(m.delta2, 0.0);
    assert_eq!(m.residual_complex, 0.0);
    assert!(m.im_identity_defect < 1e-16);

    // φ ∈ W for a rank-one span projector
    let v = vec![c(0.6, 0.0), c(0.0, 0.8)];
    let q = span_projector(&[v.clone()]).unwrap();
    let pair = RitzPair {
        mu: c(1.0, 0.1),
        phi: v,
        residual: 0.0,
    };
    let m = metrics(&l, &q, 0.1, &pair).unwrap();
    assert!((m.tau2 - 1.0).abs() < 1e-15 && m.delta2 < 1e-15);
}

#[test]
fn residual_identity_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..6 {
        let n = 40 + 10 * trial;
        let l: Arc<dyn HermitianOperator> =
            Arc::new(with_spectrum(&spectrum_values(n, &mut rng), trial % 2 == 0, &mut rng));
        let q = if trial % 3 == 0 { random_mask(n, &mut rng) } else { random_real_span(n, 4, &mut rng) };
        for s in [0.01, 0.1] {
            for pair in oracle_pairs(l.clone(), &q, s) {
                let m = metrics(l.as_ref(), &q, s, &pair).unwrap();
                assert!((m.tau2 + m.delta2 - 1.0).abs() < 1e-10);
                let tol = 10.0 * pair.residual.max(1e-14);
                assert!(m.im_identity_defect <= tol.max(1e-10) * pair.mu.norm().max(1.0));
                let want = s * (m.tau2 * m.delta2).sqrt();
                assert!((m.residual_complex - want).abs() <= tol.max(1e-12), "{} vs {want}", m.residual_complex);
            }
        }
    }
}

#[test]
fn rescale_of_real_and_quarter_turned_vectors() {
    // ψ spans part of the λ = 2 eigenspace, so the residual vanishes for every θ
    let l = DiagonalOperator::new(vec![1.0, 2.0, 2.0]);
    let psi = vec![c(0.0, 0.0), c(-0.8, 0.0), c(0.6, 0.0)];
    let r = canonical_rescale(&l, c(2.0, 0.05), &psi).unwrap();
    assert!((r.c.re.abs() - 1.0).abs() < 1e-15 && r.c.im == 0.0);
    // sign convention: largest-magnitude entry positive
    assert_eq!(r.phi[1].re, 0.8);
    assert_eq!(r.phi[2].re, -0.6);

    let turned: Vec<c64> = psi.iter().map(|z| z * c(0.0, 1.0)).collect();
    let r = canonical_rescale(&l, c(2.0, 0.05), &turned).unwrap();
    assert!(r.c.re.abs() < 1e-15 && (r.c.im.abs() - 1.0).abs() < 1e-15);
    assert!((r.phi[1].re - 0.8).abs() < 1e-15 && (r.phi[2].re + 0.6).abs() < 1e-15);
    assert!(r.phi.iter().all(|z| z.im == 0.0));
}

#[test]
fn rescale_requires_real_operator() {
    let l = DenseOperator::from_fn(2, |i, j| match (i, j) {
        (0, 1) => c(0.0, 1.0),
        (1, 0) => c(0.0, -1.0),
        _ => c(1.0, 0.0),
    })
    .unwrap();
    let err = canonical_rescale(&l, c(1.0, 0.0), &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap_err();
    assert!(matches!(err, Error::NotReal));
}

/// `min_θ ‖(L − x)(cos θ·Re φ − sin θ·Im φ)‖` by a 4096-point grid, refined
/// by ternary search around the best grid point.
fn grid_minimum(l: &dyn HermitianOperator, x: f64, phi: &[c64]) -> f64 {
    let re = vector::real_part(phi);
    let im = vector::imag_part(phi);
    let r1 = { let mut r = crate::linop::apply(l, &re).unwrap(); vector::axpy(c(-x, 0.0), &re, &mut r); r };
    let r2 = { let mut r = crate::linop::apply(l, &im).unwrap(); vector::axpy(c(-x, 0.0), &im, &mut r); r };
    let f = |t: f64| {
        let v: Vec<c64> = r1.iter().zip(&r2).map(|(a, b)| a * t.cos() - b * t.sin()).collect();
        vector::norm(&v)
    };
    let step = std::f64::consts::TAU / 4096.0;
    let best = (0..4096).map(|k| k as f64 * step).min_by(|a, b| f(*a).total_cmp(&f(*b))).unwrap();
    let (mut lo, mut hi) = (best - step, best + step);
    for _ in 0..100 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) < f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    f(0.5 * (lo + hi)).min(f(best))
}

#[test]
fn rescale_matches_grid_search_and_never_increases_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..5 {
        let n = 50;
        let l: Arc<dyn HermitianOperator> = Arc::new(with_spectrum(&spectrum_values(n, &mut rng), true, &mut rng));
        let q = if trial % 2 == 0 { random_mask(n, &mut rng) } else { random_real_span(n, 5, &mut rng) };
        for pair in oracle_pairs(l.clone(), &q, 0.1).into_iter().step_by(7) {
            let phase = c64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
            let phi = vector::scaled(&pair.phi, phase);
            let r = canonical_rescale(l.as_ref(), pair.mu, &phi).unwrap();
            let grid = grid_minimum(l.as_ref(), pair.mu.re, &phi);
            assert!(
                (r.residual_real - grid).abs() <= 1e-6 * grid.max(1e-12),
                "rescaled {} vs grid {grid}",
                r.residual_real
            );
            let unrotated = shifted_residual(l.as_ref(), pair.mu.re, &vector::real_part(&phi));
            assert!(r.residual_real <= unrotated + 1e-12);
        }
    }
}

#[test]
fn real_residual_identity() {
    // Im φ = 0: both sides vanish
    let l = DiagonalOperator::new(vec![1.0, 2.0]);
    let q = indicator_projector(&[1.0, 0.0]).unwrap();
    let (lhs, rhs) = residual_real_identity_check(&l, &q, 0.1, c(1.0, 0.1), &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
    assert_eq!((lhs, rhs), (0.0, 0.0));
    // commuting diagonal case with a complex phase
    let (lhs, rhs) = residual_real_identity_check(&l, &q, 0.1, c(2.0, 0.0), &[c(0.0, 0.0), c(0.6, 0.8)]).unwrap();
    assert!(lhs < 1e-30 && rhs < 1e-30);

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..5 {
        let n = 60;
        let l: Arc<dyn HermitianOperator> = Arc::new(with_spectrum(&spectrum_values(n, &mut rng), true, &mut rng));
        let q = random_real_span(n, 6, &mut rng);
        for pair in oracle_pairs(l.clone(), &q, 0.1) {
            let (lhs, rhs) = residual_real_identity_check(l.as_ref(), &q, 0.1, pair.mu, &pair.phi).unwrap();
            assert!((lhs - rhs).abs() <= 1e-7 * lhs.max(rhs).max(1e-12), "{lhs} vs {rhs}");
        }
    }
}

#[test]
fn encoding_trivial_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let l = with_spectrum(&spectrum_values(20, &mut rng), false, &mut rng);
    let rep = validate_encoding(&l, &OrthoProjector::identity(20), &[0.01, 0.1, 1.0]).unwrap();
    for e in &rep.entries {
        assert!(e.big_d < 1e-7);
        assert!(e.distance < 1e-10);
    }
    assert!(rep.all_hold());

    let rep = validate_encoding(&l, &OrthoProjector::zero(20), &[0.01, 0.1]).unwrap();
    for e in &rep.entries {
        assert!((e.big_d - 1.0).abs() < 1e-12);
        assert!(e.margin_linear.is_none(), "D = 1 admits only s = 0");
        assert!((e.distance - e.s).abs() < 1e-10);
    }
    assert!(rep.all_hold());
}

#[test]
fn encoding_bounds_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..4 {
        let n = 60;
        let l = with_spectrum(&spectrum_values(n, &mut rng), false, &mut rng);
        let vs: Vec<_> = (0..5).map(|_| vector::random_complex(&mut rng, n)).collect();
        let q = span_projector(&vs).unwrap();
        let rep = validate_encoding(&l, &q, &[1e-4, 1e-3, 1e-2]).unwrap();
        assert!(rep.entries.iter().any(|e| e.margin_quadratic.is_some()));
        assert!(rep.all_hold(), "worst margin {}", rep.worst_margin());
    }
}

#[test]
fn encoding_reports_repeated_eigenvalues() {
    let l = DiagonalOperator::new(vec![1.0, 1.0, 3.0]);
    let q = span_projector(&[vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]]).unwrap();
    let rep = validate_encoding(&l, &q, &[0.1]).unwrap();
    let e = &rep.entries[0];
    assert_eq!(e.multiplicity, 2);
    assert!(e.note.is_some());
    assert!((e.big_d - 1.0).abs() < 1e-12);
    assert!(rep.all_hold());
}

#[test]
fn decoding_trivial_cases() {
    let l = DiagonalOperator::new(vec![1.0, 2.0, 4.0, 8.0]);
    let q = indicator_projector(&[1.0, 0.0, 1.0, 0.0]).unwrap();
    let rep = validate_decoding(&l, &q, 0.3).unwrap();
    for e in &rep.entries {
        assert!(e.delta * e.tau < 1e-14);
        assert!(e.margin_real.abs() < 1e-14, "Re μ is an eigenvalue of L");
    }
    assert!(rep.all_hold());

    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let l = with_spectrum(&spectrum_values(15, &mut rng), false, &mut rng);
    let rep = validate_decoding(&l, &OrthoProjector::identity(15), 0.2).unwrap();
    for e in &rep.entries {
        assert!(e.distance < 1e-12);
    }
    assert!(rep.all_hold());
}

#[test]
fn decoding_bounds_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for trial in 0..4 {
        let n = 60;
        let l = with_spectrum(&spectrum_values(n, &mut rng), trial % 2 == 0, &mut rng);
        let q = if trial < 2 { random_mask(n, &mut rng) } else { random_real_span(n, 7, &mut rng) };
        for s in [0.01, 0.1, 1.0] {
            let rep = validate_decoding(&l, &q, s).unwrap();
            assert_eq!(rep.entries.len(), n);
            assert!(rep.all_hold(), "s = {s}: worst margin {}", rep.worst_margin());
        }
    }
}

#[test]
fn avoid_trivial_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n = 25;
    let l: Arc<dyn HermitianOperator> = Arc::new(with_spectrum(&spectrum_values(n, &mut rng), false, &mut rng));
    let mut spec = SearchSpec::new(RegionSpec::new(-5.0, 5.0, 0.1, 0.5).unwrap());
    spec.mode = SearchMode::Avoid;
    spec.search_delta = Some(1.0);

    let rep = run(l.clone(), &OrthoProjector::identity(n), &spec, &dense()).unwrap();
    assert!(rep.accepted.is_empty());
    assert_eq!(rep.label, "pattern_breaking");
    assert_eq!(rep.spec.mode, SearchMode::Avoid);

    let rep = avoid_run(l, &OrthoProjector::zero(n), &spec, &dense()).unwrap();
    assert_eq!(rep.accepted.len(), n);
}

#[test]
fn avoid_equals_near_run_on_complement() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for _ in 0..4 {
        let n = 40;
        let l: Arc<dyn HermitianOperator> = Arc::new(with_spectrum(&spectrum_values(n, &mut rng), false, &mut rng));
        let q = random_mask(n, &mut rng);
        let region = RegionSpec::new(-3.0, 3.0, 0.1, 0.4).unwrap();
        let mut avoid = SearchSpec::new(region);
        avoid.mode = SearchMode::Avoid;
        let a = run(l.clone(), &q, &avoid, &SolverParams::default()).unwrap();
        let near = SearchSpec::new(RegionSpec::new(-3.0, 3.0, 0.1, 0.6).unwrap());
        let b = run(l, &q.clone().complement(), &near, &SolverParams::default()).unwrap();
        let la: Vec<f64> = a.accepted.iter().map(|p| p.lambda).collect();
        let lb: Vec<f64> = b.accepted.iter().map(|p| p.lambda).collect();
        assert_eq!(la.len(), lb.len());
        for (x, y) in la.iter().zip(&lb) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn certificates_match_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let n = 80;
    let l: Arc<dyn HermitianOperator> = Arc::new(with_spectrum(&spectrum_values(n, &mut rng), true, &mut rng));
    let q = random_real_span(n, 10, &mut rng);
    // τ² ≥ 0.0975 while a random unit vector has E[τ²] = 1/8
    for (rescale, post) in [
        (false, PostProcess::Off),
        (true, PostProcess::Off),
        (true, PostProcess::InverseIteration { steps: 2 }),
    ] {
        let mut spec = SearchSpec::new(RegionSpec::new(-5.0, 5.0, 0.1, 0.95).unwrap());
        spec.rescale_real = rescale;
        spec.post_process = post;
        let rep = run(l.clone(), &q, &spec, &SolverParams::default()).unwrap();
        assert!(!rep.accepted.is_empty());
        for acc in &rep.accepted {
            assert!((vector::norm(&acc.psi) - 1.0).abs() < 1e-12);
            let again = shifted_residual(l.as_ref(), acc.lambda, &acc.psi);
            assert!((acc.certificate.residual - again).abs() <= 1e-10 * again.max(1e-300));
            assert!(acc.tau2 >= spec.tau2_threshold() - 1e-12);
            assert!(acc.lambda >= -5.0 && acc.lambda <= 5.0);
            let cand = &rep.candidates[acc.candidate];
            assert!(cand.accepted);
            if rescale {
                assert!(acc.psi.iter().all(|z| z.im == 0.0) || matches!(post, PostProcess::InverseIteration { .. }));
                assert!(cand.residual_real.is_some());
            }
            if let PostProcess::InverseIteration { .. } = post {
                assert!(acc.certificate.residual <= cand.residual_real.unwrap() + 1e-12);
            }
        }
    }
}

#[test]
fn rescaling_complex_operator_is_an_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let l: Arc<dyn HermitianOperator> = Arc::new(with_spectrum(&spectrum_values(10, &mut rng), false, &mut rng));
    let mut spec = SearchSpec::new(RegionSpec::new(-5.0, 5.0, 0.1, 0.8).unwrap());
    spec.rescale_real = true;
    let err = run(l, &OrthoProjector::identity(10), &spec, &dense()).unwrap_err();
    assert!(matches!(err, Error::NotReal));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn stricter_tolerance_never_adds_pairs(seed in 0u64..1000, d1 in 0.05f64..1.0, d2 in 0.05f64..1.0) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 30;
        let l: Arc<dyn HermitianOperator> = Arc::new(with_spectrum(&spectrum_values(n, &mut rng), true, &mut rng));
        let q = random_real_span(n, 5, &mut rng);
        let accepted = |d: f64| {
            let mut spec = SearchSpec::new(RegionSpec::new(-2.0, 2.0, 0.1, d).unwrap());
            spec.search_delta = Some(1.0);
            spec.rescale_real = seed % 2 == 0;
            run(l.clone(), &q, &spec, &dense()).unwrap().accepted_indices()
        };
        let strict = accepted(lo);
        let loose = accepted(hi);
        prop_assert!(strict.iter().all(|k| loose.contains(k)));
    }
}
