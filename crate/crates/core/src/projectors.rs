//! Orthogonal projectors `Q` onto a closed subspace `W ⊂ ℂⁿ`.
//!
//! Each projector keeps its structure so that shifted solves with
//! `L + i·s·Q` can treat the diagonal (or sparse) part directly and the rest
//! as a low-rank Woodbury correction; see [`RankStructure`].

use std::collections::BTreeMap;

use faer::c64;
use serde::Serialize;

use crate::linop::{orthonormalize, vector};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectorKind {
    Indicator,
    Span,
    IndicatorPlusSpan,
    GroupAverage,
    Complement,
}

/// A unitary index map with phases: `(g·v)[i] = phase[i] · v[perm[i]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupAction {
    perm: Vec<usize>,
    phases: Vec<c64>,
}

impl GroupAction {
    pub fn permutation(perm: Vec<usize>) -> Self {
        let phases = vec![c64::new(1.0, 0.0); perm.len()];
        Self { perm, phases }
    }

    pub fn with_phases(perm: Vec<usize>, phases: Vec<c64>) -> Self {
        Self { perm, phases }
    }

    pub fn identity(n: usize) -> Self {
        Self::permutation((0..n).collect())
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn apply(&self, v: &[c64]) -> Vec<c64> {
        self.perm
            .iter()
            .zip(&self.phases)
            .map(|(&p, &ph)| ph * v[p])
            .collect()
    }

    /// `self ∘ other`, i.e. `v ↦ self(other(v))`.
    pub fn compose(&self, other: &GroupAction) -> GroupAction {
        let perm = self.perm.iter().map(|&p| other.perm[p]).collect();
        let phases = self
            .perm
            .iter()
            .zip(&self.phases)
            .map(|(&p, &ph)| ph * other.phases[p])
            .collect();
        GroupAction { perm, phases }
    }

    fn approx_eq(&self, other: &GroupAction) -> bool {
        self.perm == other.perm
            && self
                .phases
                .iter()
                .zip(&other.phases)
                .all(|(a, b)| (a - b).norm() <= 1e-12)
    }

    fn check_unitary(&self, index: usize) -> Result<()> {
        let n = self.perm.len();
        if self.phases.len() != n {
            return Err(Error::NotUnitary {
                index,
                reason: "phase count differs from permutation length".into(),
            });
        }
        let mut seen = vec![false; n];
        for &p in &self.perm {
            if p >= n || seen[p] {
                return Err(Error::NotUnitary {
                    index,
                    reason: "index map is not a bijection".into(),
                });
            }
            seen[p] = true;
        }
        if let Some(ph) = self.phases.iter().find(|ph| (ph.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::NotUnitary {
                index,
                reason: format!("phase {ph} has modulus {}", ph.norm()),
            });
        }
        Ok(())
    }

    fn is_real(&self) -> bool {
        self.phases.iter().all(|p| p.im == 0.0)
    }
}

#[derive(Clone, Debug)]
enum Repr {
    Indicator { mask: Vec<bool> },
    Span { basis: Vec<Vec<c64>> },
    IndicatorPlusSpan { mask: Vec<bool>, basis: Vec<Vec<c64>> },
    GroupAverage { actions: Vec<GroupAction> },
    Complement(Box<OrthoProjector>),
}

/// Orthogonal projector onto `W`.
#[derive(Clone, Debug)]
pub struct OrthoProjector {
    dim: usize,
    real: bool,
    repr: Repr,
}

/// `Q = diag(diagonal) + sparse + U·diag(signs)·U*`.
///
/// Empty `diagonal` means no diagonal part. `sparse` is only populated for
/// group averages (which couple each index to its orbit).
#[derive(Clone, Debug, Default)]
pub struct RankStructure {
    pub diagonal: Vec<f64>,
    pub sparse: Vec<(usize, usize, c64)>,
    pub factor: Vec<Vec<c64>>,
    pub signs: Vec<f64>,
    pub rank: usize,
}

impl RankStructure {
    pub fn apply(&self, v: &[c64]) -> Vec<c64> {
        let mut y = if self.diagonal.is_empty() {
            vector::zeros(v.len())
        } else {
            v.iter().zip(&self.diagonal).map(|(z, d)| z * d).collect()
        };
        for &(i, j, a) in &self.sparse {
            y[i] += a * v[j];
        }
        for (u, &sg) in self.factor.iter().zip(&self.signs) {
            let h = vector::dot(v, u) * sg;
            vector::axpy(h, u, &mut y);
        }
        y
    }
}

fn parse_mask(mask: &[f64]) -> Result<Vec<bool>> {
    mask.iter()
        .enumerate()
        .map(|(index, &value)| {
            if value == 0.0 {
                Ok(false)
            } else if value == 1.0 {
                Ok(true)
            } else {
                Err(Error::NonBinaryMask { index, value })
            }
        })
        .collect()
}

/// `(Qv)_j = mask_j · v_j` with `mask_j ∈ {0, 1}`.
pub fn indicator_projector(mask: &[f64]) -> Result<OrthoProjector> {
    let mask = parse_mask(mask)?;
    Ok(OrthoProjector::from_mask(mask))
}

/// `Q = U·U*` with `U` an orthonormal basis of `span(vectors)`.
pub fn span_projector(vectors: &[Vec<c64>]) -> Result<OrthoProjector> {
    let o = orthonormalize(vectors)?;
    let dim = o.basis[0].len();
    let real = vectors.iter().all(|v| vector::is_real(v, 0.0));
    Ok(OrthoProjector {
        dim,
        real,
        repr: Repr::Span { basis: o.basis },
    })
}

/// Projector onto vectors that are free inside `mask_K` and proportional to
/// a combination of the references outside it.
///
/// References are zeroed inside `K` before orthonormalization, so the
/// diagonal and low-rank parts act on orthogonal coordinates.
pub fn localized_perturbation_projector(
    mask_k: &[f64],
    exterior_refs: &[Vec<c64>],
) -> Result<OrthoProjector> {
    let mask = parse_mask(mask_k)?;
    let dim = mask.len();
    if exterior_refs.is_empty() {
        return Err(Error::ZeroInput);
    }
    let mut restricted = Vec::with_capacity(exterior_refs.len());
    for (index, u) in exterior_refs.iter().enumerate() {
        if u.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: u.len(),
            });
        }
        let total = vector::norm(u);
        let ext: Vec<c64> = u
            .iter()
            .zip(&mask)
            .map(|(&z, &inside)| if inside { c64::new(0.0, 0.0) } else { z })
            .collect();
        let exterior = vector::norm(&ext);
        if exterior < 1e-12 * total || total == 0.0 {
            return Err(Error::ReferenceInsideMask {
                index,
                exterior,
                total,
            });
        }
        restricted.push(ext);
    }
    let o = orthonormalize(&restricted)?;
    let real = exterior_refs.iter().all(|v| vector::is_real(v, 0.0));
    Ok(OrthoProjector {
        dim,
        real,
        repr: Repr::IndicatorPlusSpan {
            mask,
            basis: o.basis,
        },
    })
}

/// Mean over a finite group of unitary index maps; projects onto the
/// vectors fixed by every element.
pub fn group_average_projector(actions: Vec<GroupAction>) -> Result<OrthoProjector> {
    let dim = actions.first().ok_or(Error::ZeroInput)?.dim();
    for (index, g) in actions.iter().enumerate() {
        if g.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: g.dim(),
            });
        }
        g.check_unitary(index)?;
    }
    for g in &actions {
        for h in &actions {
            let gh = g.compose(h);
            if !actions.iter().any(|a| a.approx_eq(&gh)) {
                return Err(Error::NotClosed);
            }
        }
    }
    let real = actions.iter().all(GroupAction::is_real);
    Ok(OrthoProjector {
        dim,
        real,
        repr: Repr::GroupAverage { actions },
    })
}

/// `I − Q`.
pub fn complement(inner: OrthoProjector) -> OrthoProjector {
    inner.complement()
}

/// `(τ, δ) = (‖Qv‖/‖v‖, ‖(I−Q)v‖/‖v‖)`.
pub fn tau_delta(q: &OrthoProjector, v: &[c64]) -> Result<(f64, f64)> {
    let qv = q.apply(v)?;
    let nv = vector::norm(v);
    if nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    let rest = vector::sub(v, &qv);
    Ok((vector::norm(&qv) / nv, vector::norm(&rest) / nv))
}

pub fn rank_structure(q: &OrthoProjector) -> RankStructure {
    q.rank_structure()
}

impl OrthoProjector {
    pub fn from_mask(mask: Vec<bool>) -> Self {
        Self {
            dim: mask.len(),
            real: true,
            repr: Repr::Indicator { mask },
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_mask(vec![true; n])
    }

    pub fn zero(n: usize) -> Self {
        Self::from_mask(vec![false; n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> ProjectorKind {
        match self.repr {
            Repr::Indicator { .. } => ProjectorKind::Indicator,
            Repr::Span { .. } => ProjectorKind::Span,
            Repr::IndicatorPlusSpan { .. } => ProjectorKind::IndicatorPlusSpan,
            Repr::GroupAverage { .. } => ProjectorKind::GroupAverage,
            Repr::Complement(_) => ProjectorKind::Complement,
        }
    }

    /// True when built from real data (real masks, references or phases);
    /// such projectors map real vectors to real vectors.
    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Orthonormal columns of the low-rank part, if any.
    pub fn basis(&self) -> &[Vec<c64>] {
        match &self.repr {
            Repr::Span { basis } | Repr::IndicatorPlusSpan { basis, .. } => basis,
            _ => &[],
        }
    }

    pub fn apply(&self, v: &[c64]) -> Result<Vec<c64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        let mut y = vector::zeros(self.dim);
        self.apply_into(v, &mut y);
        Ok(y)
    }

    pub fn apply_into(&self, v: &[c64], y: &mut [c64]) {
        match &self.repr {
            Repr::Indicator { mask } => {
                for ((yi, vi), &m) in y.iter_mut().zip(v).zip(mask) {
                    *yi = if m { *vi } else { c64::new(0.0, 0.0) };
                }
            }
            Repr::Span { basis } => {
                y.iter_mut().for_each(|z| *z = c64::new(0.0, 0.0));
                for u in basis {
                    vector::axpy(vector::dot(v, u), u, y);
                }
            }
            Repr::IndicatorPlusSpan { mask, basis } => {
                for ((yi, vi), &m) in y.iter_mut().zip(v).zip(mask) {
                    *yi = if m { *vi } else { c64::new(0.0, 0.0) };
                }
                for u in basis {
                    vector::axpy(vector::dot(v, u), u, y);
                }
            }
            Repr::GroupAverage { actions } => {
                y.iter_mut().for_each(|z| *z = c64::new(0.0, 0.0));
                let w = 1.0 / actions.len() as f64;
                for g in actions {
                    for (i, (&p, &ph)) in g.perm.iter().zip(&g.phases).enumerate() {
                        y[i] += ph * v[p] * w;
                    }
                }
            }
            Repr::Complement(inner) => {
                inner.apply_into(v, y);
                for (yi, vi) in y.iter_mut().zip(v) {
                    *yi = vi - *yi;
                }
            }
        }
    }

    pub fn complement(self) -> OrthoProjector {
        match self.repr {
            Repr::Complement(inner) => *inner,
            Repr::Indicator { mask } => OrthoProjector {
                dim: self.dim,
                real: self.real,
                repr: Repr::Indicator {
                    mask: mask.into_iter().map(|m| !m).collect(),
                },
            },
            repr => {
                let inner = OrthoProjector {
                    dim: self.dim,
                    real: self.real,
                    repr,
                };
                OrthoProjector {
                    dim: inner.dim,
                    real: inner.real,
                    repr: Repr::Complement(Box::new(inner)),
                }
            }
        }
    }

    pub fn rank_structure(&self) -> RankStructure {
        let mask_diag = |mask: &[bool]| -> Vec<f64> {
            mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect()
        };
        match &self.repr {
            Repr::Indicator { mask } => RankStructure {
                diagonal: mask_diag(mask),
                ..Default::default()
            },
            Repr::Span { basis } => RankStructure {
                factor: basis.clone(),
                signs: vec![1.0; basis.len()],
                rank: basis.len(),
                ..Default::default()
            },
            Repr::IndicatorPlusSpan { mask, basis } => RankStructure {
                diagonal: mask_diag(mask),
                factor: basis.clone(),
                signs: vec![1.0; basis.len()],
                rank: basis.len(),
                ..Default::default()
            },
            Repr::GroupAverage { actions } => {
                let w = 1.0 / actions.len() as f64;
                let mut acc: BTreeMap<(usize, usize), c64> = BTreeMap::new();
                for g in actions {
                    for (i, (&p, &ph)) in g.perm.iter().zip(&g.phases).enumerate() {
                        *acc.entry((i, p)).or_insert(c64::new(0.0, 0.0)) += ph * w;
                    }
                }
                RankStructure {
                    sparse: acc
                        .into_iter()
                        .filter(|(_, v)| v.norm() > 0.0)
                        .map(|((i, j), v)| (i, j, v))
                        .collect(),
                    ..Default::default()
                }
            }
            Repr::Complement(inner) => {
                let s = inner.rank_structure();
                let diagonal = if s.diagonal.is_empty() {
                    vec![1.0; self.dim]
                } else {
                    s.diagonal.iter().map(|d| 1.0 - d).collect()
                };
                RankStructure {
                    diagonal,
                    sparse: s.sparse.into_iter().map(|(i, j, v)| (i, j, -v)).collect(),
                    signs: s.signs.iter().map(|x| -x).collect(),
                    factor: s.factor,
                    rank: s.rank,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{dense_materialize, dense_eig, MatrixFreeOperator};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> c64 {
        c64::new(re, 0.0)
    }

    fn cv(x: &[f64]) -> Vec<c64> {
        vector::from_real(x)
    }

    fn close(a: &[c64], b: &[c64], tol: f64) -> bool {
        vector::norm(&vector::sub(a, b)) <= tol
    }

    fn random_mask(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| if rng.random_bool(0.4) { 1.0 } else { 0.0 }).collect()
    }

    fn cyclic_group(n: usize) -> Vec<GroupAction> {
        (0..n)
            .map(|k| GroupAction::permutation((0..n).map(|i| (i + k) % n).collect()))
            .collect()
    }

    /// One projector of every kind on dimension `n`.
    fn zoo(rng: &mut ChaCha8Rng, n: usize) -> Vec<OrthoProjector> {
        let vs: Vec<_> = (0..3).map(|_| vector::random_complex(rng, n)).collect();
        let refs: Vec<_> = (0..2).map(|_| vector::random_real(rng, n)).collect();
        let mut mask = random_mask(rng, n);
        mask[0] = 0.0;
        mask[1] = 0.0;
        let ind = indicator_projector(&random_mask(rng, n)).unwrap();
        let span = span_projector(&vs).unwrap();
        let loc = localized_perturbation_projector(&mask, &refs).unwrap();
        let grp = group_average_projector(cyclic_group(n)).unwrap();
        vec![
            ind.clone(),
            span.clone(),
            loc.clone(),
            grp.clone(),
            complement(span),
            complement(loc),
            complement(grp),
            complement(ind),
        ]
    }

    #[test]
    fn indicator_examples() {
        let q = indicator_projector(&[1.0, 1.0, 0.0]).unwrap();
        assert_eq!(q.apply(&cv(&[1.0, 2.0, 3.0])).unwrap(), cv(&[1.0, 2.0, 0.0]));
        let id = indicator_projector(&[1.0; 4]).unwrap();
        let v = cv(&[1.0, -2.0, 3.0, 4.0]);
        assert_eq!(id.apply(&v).unwrap(), v);
        assert!(matches!(
            indicator_projector(&[1.0, 0.5]),
            Err(Error::NonBinaryMask { index: 1, .. })
        ));
    }

    #[test]
    fn indicator_materializes_to_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mask = random_mask(&mut rng, 20);
        let q = indicator_projector(&mask).unwrap();
        let m = dense_materialize(&as_operator(&q), 100).unwrap();
        let mut trace = 0.0;
        for i in 0..20 {
            for j in 0..20 {
                if i != j {
                    assert_eq!(m[(i, j)], c(0.0));
                }
            }
            trace += m[(i, i)].re;
        }
        assert_eq!(trace, mask.iter().sum::<f64>());
    }

    #[test]
    fn span_examples() {
        let q = span_projector(&[cv(&[1.0, 0.0])]).unwrap();
        assert_eq!(q.apply(&cv(&[3.0, 4.0])).unwrap(), cv(&[3.0, 0.0]));
        let full = span_projector(&[cv(&[1.0, 1.0]), cv(&[1.0, -1.0])]).unwrap();
        assert!(close(&full.apply(&cv(&[3.0, 4.0])).unwrap(), &cv(&[3.0, 4.0]), 1e-14));
        assert!(matches!(span_projector(&[cv(&[0.0, 0.0])]), Err(Error::ZeroInput)));
    }

    #[test]
    fn span_of_three_random_vectors_has_rank_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let vs: Vec<_> = (0..3).map(|_| vector::random_complex(&mut rng, 8)).collect();
        let q = span_projector(&vs).unwrap();
        let m = dense_materialize(&as_operator(&q), 100).unwrap();
        let spec = dense_eig(m.as_ref(), true).unwrap();
        let rank = spec.values.iter().filter(|z| z.re > 0.5).count();
        assert_eq!(rank, 3);
        let m2 = &m * &m;
        for i in 0..8 {
            for j in 0..8 {
                assert!((m2[(i, j)] - m[(i, j)]).norm() <= 1e-10);
                assert!((m[(i, j)] - m[(j, i)].conj()).norm() <= 1e-10);
            }
        }
        // range contains the inputs
        for v in &vs {
            assert!(close(&q.apply(v).unwrap(), v, 1e-10 * vector::norm(v)));
        }
    }

    #[test]
    fn localized_perturbation_examples() {
        let q = localized_perturbation_projector(&[1.0, 1.0, 0.0, 0.0], &[cv(&[9.0, 9.0, 1.0, 1.0])])
            .unwrap();
        let v = cv(&[5.0, 6.0, 1.0, 1.0]);
        assert!(close(&q.apply(&v).unwrap(), &v, 1e-14));
        let w = cv(&[0.0, 0.0, 1.0, -1.0]);
        assert!(close(&q.apply(&w).unwrap(), &cv(&[0.0; 4]), 1e-14));
    }

    #[test]
    fn localized_perturbation_rejects_interior_reference() {
        let r = localized_perturbation_projector(&[1.0, 1.0, 0.0], &[cv(&[1.0, 2.0, 0.0])]);
        assert!(matches!(r, Err(Error::ReferenceInsideMask { index: 0, .. })));
    }

    #[test]
    fn localized_perturbation_materializes_to_diag_plus_low_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 15;
        let mut mask = random_mask(&mut rng, n);
        mask[0] = 0.0;
        let refs: Vec<_> = (0..2).map(|_| vector::random_complex(&mut rng, n)).collect();
        let q = localized_perturbation_projector(&mask, &refs).unwrap();
        let m = dense_materialize(&as_operator(&q), 100).unwrap();
        let basis = q.basis();
        for i in 0..n {
            for j in 0..n {
                let mut want = if i == j { c(mask[i]) } else { c(0.0) };
                for u in basis {
                    want += u[i] * u[j].conj();
                }
                assert!((m[(i, j)] - want).norm() <= 1e-12);
            }
        }
        let m2 = &m * &m;
        for i in 0..n {
            for j in 0..n {
                assert!((m2[(i, j)] - m[(i, j)]).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn group_average_examples() {
        let swap = group_average_projector(vec![
            GroupAction::identity(2),
            GroupAction::permutation(vec![1, 0]),
        ])
        .unwrap();
        assert!(close(&swap.apply(&cv(&[1.0, 3.0])).unwrap(), &cv(&[2.0, 2.0]), 1e-15));
        let fixed = cv(&[4.0, 4.0]);
        assert!(close(&swap.apply(&fixed).unwrap(), &fixed, 1e-15));

        let c4 = group_average_projector(cyclic_group(4)).unwrap();
        let m = dense_materialize(&as_operator(&c4), 10).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((m[(i, j)] - c(0.25)).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn group_average_validates_input() {
        let not_closed = vec![GroupAction::identity(3), GroupAction::permutation(vec![1, 2, 0])];
        assert!(matches!(group_average_projector(not_closed), Err(Error::NotClosed)));
        let not_bijective = vec![GroupAction::permutation(vec![0, 0])];
        assert!(matches!(
            group_average_projector(not_bijective),
            Err(Error::NotUnitary { index: 0, .. })
        ));
        let bad_phase = vec![GroupAction::with_phases(vec![0], vec![c(2.0)])];
        assert!(matches!(
            group_average_projector(bad_phase),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn signed_group_average() {
        // {id, negation}: only the zero vector is fixed
        let neg = GroupAction::with_phases(vec![0, 1], vec![c(-1.0), c(-1.0)]);
        let q = group_average_projector(vec![GroupAction::identity(2), neg]).unwrap();
        assert!(close(&q.apply(&cv(&[1.0, 2.0])).unwrap(), &cv(&[0.0, 0.0]), 0.0));
    }

    #[test]
    fn complement_examples() {
        let id = OrthoProjector::identity(3);
        let zero = complement(id);
        assert_eq!(zero.apply(&cv(&[1.0, 2.0, 3.0])).unwrap(), cv(&[0.0; 3]));
        let q = indicator_projector(&[1.0, 0.0]).unwrap();
        assert_eq!(complement(q).apply(&cv(&[2.0, 3.0])).unwrap(), cv(&[0.0, 3.0]));

        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for q in zoo(&mut rng, 10) {
            let qq = complement(complement(q.clone()));
            for _ in 0..5 {
                let v = vector::random_complex(&mut rng, 10);
                assert!(close(&qq.apply(&v).unwrap(), &q.apply(&v).unwrap(), 1e-14));
            }
        }
    }

    #[test]
    fn tau_delta_examples() {
        let q = span_projector(&[cv(&[1.0, 0.0])]).unwrap();
        let (t, d) = tau_delta(&q, &cv(&[3.0, 4.0])).unwrap();
        assert!((t - 0.6).abs() < 1e-15 && (d - 0.8).abs() < 1e-15);
        assert_eq!(tau_delta(&q, &cv(&[2.0, 0.0])).unwrap(), (1.0, 0.0));
        assert_eq!(tau_delta(&q, &cv(&[0.0, 2.0])).unwrap(), (0.0, 1.0));
        assert!(matches!(tau_delta(&q, &cv(&[0.0, 0.0])), Err(Error::ZeroVector)));
    }

    #[test]
    fn rank_structure_examples() {
        let ind = indicator_projector(&[1.0, 0.0, 1.0]).unwrap();
        let s = rank_structure(&ind);
        assert_eq!((s.diagonal.clone(), s.factor.len(), s.rank), (vec![1.0, 0.0, 1.0], 0, 0));

        let loc = localized_perturbation_projector(&[1.0, 0.0, 0.0], &[cv(&[1.0, 1.0, 1.0])]).unwrap();
        let s = rank_structure(&loc);
        assert_eq!((s.diagonal.clone(), s.rank), (vec![1.0, 0.0, 0.0], 1));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let vs: Vec<_> = (0..4).map(|_| vector::random_complex(&mut rng, 9)).collect();
        let s = rank_structure(&span_projector(&vs).unwrap());
        assert!(s.diagonal.is_empty());
        assert_eq!((s.factor.len(), s.rank), (4, 4));
    }

    #[test]
    fn invariants_hold_for_every_kind() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 24;
        for q in zoo(&mut rng, n) {
            let s = q.rank_structure();
            for _ in 0..100 {
                let u = vector::random_complex(&mut rng, n);
                let v = vector::random_complex(&mut rng, n);
                let nv = vector::norm(&v);
                let qv = q.apply(&v).unwrap();
                let qqv = q.apply(&qv).unwrap();
                assert!(vector::norm(&vector::sub(&qqv, &qv)) <= 1e-10 * nv, "{:?}", q.kind());
                let qu = q.apply(&u).unwrap();
                let adj = (vector::dot(&qu, &v) - vector::dot(&u, &qv)).norm();
                assert!(adj <= 1e-10 * vector::norm(&u) * nv, "{:?}", q.kind());
                assert!(vector::norm(&qv) <= (1.0 + 1e-12) * nv);
                let (t, d) = tau_delta(&q, &v).unwrap();
                assert!((t * t + d * d - 1.0).abs() <= 1e-10);
                assert!(close(&s.apply(&v), &qv, 1e-12 * nv), "{:?}", q.kind());
            }
        }
    }

    #[test]
    fn real_data_gives_real_projector() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 16;
        let mut mask = random_mask(&mut rng, n);
        mask[3] = 0.0;
        let refs = vec![vector::random_real(&mut rng, n)];
        let span = span_projector(&[vector::random_real(&mut rng, n), vector::random_real(&mut rng, n)])
            .unwrap();
        let signed = vec![
            GroupAction::identity(n),
            GroupAction::with_phases((0..n).rev().collect(), vec![c(-1.0); n]),
        ];
        let qs = [
            indicator_projector(&mask).unwrap(),
            localized_perturbation_projector(&mask, &refs).unwrap(),
            group_average_projector(signed).unwrap(),
            span,
        ];
        for q in qs {
            assert!(q.is_real());
            let v = vector::real_part(&vector::random_complex(&mut rng, n));
            let y = q.apply(&v).unwrap();
            assert!(y.iter().all(|z| z.im.abs() <= 1e-12), "{:?}", q.kind());
        }
    }

    #[test]
    fn group_average_commutes_with_elements() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 12;
        let group = cyclic_group(n);
        let q = group_average_projector(group.clone()).unwrap();
        for _ in 0..20 {
            let v = vector::random_complex(&mut rng, n);
            let qv = q.apply(&v).unwrap();
            for g in &group {
                let gqv = g.apply(&qv);
                assert!(vector::norm(&vector::sub(&gqv, &qv)) <= 1e-10 * vector::norm(&v));
            }
        }
    }

    #[test]
    fn tau_delta_is_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let q = span_projector(&[vector::random_complex(&mut rng, 7)]).unwrap();
        let v = vector::random_complex(&mut rng, 7);
        let (t0, d0) = tau_delta(&q, &v).unwrap();
        let (t1, d1) = tau_delta(&q, &vector::scaled(&v, c64::new(-3.0, 2.5))).unwrap();
        assert!((t0 - t1).abs() < 1e-14 && (d0 - d1).abs() < 1e-14);
    }

    fn as_operator(q: &OrthoProjector) -> MatrixFreeOperator {
        let q = q.clone();
        MatrixFreeOperator::new(q.dim(), q.is_real(), move |x, y| q.apply_into(x, y))
    }
}
