//! Seeded random instances: a dense Hermitian `L` and one projector of each kind.

use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linop::{orthonormalize, vector, DenseOperator};
use crate::projectors::{
    group_average_projector, indicator_projector, localized_perturbation_projector, span_projector, GroupAction,
    OrthoProjector,
};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomProjector {
    Indicator,
    Span,
    Localized,
    GroupAverage,
    Complement,
}

impl RandomProjector {
    pub const ALL: [RandomProjector; 5] = [
        RandomProjector::Indicator,
        RandomProjector::Span,
        RandomProjector::Localized,
        RandomProjector::GroupAverage,
        RandomProjector::Complement,
    ];
}

#[derive(Clone, Debug)]
pub struct RandomInstance {
    pub operator: DenseOperator,
    pub projector: OrthoProjector,
    /// Eigenvalues of `L` in ascending order (as constructed).
    pub spectrum: Vec<f64>,
}

/// Hermitian matrix `X·diag(values)·X*` with a Haar-like random unitary `X`.
pub fn hermitian_with_spectrum<R: Rng + ?Sized>(values: &[f64], real: bool, rng: &mut R) -> DenseOperator {
    let n = values.len();
    let vs: Vec<_> = (0..n)
        .map(|_| if real { vector::random_real(rng, n) } else { vector::random_complex(rng, n) })
        .collect();
    let x = orthonormalize(&vs).expect("random vectors are independent").basis;
    let m = Mat::from_fn(n, n, |i, j| (0..n).map(|k| x[k][i] * x[k][j].conj() * values[k]).sum::<c64>());
    // symmetrize away rounding so the Hermitian check is exact
    let m = Mat::from_fn(n, n, |i, j| {
        let z = 0.5 * (m[(i, j)] + m[(j, i)].conj());
        if real || i == j {
            c64::new(z.re, 0.0)
        } else {
            z
        }
    });
    DenseOperator::new(m).expect("symmetrized matrix is Hermitian")
}

fn random_mask<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Vec<f64> {
    let mut mask: Vec<f64> = (0..n).map(|_| rng.random_bool(p) as u8 as f64).collect();
    // keep both parts nonempty
    mask[0] = 1.0;
    mask[n - 1] = 0.0;
    mask
}

pub fn random_projector<R: Rng + ?Sized>(kind: RandomProjector, n: usize, real: bool, rng: &mut R) -> Result<OrthoProjector> {
    let draw = |rng: &mut R| if real { vector::random_real(rng, n) } else { vector::random_complex(rng, n) };
    match kind {
        RandomProjector::Indicator => indicator_projector(&random_mask(n, 0.3, rng)),
        RandomProjector::Span => {
            let k = rng.random_range(1..=5.min(n - 1));
            let vs: Vec<_> = (0..k).map(|_| draw(rng)).collect();
            span_projector(&vs)
        }
        RandomProjector::Localized => {
            let mask = random_mask(n, 0.25, rng);
            let k = rng.random_range(1..=2);
            let refs: Vec<_> = (0..k).map(|_| draw(rng)).collect();
            localized_perturbation_projector(&mask, &refs)
        }
        RandomProjector::GroupAverage => {
            // Z₂ acting by a random involution (product of disjoint swaps)
            let mut perm: Vec<usize> = (0..n).collect();
            let mut order: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                order.swap(i, rng.random_range(0..=i));
            }
            for pair in order.chunks_exact(2) {
                perm.swap(pair[0], pair[1]);
            }
            group_average_projector(vec![GroupAction::identity(n), GroupAction::permutation(perm)])
        }
        RandomProjector::Complement => {
            let k = rng.random_range(1..=3);
            let vs: Vec<_> = (0..k).map(|_| draw(rng)).collect();
            Ok(span_projector(&vs)?.complement())
        }
    }
}

/// Eigenvalues uniform in `[−5, 5]`, sorted.
pub fn random_instance(seed: u64, n: usize, kind: RandomProjector, real: bool) -> Result<RandomInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spectrum: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
    spectrum.sort_by(f64::total_cmp);
    let operator = hermitian_with_spectrum(&spectrum, real, &mut rng);
    let projector = random_projector(kind, n, real, &mut rng)?;
    Ok(RandomInstance {
        operator,
        projector,
        spectrum,
    })
}
