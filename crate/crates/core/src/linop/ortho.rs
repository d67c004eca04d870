use faer::c64;

use super::vector;
use crate::{Error, Result};

/// Columns whose residual norm after projection falls below this fraction of
/// the largest input norm are treated as dependent and dropped.
pub const DROP_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Orthonormalized {
    pub basis: Vec<Vec<c64>>,
    pub rank: usize,
}

/// Gram–Schmidt with one reorthogonalization pass per column.
pub fn orthonormalize(vectors: &[Vec<c64>]) -> Result<Orthonormalized> {
    let first = vectors.first().ok_or(Error::ZeroInput)?;
    let n = first.len();
    if let Some(bad) = vectors.iter().find(|v| v.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: bad.len(),
        });
    }
    let largest = vectors.iter().map(|v| vector::norm(v)).fold(0.0, f64::max);
    if largest == 0.0 {
        return Err(Error::ZeroInput);
    }
    let mut basis: Vec<Vec<c64>> = Vec::with_capacity(vectors.len().min(n));
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let h = vector::dot(&w, q);
                vector::axpy(-h, q, &mut w);
            }
        }
        let nrm = vector::norm(&w);
        if nrm > DROP_TOLERANCE * largest {
            vector::scale(&mut w, c64::new(1.0 / nrm, 0.0));
            basis.push(w);
        }
    }
    let rank = basis.len();
    Ok(Orthonormalized { basis, rank })
}
