//! Find eigenpairs of a self-adjoint operator `L` whose eigenvalues lie in an
//! interval `[a, b]` and whose eigenvectors lie within a normalized distance
//! `δ*` of a closed subspace `W`.
//!
//! The subspace enters through its orthogonal projector `Q`. The eigenproblem
//! for the non-Hermitian operator `L(s) = L + i·s·Q` is solved near the
//! segment `[a, b] + i·s`: every eigenpair `(μ, φ)` of `L(s)` satisfies
//! `Im μ = s·τ²(φ)` with `τ(φ) = ‖Qφ‖/‖φ‖`, so eigenvectors close to `W`
//! are lifted towards the line `Im = s` while the rest stay near the real axis.
//!
//! Module map:
//!
//! * [`linop`]: vectors, Hermitian operators, dense oracle.
//! * [`projectors`]: orthogonal projectors and their sparse/low-rank split.
//! * [`perturb`]: `L(s)` with Woodbury shifted solves.
//! * [`eigensolve`]: shift-invert Krylov–Schur with deflation sweeps.
//! * [`pipeline`]: the accept/reject driver, rescaling, bound validators.
//! * [`problems`]: grid, Zernike and graph problem builders.

pub mod eigensolve;
pub mod error;
pub mod linop;
pub mod perturb;
pub mod pipeline;
pub mod problems;
pub mod projectors;

pub use error::{Error, Result};
pub use faer::c64;
