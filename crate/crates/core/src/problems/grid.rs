//! Cell-centred grids on a masked box and the finite-difference Neumann
//! Laplacian on them.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::Serialize;

use crate::linop::SparseOperator;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    Square,
    DiskWithHole,
    HexAnnulus,
    Custom,
}

/// An `nx × ny` array of square cells of side `h` whose lower-left corner is
/// `origin`; active cells form the domain and are numbered row by row.
#[derive(Clone, Debug)]
pub struct GridDomain {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: [f64; 2],
    pub geometry: Geometry,
    mask: Vec<bool>,
    /// cell (row-major) → vector coordinate
    index: Vec<Option<usize>>,
    /// vector coordinate → cell
    cells: Vec<usize>,
}

impl GridDomain {
    /// `mask` is row-major, `mask[j·nx + i]` for column `i` and row `j`.
    pub fn new(nx: usize, ny: usize, h: f64, origin: [f64; 2], mask: Vec<bool>, geometry: Geometry) -> Result<Self> {
        if mask.len() != nx * ny {
            return Err(Error::DimensionMismatch {
                expected: nx * ny,
                got: mask.len(),
            });
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid spacing must be positive, got {h}")));
        }
        let mut index = vec![None; mask.len()];
        let mut cells = Vec::new();
        for (c, &on) in mask.iter().enumerate() {
            if on {
                index[c] = Some(cells.len());
                cells.push(c);
            }
        }
        if cells.is_empty() {
            return Err(Error::ZeroInput);
        }
        Ok(Self {
            nx,
            ny,
            h,
            origin,
            geometry,
            mask,
            index,
            cells,
        })
    }

    /// `n × n` cells covering `[lo, hi]²`, keeping centres where `inside` holds.
    pub fn from_predicate(n: usize, lo: f64, hi: f64, geometry: Geometry, inside: impl Fn(f64, f64) -> bool) -> Result<Self> {
        let h = (hi - lo) / n as f64;
        let mask = (0..n * n)
            .map(|c| {
                let (i, j) = (c % n, c / n);
                inside(lo + (i as f64 + 0.5) * h, lo + (j as f64 + 0.5) * h)
            })
            .collect();
        Self::new(n, n, h, [lo, lo], mask, geometry)
    }

    /// `(−1, 1)²`.
    pub fn square(n: usize) -> Result<Self> {
        Self::from_predicate(n, -1.0, 1.0, Geometry::Square, |_, _| true)
    }

    /// The unit disk minus the disk of radius 1/5 about `(0, 1/2)`.
    pub fn disk_with_hole(n: usize) -> Result<Self> {
        Self::from_predicate(n, -1.0, 1.0, Geometry::DiskWithHole, |x, y| {
            x * x + y * y < 1.0 && x * x + (y - 0.5) * (y - 0.5) > 0.04
        })
    }

    /// `U ∖ (U/2)` with `U` the regular hexagon inscribed in the unit circle
    /// (vertices at angles `kπ/3`).
    pub fn hex_annulus(n: usize) -> Result<Self> {
        let s3 = 3f64.sqrt();
        let in_hex = |x: f64, y: f64, r: f64| y.abs() <= r * s3 / 2.0 && s3 * x.abs() + y.abs() <= r * s3;
        Self::from_predicate(n, -1.0, 1.0, Geometry::HexAnnulus, move |x, y| {
            in_hex(x, y, 1.0) && !in_hex(x, y, 0.5)
        })
    }

    pub fn n_active(&self) -> usize {
        self.cells.len()
    }

    pub fn is_active(&self, i: usize, j: usize) -> bool {
        i < self.nx && j < self.ny && self.mask[j * self.nx + i]
    }

    /// Vector coordinate of cell `(i, j)`, if active.
    pub fn coordinate(&self, i: usize, j: usize) -> Option<usize> {
        if i < self.nx && j < self.ny {
            self.index[j * self.nx + i]
        } else {
            None
        }
    }

    /// `(i, j)` of vector coordinate `k`.
    pub fn cell(&self, k: usize) -> (usize, usize) {
        let c = self.cells[k];
        (c % self.nx, c / self.nx)
    }

    /// Centre of vector coordinate `k`.
    pub fn center(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.cell(k);
        (
            self.origin[0] + (i as f64 + 0.5) * self.h,
            self.origin[1] + (j as f64 + 0.5) * self.h,
        )
    }

    pub fn centers(&self) -> Vec<(f64, f64)> {
        (0..self.n_active()).map(|k| self.center(k)).collect()
    }

    /// Per-coordinate 0/1 values of `pred` at cell centres.
    pub fn indicator(&self, pred: impl Fn(f64, f64) -> bool) -> Vec<f64> {
        self.centers().into_iter().map(|(x, y)| if pred(x, y) { 1.0 } else { 0.0 }).collect()
    }

    /// Active neighbours of coordinate `k` (east, north, west, south).
    pub fn neighbors(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.cell(k);
        let steps: [(isize, isize); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
        steps.into_iter().filter_map(move |(di, dj)| {
            let (ii, jj) = (i as isize + di, j as isize + dj);
            if ii < 0 || jj < 0 {
                None
            } else {
                self.coordinate(ii as usize, jj as usize)
            }
        })
    }

    /// Number of 4-connected components of the active cells.
    pub fn components(&self) -> usize {
        let n = self.n_active();
        let mut seen = vec![false; n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(k) = queue.pop_front() {
                for m in self.neighbors(k) {
                    if !seen[m] {
                        seen[m] = true;
                        queue.push_back(m);
                    }
                }
            }
        }
        count
    }

    /// Row-major `ny × nx` array with `NaN` on inactive cells.
    pub fn to_grid(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![f64::NAN; self.nx * self.ny];
        for (k, &c) in self.cells.iter().enumerate() {
            out[c] = values[k];
        }
        out
    }

    /// CSV with one grid row per line (row `j = 0` first), `NaN` outside.
    pub fn grid_csv(&self, values: &[f64]) -> String {
        let grid = self.to_grid(values);
        let mut s = String::with_capacity(grid.len() * 12);
        for row in grid.chunks(self.nx) {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                if v.is_nan() {
                    s.push_str("NaN");
                } else {
                    let _ = write!(s, "{v:e}");
                }
            }
            s.push('\n');
        }
        s
    }
}

/// `−Δ_h + diag(potential)` with zero-flux closure at every inactive or
/// out-of-box neighbour: each active neighbour contributes `1/h²` to the
/// diagonal and `−1/h²` off it.
pub fn fd_operator(domain: &GridDomain, potential: &[f64]) -> Result<SparseOperator> {
    let n = domain.n_active();
    if potential.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: potential.len(),
        });
    }
    if let Some(k) = potential.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("potential is not finite at coordinate {k}")));
    }
    let components = domain.components();
    if components != 1 {
        return Err(Error::DisconnectedMask { components });
    }
    let w = 1.0 / (domain.h * domain.h);
    let mut t = Vec::with_capacity(5 * n);
    for (k, &v) in potential.iter().enumerate() {
        let mut diag = v;
        for m in domain.neighbors(k) {
            diag += w;
            t.push((k, m, -w));
        }
        t.push((k, k, diag));
    }
    SparseOperator::from_real_triplets(n, &t)
}
