//! Points, axis-aligned cubes and dyadic grids.
//!
//! A [`Grid`] is the family of `2^{kd}` congruent subcubes obtained by cutting
//! every edge of a root cube into `2^k` equal intervals. Cells are indexed
//! lexicographically on their integer multi-index, last axis fastest. The
//! union of cell boundaries is the grid skeleton; several constructions need
//! every atom of a measure to stay off it, which is what
//! [`shift_grid_avoiding`] arranges.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance (times the root edge) for skeleton and face membership.
pub const SKELETON_TOL: f64 = 1e-12;

/// A point of `R^d`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl Point {
    /// Builds a point; panics in debug builds on non-finite input.
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        let coords = coords.into();
        debug_assert!(coords.iter().all(|c| c.is_finite()), "non-finite point");
        Point(coords)
    }

    pub fn try_new(coords: impl Into<Vec<f64>>) -> Result<Self> {
        let coords = coords.into();
        if coords.is_empty() {
            return Err(Error::InvalidArgument("point of dimension 0".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Point(coords))
    }

    pub fn origin(d: usize) -> Self {
        Point(vec![0.0; d])
    }

    /// The `i`-th standard basis vector of `R^d`.
    pub fn unit(d: usize, i: usize) -> Self {
        let mut c = vec![0.0; d];
        c[i] = 1.0;
        Point(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn add(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, s: f64) -> Point {
        Point(self.0.iter().map(|a| a * s).collect())
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// `self + t (other - self)`.
    pub fn lerp(&self, other: &Point, t: f64) -> Point {
        Point(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + t * (b - a))
                .collect(),
        )
    }

    /// Sup-norm distance without the dimension check.
    pub(crate) fn sup_dist_unchecked(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Lexicographic order on coordinates (total order via `f64::total_cmp`).
    pub fn lex_cmp(&self, other: &Point) -> std::cmp::Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                std::cmp::Ordering::Equal => continue,
                o => return o,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point::new(v)
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(v: [f64; N]) -> Self {
        Point::new(v.to_vec())
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// `‖z − x‖_∞`.
pub fn sup_dist(z: &Point, x: &Point) -> Result<f64> {
    check_dim(z.dim(), x.dim())?;
    Ok(z.sup_dist_unchecked(x))
}

/// An axis-aligned closed cube.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub center: Point,
    pub edge: f64,
}

impl Cube {
    pub fn new(center: Point, edge: f64) -> Result<Self> {
        if !center.is_finite() || !edge.is_finite() {
            return Err(Error::NonFinite);
        }
        if edge <= 0.0 {
            return Err(Error::InvalidArgument(format!("cube edge {edge} <= 0")));
        }
        Ok(Cube { center, edge })
    }

    /// `[0, 1]^d`.
    pub fn unit(d: usize) -> Self {
        Cube {
            center: Point(vec![0.5; d]),
            edge: 1.0,
        }
    }

    /// The cube `[lo, lo + edge]^d` with lower corner `lo`.
    pub fn from_corner(lo: &Point, edge: f64) -> Result<Self> {
        Cube::new(lo.add(&Point(vec![edge / 2.0; lo.dim()])), edge)
    }

    /// Smallest cube containing every point, with `margin` added on each side.
    pub fn bounding(points: &[Point], margin: f64) -> Result<Cube> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidArgument("no points to bound".into()))?;
        let d = first.dim();
        let mut lo = first.0.clone();
        let mut hi = first.0.clone();
        for p in points {
            check_dim(d, p.dim())?;
            for k in 0..d {
                lo[k] = lo[k].min(p.0[k]);
                hi[k] = hi[k].max(p.0[k]);
            }
        }
        let extent = (0..d).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
        let center = Point((0..d).map(|k| 0.5 * (lo[k] + hi[k])).collect());
        Cube::new(center, extent + 2.0 * margin)
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn lower(&self) -> Point {
        Point(self.center.0.iter().map(|c| c - self.edge / 2.0).collect())
    }

    pub fn upper(&self) -> Point {
        Point(self.center.0.iter().map(|c| c + self.edge / 2.0).collect())
    }

    /// Euclidean diameter `edge · √d`.
    pub fn diameter(&self) -> f64 {
        self.edge * (self.dim() as f64).sqrt()
    }

    /// Concentric cube with homothety ratio `rho`.
    pub fn enlarge(&self, rho: f64) -> Result<Cube> {
        if !rho.is_finite() || rho <= 0.0 {
            return Err(Error::InvalidArgument(format!("homothety ratio {rho} <= 0")));
        }
        Ok(Cube {
            center: self.center.clone(),
            edge: self.edge * rho,
        })
    }

    fn tol(&self) -> f64 {
        SKELETON_TOL * self.edge.max(1.0)
    }

    /// Closed membership with tolerance.
    pub fn contains(&self, p: &Point) -> bool {
        p.sup_dist_unchecked(&self.center) <= self.edge / 2.0 + self.tol()
    }

    /// Open membership: strictly inside, farther than the tolerance from every face.
    pub fn contains_strict(&self, p: &Point) -> bool {
        p.sup_dist_unchecked(&self.center) < self.edge / 2.0 - self.tol()
    }

    pub fn on_boundary(&self, p: &Point) -> bool {
        (p.sup_dist_unchecked(&self.center) - self.edge / 2.0).abs() <= self.tol()
    }

    pub fn contains_cube(&self, other: &Cube) -> bool {
        other.center.sup_dist_unchecked(&self.center) + other.edge / 2.0
            <= self.edge / 2.0 + self.tol()
    }

    pub fn subdivide(&self, k: u32) -> Result<Grid> {
        Grid::new(self.clone(), k)
    }
}

/// The dyadic grid `Λ(Q, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    root: Cube,
    level: u32,
}

impl Grid {
    pub fn new(root: Cube, level: u32) -> Result<Self> {
        let d = root.dim() as u32;
        if level.checked_mul(d).map_or(true, |b| b >= 63) {
            return Err(Error::Budget(format!(
                "grid level {level} in dimension {d} has too many cells"
            )));
        }
        Ok(Grid { root, level })
    }

    pub fn root(&self) -> &Cube {
        &self.root
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.root.dim()
    }

    /// Cells per axis, `2^k`.
    pub fn side(&self) -> u64 {
        1u64 << self.level
    }

    pub fn cell_count(&self) -> u64 {
        self.side().pow(self.dim() as u32)
    }

    pub fn cell_edge(&self) -> f64 {
        self.root.edge / self.side() as f64
    }

    pub fn multi_index(&self, index: u64) -> Vec<u64> {
        let side = self.side();
        let d = self.dim();
        let mut idx = vec![0; d];
        let mut rest = index;
        for j in (0..d).rev() {
            idx[j] = rest % side;
            rest /= side;
        }
        idx
    }

    pub fn flat_index(&self, multi: &[u64]) -> u64 {
        multi.iter().fold(0, |acc, &m| acc * self.side() + m)
    }

    pub fn cell(&self, index: u64) -> Cube {
        let h = self.cell_edge();
        let lo = self.root.lower();
        let center = self
            .multi_index(index)
            .iter()
            .zip(lo.coords())
            .map(|(&m, &l)| l + (m as f64 + 0.5) * h)
            .collect::<Vec<_>>();
        Cube {
            center: Point(center),
            edge: h,
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = Cube> + '_ {
        (0..self.cell_count()).map(move |i| self.cell(i))
    }

    /// Cell containing `p` with half-open cells (the upper face of the root
    /// belongs to the last cell). `None` when `p` is outside the root cube.
    pub fn locate(&self, p: &Point) -> Option<u64> {
        if p.dim() != self.dim() || !self.root.contains(p) {
            return None;
        }
        let h = self.cell_edge();
        let side = self.side();
        let multi: Vec<u64> = p
            .coords()
            .iter()
            .zip(self.root.lower().coords())
            .map(|(&x, &l)| {
                let m = ((x - l) / h).floor();
                (m.max(0.0) as u64).min(side - 1)
            })
            .collect();
        Some(self.flat_index(&multi))
    }

    /// Whether `p` lies on the skeleton `S(Q, k)`.
    pub fn on_skeleton(&self, p: &Point) -> bool {
        if p.dim() != self.dim() || !self.root.contains(p) {
            return false;
        }
        let h = self.cell_edge();
        let tol = self.root.tol();
        p.coords()
            .iter()
            .zip(self.root.lower().coords())
            .any(|(&x, &l)| {
                let s = (x - l) / h;
                (s - s.round()).abs() * h <= tol
            })
    }

    /// Locates `p` in the interior of a cell, rejecting skeleton points.
    pub fn locate_strict(&self, p: &Point) -> Option<u64> {
        if self.on_skeleton(p) {
            None
        } else {
            self.locate(p)
        }
    }
}

/// Dividing each edge of `q` into `2^k` intervals.
pub fn subdivide(q: &Cube, k: u32) -> Result<Grid> {
    q.subdivide(k)
}

pub fn enlarge(q: &Cube, rho: f64) -> Result<Cube> {
    q.enlarge(rho)
}

/// Returns a cube `Q' ⊇ Q` of edge `⌈Q.edge⌉ + 2` whose skeletons at every
/// level `k ≤ kmax` contain none of `atoms`.
///
/// `Q''` is the concentric cube with integer edge and unit margin; each axis
/// is then translated by the first offset `m/(N+1) ∈ [0, 1)` that clears
/// every atom. The level-`kmax` hyperplanes contain all coarser ones, so only
/// that level is tested.
pub fn shift_grid_avoiding(q: &Cube, atoms: &[Point], kmax: u32) -> Result<Cube> {
    let d = q.dim();
    for a in atoms {
        check_dim(d, a.dim())?;
        if !a.is_finite() {
            return Err(Error::NonFinite);
        }
    }
    let edge = q.edge.ceil() + 2.0;
    let base_lo: Vec<f64> = q.center.coords().iter().map(|c| c - edge / 2.0).collect();
    // the grid at kmax must be representable
    Grid::new(Cube::new(q.center.clone(), edge)?, kmax)?;
    let spacing = edge / (1u64 << kmax) as f64;
    let tol = SKELETON_TOL * edge;

    let blocked = |axis: usize, lo: f64| {
        atoms.iter().any(|a| {
            let s = (a.coords()[axis] - lo) / spacing;
            (s - s.round()).abs() * spacing <= tol
        })
    };

    let mut lo = base_lo.clone();
    for (axis, slot) in lo.iter_mut().enumerate() {
        let mut found = None;
        // primes avoid resonance with the dyadic spacing
        'search: for denom in [1009u64, 10007, 100_003, 1_000_003] {
            for m in 0..denom {
                let rho = m as f64 / denom as f64;
                let cand = base_lo[axis] + rho;
                if !blocked(axis, cand) {
                    found = Some(cand);
                    break 'search;
                }
            }
        }
        *slot = found.ok_or_else(|| {
            Error::Budget(format!("no admissible grid offset on axis {axis}"))
        })?;
    }
    Cube::from_corner(&Point(lo), edge)
}
