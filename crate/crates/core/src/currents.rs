//! Polyhedral 1-currents with real multiplicities.
//!
//! A current is a finite sum of oriented segments `θ·[a, b]`. The canonical
//! form keeps every multiplicity positive (a negative `θ` flips the segment),
//! snaps endpoints closer than [`ATOM_TOL`] onto one vertex, and splits
//! collinear overlapping segments at each other's endpoints so that the
//! multiplicity on every piece is the sum of the contributions. This is what
//! makes `Σ H(θ)·length` the H-mass of the current rather than of one of its
//! representations.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_dim, Point};
use crate::measures::{
    canonicalize, h_mass_measure, restrict_measure, CostSpec, Region, SignedAtomicMeasure,
    ATOM_TOL,
};
use crate::numeric::{cluster_points, pairwise_sum};

/// Segments shorter than this are degenerate.
pub const EDGE_TOL: f64 = 1e-12;
/// Multiplicities with smaller magnitude vanish.
pub const THETA_TOL: f64 = 1e-12;
/// Distance of a vertex to a level set below which a radius is not generic.
pub const GENERIC_TOL: f64 = 1e-9;

const LINE_KEY_QUANTUM: f64 = 1e-9;

/// One oriented segment `a → b` with multiplicity `theta`.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct Edge {
    pub a: Point,
    pub b: Point,
    pub theta: f64,
}

impl Edge {
    pub fn new(a: Point, b: Point, theta: f64) -> Self {
        Edge { a, b, theta }
    }

    pub fn length(&self) -> f64 {
        self.a.dist(&self.b)
    }

    pub fn midpoint(&self) -> Point {
        self.a.lerp(&self.b, 0.5)
    }

    pub fn reversed(&self) -> Edge {
        Edge {
            a: self.b.clone(),
            b: self.a.clone(),
            theta: self.theta,
        }
    }
}

/// A finite weighted sum of oriented segments, always in canonical form.
#[derive(Clone, Debug, PartialEq, Default, Serialize)]
pub struct PolyhedralCurrent {
    edges: Vec<Edge>,
}

#[derive(serde::Deserialize)]
struct CurrentRepr {
    edges: Vec<Edge>,
}

impl<'de> Deserialize<'de> for PolyhedralCurrent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = CurrentRepr::deserialize(d)?;
        PolyhedralCurrent::new(repr.edges).map_err(serde::de::Error::custom)
    }
}

impl PolyhedralCurrent {
    pub fn empty() -> Self {
        PolyhedralCurrent::default()
    }

    /// Validates and canonicalizes user-supplied edges: every edge must be
    /// finite, of one dimension, longer than [`EDGE_TOL`] and carry `θ ≠ 0`.
    pub fn new(edges: Vec<Edge>) -> Result<Self> {
        if let Some(e0) = edges.first() {
            let d = e0.a.dim();
            for e in &edges {
                check_dim(d, e.a.dim())?;
                check_dim(d, e.b.dim())?;
                if !e.a.is_finite() || !e.b.is_finite() || !e.theta.is_finite() {
                    return Err(Error::NonFinite);
                }
                if e.theta == 0.0 {
                    return Err(Error::InvalidArgument("edge multiplicity is zero".into()));
                }
                if e.length() <= EDGE_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "degenerate edge {:?} -> {:?}",
                        e.a, e.b
                    )));
                }
            }
        }
        Ok(Self::from_raw(edges))
    }

    /// Single segment `θ·[a, b]`.
    pub fn segment(a: Point, b: Point, theta: f64) -> Result<Self> {
        Self::new(vec![Edge::new(a, b, theta)])
    }

    /// Polyline through `points` with constant multiplicity.
    pub fn polyline(points: &[Point], theta: f64) -> Result<Self> {
        Self::new(
            points
                .windows(2)
                .map(|w| Edge::new(w[0].clone(), w[1].clone(), theta))
                .collect(),
        )
    }

    /// Canonicalizes internally generated edges, silently dropping degenerate
    /// segments and vanishing multiplicities.
    pub(crate) fn from_raw(edges: Vec<Edge>) -> Self {
        PolyhedralCurrent {
            edges: canonical_edges(edges),
        }
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.edges.first().map(|e| e.a.dim())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_raw(self.edges.iter().chain(&other.edges).cloned().collect())
    }

    pub fn scale(&self, t: f64) -> Self {
        Self::from_raw(
            self.edges
                .iter()
                .map(|e| Edge::new(e.a.clone(), e.b.clone(), e.theta * t))
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Every edge vertex, with duplicates.
    pub fn endpoints(&self) -> impl Iterator<Item = &Point> {
        self.edges.iter().flat_map(|e| [&e.a, &e.b])
    }

    /// `mass(self − other)`.
    pub fn distance_mass(&self, other: &Self) -> f64 {
        mass(&self.sub(other))
    }

    /// Canonical equality up to `tol` in mass of the difference.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.distance_mass(other) <= tol
    }
}

fn line_key(a: &Point, b: &Point) -> (Vec<i64>, Point) {
    let len = a.dist(b);
    let mut u = b.sub(a).scale(1.0 / len);
    if let Some(&first) = u.coords().iter().find(|c| c.abs() > 1e-6) {
        if first < 0.0 {
            u = u.scale(-1.0);
        }
    }
    let foot = a.sub(&u.scale(a.dot(&u)));
    let q = |x: f64| (x / LINE_KEY_QUANTUM).round() as i64;
    let key = u
        .coords()
        .iter()
        .chain(foot.coords())
        .map(|&x| q(x))
        .collect();
    (key, u)
}

fn canonical_edges(raw: Vec<Edge>) -> Vec<Edge> {
    let labeled = raw.into_iter().map(|e| (e, 0)).collect();
    let mut out: Vec<Edge> = arrangement(labeled)
        .into_iter()
        .filter_map(|piece| {
            let theta: f64 = piece.parts.iter().map(|(_, t)| t).sum();
            if theta.abs() <= THETA_TOL {
                return None;
            }
            let (a, b) = if theta > 0.0 { (piece.a, piece.b) } else { (piece.b, piece.a) };
            Some(Edge::new(a, b, theta.abs()))
        })
        .collect();
    out.sort_by(|x, y| x.a.lex_cmp(&y.a).then_with(|| x.b.lex_cmp(&y.b)));
    out
}

/// One elementary segment of an [`arrangement`], with the signed multiplicity
/// (along `a → b`) contributed by each label.
#[derive(Clone, Debug)]
pub(crate) struct Piece {
    pub a: Point,
    pub b: Point,
    pub parts: Vec<(usize, f64)>,
}

/// Common refinement of labeled segments: endpoints within [`ATOM_TOL`] are
/// identified and collinear overlapping segments are split at every
/// endpoint on their line. Contributions below [`THETA_TOL`] are dropped.
pub(crate) fn arrangement(raw: Vec<(Edge, usize)>) -> Vec<Piece> {
    let raw: Vec<(Edge, usize)> = raw
        .into_iter()
        .filter(|(e, _)| e.theta.abs() > THETA_TOL && e.length() > EDGE_TOL)
        .collect();
    if raw.is_empty() {
        return Vec::new();
    }
    let pts: Vec<Point> = raw
        .iter()
        .flat_map(|(e, _)| [e.a.clone(), e.b.clone()])
        .collect();
    let (ids, verts) = cluster_points(&pts, ATOM_TOL);

    // (tail vertex, head vertex, theta, label)
    let snapped: Vec<(usize, usize, f64, usize)> = raw
        .iter()
        .enumerate()
        .filter_map(|(i, (e, label))| {
            let (u, v) = (ids[2 * i], ids[2 * i + 1]);
            (u != v && verts[u].dist(&verts[v]) > EDGE_TOL).then_some((u, v, e.theta, *label))
        })
        .collect();

    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut dirs: Vec<Point> = Vec::with_capacity(snapped.len());
    for (i, &(u, v, _, _)) in snapped.iter().enumerate() {
        let (key, dir) = line_key(&verts[u], &verts[v]);
        dirs.push(dir);
        buckets.entry(key).or_default().push(i);
    }
    let mut keys: Vec<&Vec<i64>> = buckets.keys().collect();
    keys.sort();

    let mut out = Vec::new();
    for key in keys {
        let members = &buckets[key];
        if members.len() == 1 {
            let (u, v, t, label) = snapped[members[0]];
            out.push(Piece {
                a: verts[u].clone(),
                b: verts[v].clone(),
                parts: vec![(label, t)],
            });
            continue;
        }
        let dir = &dirs[members[0]];
        let mut bps: Vec<(f64, usize)> = members
            .iter()
            .flat_map(|&i| {
                let (u, v, _, _) = snapped[i];
                [(verts[u].dot(dir), u), (verts[v].dot(dir), v)]
            })
            .collect();
        bps.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let mut order: Vec<usize> = Vec::with_capacity(bps.len());
        let mut pos: HashMap<usize, usize> = HashMap::new();
        for &(_, vid) in &bps {
            if let std::collections::hash_map::Entry::Vacant(slot) = pos.entry(vid) {
                slot.insert(order.len());
                order.push(vid);
            }
        }
        let mut diffs: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for &i in members {
            let (u, v, t, label) = snapped[i];
            let (pu, pv) = (pos[&u], pos[&v]);
            let (lo, hi, s) = if pu < pv { (pu, pv, t) } else { (pv, pu, -t) };
            let diff = diffs.entry(label).or_insert_with(|| vec![0.0; order.len() + 1]);
            diff[lo] += s;
            diff[hi] -= s;
        }
        let mut runs: Vec<(usize, f64)> = diffs.keys().map(|&l| (l, 0.0)).collect();
        for k in 0..order.len().saturating_sub(1) {
            let mut parts = Vec::new();
            for (slot, diff) in runs.iter_mut().zip(diffs.values()) {
                slot.1 += diff[k];
                if slot.1.abs() > THETA_TOL {
                    parts.push(*slot);
                }
            }
            if !parts.is_empty() {
                out.push(Piece {
                    a: verts[order[k]].clone(),
                    b: verts[order[k + 1]].clone(),
                    parts,
                });
            }
        }
    }
    out
}

/// `M(T) = Σ |θ_e| · length(e)`.
pub fn mass(t: &PolyhedralCurrent) -> f64 {
    let terms: Vec<f64> = t.edges.iter().map(|e| e.theta.abs() * e.length()).collect();
    pairwise_sum(&terms)
}

/// `M_H(T) = Σ H(|θ_e|) · length(e)`.
pub fn h_mass(t: &PolyhedralCurrent, cost: &CostSpec) -> f64 {
    let terms: Vec<f64> = t
        .edges
        .iter()
        .map(|e| cost.eval(e.theta.abs()) * e.length())
        .collect();
    pairwise_sum(&terms)
}

/// `∂T = Σ_e θ_e (δ_{b_e} − δ_{a_e})`.
pub fn boundary(t: &PolyhedralCurrent) -> SignedAtomicMeasure {
    canonicalize(
        t.edges
            .iter()
            .flat_map(|e| [(e.b.clone(), e.theta), (e.a.clone(), -e.theta)])
            .collect(),
    )
}

/// Parameters in `(0, 1)` where `a + t(b − a)` meets a face hyperplane of a cube.
fn face_crossings(a: &Point, b: &Point, region: &Region) -> Vec<f64> {
    let mut ts = Vec::new();
    for c in region.cubes() {
        let h = c.edge / 2.0;
        for (i, (&ai, &bi)) in a.coords().iter().zip(b.coords()).enumerate() {
            let di = bi - ai;
            if di == 0.0 {
                continue;
            }
            for plane in [c.center.coords()[i] - h, c.center.coords()[i] + h] {
                let t = (plane - ai) / di;
                if t > 0.0 && t < 1.0 {
                    ts.push(t);
                }
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14);
    ts
}

/// `T ⌞ A` (or `T ⌞ Aᶜ` when `complement`), splitting edges at the faces of
/// the region. Each piece is classified by its midpoint.
pub fn restrict_current(t: &PolyhedralCurrent, region: &Region, complement: bool) -> PolyhedralCurrent {
    let mut out = Vec::new();
    for e in &t.edges {
        let mut ts = vec![0.0];
        ts.extend(face_crossings(&e.a, &e.b, region));
        ts.push(1.0);
        for w in ts.windows(2) {
            let mid = e.a.lerp(&e.b, 0.5 * (w[0] + w[1]));
            if region.contains(&mid) != complement {
                let p = if w[0] == 0.0 { e.a.clone() } else { e.a.lerp(&e.b, w[0]) };
                let q = if w[1] == 1.0 { e.b.clone() } else { e.a.lerp(&e.b, w[1]) };
                out.push(Edge::new(p, q, e.theta));
            }
        }
    }
    PolyhedralCurrent::from_raw(out)
}

/// The cone `x ⌞ μ = Σ θ_i [x, x_i]`; atoms at the vertex contribute nothing.
pub fn cone(x: &Point, mu: &SignedAtomicMeasure) -> Result<PolyhedralCurrent> {
    if let Some(d) = mu.dim() {
        check_dim(x.dim(), d)?;
    }
    Ok(PolyhedralCurrent::from_raw(
        mu.atoms()
            .iter()
            .filter(|a| a.point.sup_dist_unchecked(x) > ATOM_TOL)
            .map(|a| Edge::new(x.clone(), a.point.clone(), a.weight))
            .collect(),
    ))
}

/// One crossing of a slice: orientation sign and multiplicity magnitude.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceAtom {
    pub point: Point,
    pub sign: i8,
    pub magnitude: f64,
}

/// The 0-current `⟨T, d_x, r⟩`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ZeroSlice {
    pub atoms: Vec<SliceAtom>,
}

impl ZeroSlice {
    /// The signed measure `Σ sign · magnitude · δ_point`, canonicalized.
    pub fn measure(&self) -> SignedAtomicMeasure {
        canonicalize(
            self.atoms
                .iter()
                .map(|a| (a.point.clone(), a.sign as f64 * a.magnitude))
                .collect(),
        )
    }

    /// Mass of the slice as a 0-current.
    pub fn mass(&self) -> f64 {
        self.measure().total_variation()
    }

    pub fn h_mass(&self, cost: &CostSpec) -> f64 {
        h_mass_measure(&self.measure(), cost)
    }
}

/// Slice of `T` by the sup-norm sphere `{d_x = r}`.
///
/// Crossings where `d_x` increases along the edge orientation carry sign
/// `+1`. The radius must be generic: no edge vertex within [`GENERIC_TOL`] of
/// the level set and no edge running along it.
pub fn slice(t: &PolyhedralCurrent, x: &Point, r: f64) -> Result<ZeroSlice> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!("slice radius {r} <= 0")));
    }
    if let Some(d) = t.dim() {
        check_dim(x.dim(), d)?;
    }
    let region = Region::sup_ball(x, r)?;
    let level = |p: &Point| p.sup_dist_unchecked(x) - r;
    let mut atoms = Vec::new();
    for e in &t.edges {
        if level(&e.a).abs() <= GENERIC_TOL || level(&e.b).abs() <= GENERIC_TOL {
            return Err(Error::NonGenericRadius { radius: r });
        }
        let mut ts = vec![0.0];
        ts.extend(face_crossings(&e.a, &e.b, &region));
        ts.push(1.0);
        let states: Vec<bool> = ts
            .windows(2)
            .map(|w| {
                let s = level(&e.a.lerp(&e.b, 0.5 * (w[0] + w[1])));
                if s.abs() <= GENERIC_TOL {
                    Err(Error::NonGenericRadius { radius: r })
                } else {
                    Ok(s < 0.0)
                }
            })
            .collect::<Result<_>>()?;
        for k in 1..states.len() {
            if states[k - 1] != states[k] {
                atoms.push(SliceAtom {
                    point: e.a.lerp(&e.b, ts[k]),
                    sign: if states[k - 1] { 1 } else { -1 },
                    magnitude: e.theta.abs(),
                });
            }
        }
    }
    Ok(ZeroSlice { atoms })
}

/// `∂(T ⌞ {d_x < r}) − (∂T) ⌞ {d_x < r}`, the defining identity of the slice.
pub fn slice_by_restriction(t: &PolyhedralCurrent, x: &Point, r: f64) -> Result<SignedAtomicMeasure> {
    let region = Region::sup_ball(x, r)?;
    let inner = boundary(&restrict_current(t, &region, false));
    let outer = restrict_measure(&boundary(t), &region)?;
    Ok(inner.sub(&outer))
}

/// Outcome of [`good_slice_radius`].
#[derive(Clone, Debug, PartialEq)]
pub struct GoodRadius {
    pub radius: f64,
    /// Indices of the input currents for which the bound fails at `radius`.
    pub exceptions: Vec<usize>,
}

/// Number of candidate radii sampled by [`good_slice_radius`].
pub const RADIUS_SAMPLES: usize = 1000;

/// Picks `r ∈ (r0, η0·r0)` such that
/// `M_H(⟨T, d_x, r⟩) + M_H(⟨T, d_y, r⟩) ≤ 4 M_H(T) / ((η0 − 1) r0)` for as
/// many of `ts` as possible.
///
/// By Chebyshev's inequality and the coarea bound the set of good radii has
/// measure at least half the window for every current, so the sampled
/// radius hitting the most currents is returned; ties go to the smaller
/// total normalized slice mass, then to the radius closest to the window
/// center.
pub fn good_slice_radius(
    ts: &[PolyhedralCurrent],
    x: &Point,
    y: &Point,
    r0: f64,
    eta0: f64,
    cost: &CostSpec,
) -> Result<GoodRadius> {
    if !(r0 > 0.0) {
        return Err(Error::InvalidArgument(format!("r0 = {r0} <= 0")));
    }
    if !(eta0 > 1.0 && eta0 < 2.0) {
        return Err(Error::InvalidArgument(format!("eta0 = {eta0} not in (1, 2)")));
    }
    check_dim(x.dim(), y.dim())?;
    let center = r0 * (1.0 + eta0) / 2.0;
    if ts.is_empty() {
        return Ok(GoodRadius {
            radius: center,
            exceptions: Vec::new(),
        });
    }
    let width = (eta0 - 1.0) * r0;
    let bounds: Vec<f64> = ts.iter().map(|t| 4.0 * h_mass(t, cost) / width).collect();

    // (count of good currents, normalized excess, distance to center, radius, failures)
    let mut best: Option<(usize, f64, f64, f64, Vec<usize>)> = None;
    for s in 0..RADIUS_SAMPLES {
        let r = r0 + width * (s as f64 + 0.5) / RADIUS_SAMPLES as f64;
        let mut fails = Vec::new();
        let mut score = 0.0;
        let mut generic = true;
        for (i, t) in ts.iter().enumerate() {
            let (sx, sy) = match (slice(t, x, r), slice(t, y, r)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(Error::NonGenericRadius { .. }), _) | (_, Err(Error::NonGenericRadius { .. })) => {
                    generic = false;
                    break;
                }
                (Err(e), _) | (_, Err(e)) => return Err(e),
            };
            let total = sx.h_mass(cost) + sy.h_mass(cost);
            if total > bounds[i] * (1.0 + 1e-12) {
                fails.push(i);
            }
            if bounds[i] > 0.0 {
                score += total / bounds[i];
            }
        }
        if !generic {
            continue;
        }
        let good = ts.len() - fails.len();
        let dc = (r - center).abs();
        let better = match &best {
            None => true,
            Some((bg, bs, bd, _, _)) => {
                good > *bg || (good == *bg && (score < *bs - 1e-12 || ((score - *bs).abs() <= 1e-12 && dc < *bd)))
            }
        };
        if better {
            best = Some((good, score, dc, r, fails));
        }
    }
    best.map(|(_, _, _, radius, exceptions)| GoodRadius { radius, exceptions })
        .ok_or(Error::NoRadiusFound)
}
