//! Simplicial flat norm of planar 1-chains.
//!
//! Currents are rasterized onto a triangulated square lattice and the flat
//! norm `inf { M(R) + M(S) : T = R + ∂S }` is computed over real chains of
//! that complex by a linear program. The value is an upper bound for the flat
//! norm in the plane, which is all the experiments need to certify decay.
//!
//! Lattice layout for `n × n` squares of step `h`, vertex `(i, j)` at
//! `lo + (i h, j h)`:
//!
//! * horizontal edge `(i, j) → (i+1, j)`,
//! * vertical edge `(i, j) → (i, j+1)`,
//! * diagonal edge `(i, j) → (i+1, j+1)`,
//! * two counterclockwise triangles per square, split along the diagonal.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::currents::PolyhedralCurrent;
use crate::error::{Error, Result};
use crate::geometry::{Cube, Point};

/// Relative tolerance (in units of `h`) for snapping vertices to the lattice.
pub const SNAP_TOL: f64 = 1e-6;

/// Largest number of squares per side accepted by [`TriComplex::new`].
pub const MAX_SIDE: usize = 512;

/// Triangulated square lattice over a planar domain.
#[derive(Clone, Debug)]
pub struct TriComplex {
    lo: [f64; 2],
    h: f64,
    n: usize,
}

impl TriComplex {
    /// Lattice of step `h` over the square `domain`; the edge of the domain
    /// must be a whole multiple of `h`.
    pub fn new(domain: &Cube, h: f64) -> Result<Self> {
        if domain.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: domain.dim() });
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidArgument(format!("mesh step must be positive, got {h}")));
        }
        let ratio = domain.edge / h;
        let n = ratio.round();
        if (ratio - n).abs() > SNAP_TOL || n < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "domain edge {} is not a multiple of the mesh step {h}",
                domain.edge
            )));
        }
        if n as usize > MAX_SIDE {
            return Err(Error::Budget(format!("{n} squares per side exceeds {MAX_SIDE}")));
        }
        let lo = domain.lower();
        Ok(TriComplex { lo: [lo.coords()[0], lo.coords()[1]], h, n: n as usize })
    }

    /// Smallest lattice of step `h`, aligned with the origin, whose square
    /// domain covers every current with at least `margin` to spare.
    pub fn covering(currents: &[&PolyhedralCurrent], h: f64, margin: f64) -> Result<Self> {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for t in currents {
            for p in t.endpoints() {
                if p.dim() != 2 {
                    return Err(Error::DimensionMismatch { expected: 2, got: p.dim() });
                }
                for k in 0..2 {
                    lo[k] = lo[k].min(p.coords()[k]);
                    hi[k] = hi[k].max(p.coords()[k]);
                }
            }
        }
        if !lo[0].is_finite() {
            lo = [0.0, 0.0];
            hi = [0.0, 0.0];
        }
        let i0: Vec<f64> = (0..2).map(|k| ((lo[k] - margin) / h).floor()).collect();
        let i1: Vec<f64> = (0..2).map(|k| ((hi[k] + margin) / h).ceil()).collect();
        let n = (i1[0] - i0[0]).max(i1[1] - i0[1]).max(1.0);
        let corner = Point::new(vec![i0[0] * h, i0[1] * h]);
        TriComplex::new(&Cube::from_corner(&corner, n * h)?, h)
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    /// Squares per side.
    pub fn side(&self) -> usize {
        self.n
    }

    pub fn vertex_count(&self) -> usize {
        (self.n + 1) * (self.n + 1)
    }

    fn n_h(&self) -> usize {
        self.n * (self.n + 1)
    }

    pub fn edge_count(&self) -> usize {
        2 * self.n_h() + self.n * self.n
    }

    pub fn triangle_count(&self) -> usize {
        2 * self.n * self.n
    }

    fn h_edge(&self, i: usize, j: usize) -> usize {
        i * (self.n + 1) + j
    }

    fn v_edge(&self, i: usize, j: usize) -> usize {
        self.n_h() + i * self.n + j
    }

    fn d_edge(&self, i: usize, j: usize) -> usize {
        2 * self.n_h() + i * self.n + j
    }

    pub fn vertex(&self, i: usize, j: usize) -> Point {
        Point::new(vec![self.lo[0] + i as f64 * self.h, self.lo[1] + j as f64 * self.h])
    }

    /// Length of edge `e`.
    pub fn edge_length(&self, e: usize) -> f64 {
        if e < 2 * self.n_h() {
            self.h
        } else {
            self.h * std::f64::consts::SQRT_2
        }
    }

    /// Endpoints `(tail, head)` of edge `e` as lattice coordinates.
    pub fn edge_ends(&self, e: usize) -> ((usize, usize), (usize, usize)) {
        let nh = self.n_h();
        if e < nh {
            let (i, j) = (e / (self.n + 1), e % (self.n + 1));
            ((i, j), (i + 1, j))
        } else if e < 2 * nh {
            let r = e - nh;
            let (i, j) = (r / self.n, r % self.n);
            ((i, j), (i, j + 1))
        } else {
            let r = e - 2 * nh;
            let (i, j) = (r / self.n, r % self.n);
            ((i, j), (i + 1, j + 1))
        }
    }

    pub fn triangle_area(&self) -> f64 {
        0.5 * self.h * self.h
    }

    /// Signed boundary of triangle `t` as three `(edge, ±1)` entries.
    pub fn triangle_boundary(&self, t: usize) -> [(usize, f64); 3] {
        let sq = t / 2;
        let (i, j) = (sq / self.n, sq % self.n);
        if t % 2 == 0 {
            // (i,j) → (i+1,j) → (i+1,j+1) → (i,j)
            [(self.h_edge(i, j), 1.0), (self.v_edge(i + 1, j), 1.0), (self.d_edge(i, j), -1.0)]
        } else {
            // (i,j) → (i+1,j+1) → (i,j+1) → (i,j)
            [(self.d_edge(i, j), 1.0), (self.h_edge(i, j + 1), -1.0), (self.v_edge(i, j), -1.0)]
        }
    }

    /// Lattice coordinates of `p`, or `SnapError` when `p` is off-lattice.
    pub fn snap(&self, p: &Point) -> Result<(usize, usize)> {
        if p.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: p.dim() });
        }
        let mut ij = [0usize; 2];
        for k in 0..2 {
            let u = (p.coords()[k] - self.lo[k]) / self.h;
            let r = u.round();
            if (u - r).abs() > SNAP_TOL || r < 0.0 || r > self.n as f64 {
                return Err(Error::SnapError { point: p.coords().to_vec() });
            }
            ij[k] = r as usize;
        }
        Ok((ij[0], ij[1]))
    }

    /// Adds `coeff` times the unit step from `(i, j)` by `(di, dj)` to `chain`.
    fn add_step(&self, chain: &mut [f64], (i, j): (usize, usize), (di, dj): (i64, i64), coeff: f64) -> (usize, usize) {
        let ti = (i as i64 + di) as usize;
        let tj = (j as i64 + dj) as usize;
        let (e, s) = match (di, dj) {
            (1, 0) => (self.h_edge(i, j), 1.0),
            (-1, 0) => (self.h_edge(ti, j), -1.0),
            (0, 1) => (self.v_edge(i, j), 1.0),
            (0, -1) => (self.v_edge(i, tj), -1.0),
            (1, 1) => (self.d_edge(i, j), 1.0),
            (-1, -1) => (self.d_edge(ti, tj), -1.0),
            _ => unreachable!("not a lattice step"),
        };
        chain[e] += s * coeff;
        (ti, tj)
    }
}

/// Real coefficients on the edges of a [`TriComplex`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub coeffs: Vec<f64>,
}

impl Chain {
    pub fn zero(c: &TriComplex) -> Self {
        Chain { coeffs: vec![0.0; c.edge_count()] }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&x| x == 0.0)
    }

    pub fn add(&self, other: &Chain) -> Chain {
        Chain { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Chain) -> Chain {
        Chain { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, t: f64) -> Chain {
        Chain { coeffs: self.coeffs.iter().map(|a| a * t).collect() }
    }

    /// `Σ |coeff_e| len(e)`.
    pub fn mass(&self, c: &TriComplex) -> f64 {
        self.coeffs.iter().enumerate().map(|(e, x)| x.abs() * c.edge_length(e)).sum()
    }

    /// Vertex boundary, indexed `i (n+1) + j`.
    pub fn boundary(&self, c: &TriComplex) -> Vec<f64> {
        let mut out = vec![0.0; c.vertex_count()];
        for (e, &x) in self.coeffs.iter().enumerate() {
            if x != 0.0 {
                let ((i0, j0), (i1, j1)) = c.edge_ends(e);
                out[i1 * (c.n + 1) + j1] += x;
                out[i0 * (c.n + 1) + j0] -= x;
            }
        }
        out
    }
}

/// Counts of two lattice moves interleaved as evenly as possible.
fn interleave(a: (i64, i64), na: i64, b: (i64, i64), nb: i64) -> Vec<(i64, i64)> {
    let total = na + nb;
    let mut out = Vec::with_capacity(total as usize);
    let mut done_a = 0;
    for s in 1..=total {
        // target number of `a` moves after s steps, rounded half up
        let want = (2 * s * na + total) / (2 * total);
        if want > done_a {
            out.push(a);
            done_a += 1;
        } else {
            out.push(b);
        }
    }
    out
}

/// Lattice path from `(i0, j0)` to `(i1, j1)` hugging the straight segment.
fn lattice_path(di: i64, dj: i64) -> Vec<(i64, i64)> {
    let (si, sj) = (di.signum(), dj.signum());
    if si == sj && si != 0 {
        let diag = di.abs().min(dj.abs());
        let rest = di.abs().max(dj.abs()) - diag;
        let axis = if di.abs() > dj.abs() { (si, 0) } else { (0, sj) };
        interleave((si, sj), diag, axis, rest)
    } else {
        interleave((si, 0), di.abs(), (0, sj), dj.abs())
    }
}

/// Rewrites `t` as a chain of lattice edges of `c`; every vertex of `t` must
/// sit on a lattice vertex.
pub fn rasterize(t: &PolyhedralCurrent, c: &TriComplex) -> Result<Chain> {
    let mut chain = Chain::zero(c);
    for e in t.edges() {
        let a = c.snap(&e.a)?;
        let b = c.snap(&e.b)?;
        let di = b.0 as i64 - a.0 as i64;
        let dj = b.1 as i64 - a.1 as i64;
        let mut at = a;
        for step in lattice_path(di, dj) {
            at = c.add_step(&mut chain.coeffs, at, step, e.theta);
        }
        debug_assert_eq!(at, b);
    }
    Ok(chain)
}

/// Optimal decomposition `chain = R + ∂S`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlatNormResult {
    pub value: f64,
    /// Edge coefficients of `R`.
    pub r: Vec<f64>,
    /// Triangle coefficients of `S`.
    pub s: Vec<f64>,
}

impl FlatNormResult {
    /// `max_e |R_e + (∂S)_e − chain_e|`.
    pub fn residual(&self, chain: &Chain, c: &TriComplex) -> f64 {
        let mut rec = self.r.clone();
        for (t, &st) in self.s.iter().enumerate() {
            if st != 0.0 {
                for (e, sgn) in c.triangle_boundary(t) {
                    rec[e] += sgn * st;
                }
            }
        }
        rec.iter().zip(&chain.coeffs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// `Σ |R_e| len(e) + Σ |S_t| area(t)`, recomputed from the certificate.
    pub fn certificate_value(&self, c: &TriComplex) -> f64 {
        let r: f64 = self.r.iter().enumerate().map(|(e, x)| x.abs() * c.edge_length(e)).sum();
        let s: f64 = self.s.iter().map(|x| x.abs()).sum::<f64>() * c.triangle_area();
        r + s
    }
}

/// Simplicial flat norm of `chain` on `c`.
pub fn flat_norm(chain: &Chain, c: &TriComplex) -> Result<FlatNormResult> {
    if chain.coeffs.len() != c.edge_count() {
        return Err(Error::InvalidArgument(format!(
            "chain has {} coefficients, complex has {} edges",
            chain.coeffs.len(),
            c.edge_count()
        )));
    }
    if chain.is_zero() {
        return Ok(FlatNormResult {
            value: 0.0,
            r: vec![0.0; c.edge_count()],
            s: vec![0.0; c.triangle_count()],
        });
    }
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let area = c.triangle_area();
    let s_vars: Vec<_> = (0..c.triangle_count())
        .map(|_| (lp.add_var(area, (0.0, f64::INFINITY)), lp.add_var(area, (0.0, f64::INFINITY))))
        .collect();
    let r_vars: Vec<_> = (0..c.edge_count())
        .map(|e| {
            let l = c.edge_length(e);
            (lp.add_var(l, (0.0, f64::INFINITY)), lp.add_var(l, (0.0, f64::INFINITY)))
        })
        .collect();
    let mut rows: Vec<Vec<(microlp::Variable, f64)>> = r_vars
        .iter()
        .map(|&(rp, rm)| vec![(rp, 1.0), (rm, -1.0)])
        .collect();
    for (t, &(sp, sm)) in s_vars.iter().enumerate() {
        for (e, sgn) in c.triangle_boundary(t) {
            rows[e].push((sp, sgn));
            rows[e].push((sm, -sgn));
        }
    }
    for (e, row) in rows.iter().enumerate() {
        lp.add_constraint(row.as_slice(), ComparisonOp::Eq, chain.coeffs[e]);
    }
    let sol = lp
        .solve()
        .map_err(|e| Error::Lp(e.to_string()))?
        .into_solution()
        .map_err(|_| Error::Lp("flat norm LP interrupted".into()))?;
    let r: Vec<f64> = r_vars.iter().map(|&(p, m)| sol.var_value(p) - sol.var_value(m)).collect();
    let s: Vec<f64> = s_vars.iter().map(|&(p, m)| sol.var_value(p) - sol.var_value(m)).collect();
    let mut out = FlatNormResult { value: 0.0, r, s };
    // report the value of the certificate actually returned rather than the
    // solver's objective, so the two can never disagree
    out.value = out.certificate_value(c);
    Ok(out)
}

/// Flat distance `F(a − b)` after rasterizing both currents onto `c`.
pub fn flat_distance(a: &PolyhedralCurrent, b: &PolyhedralCurrent, c: &TriComplex) -> Result<f64> {
    let chain = rasterize(a, c)?.sub(&rasterize(b, c)?);
    Ok(flat_norm(&chain, c)?.value)
}

/// Moves every vertex of `t` to the nearest lattice vertex of `c`.
pub fn snap_current(t: &PolyhedralCurrent, c: &TriComplex) -> Result<PolyhedralCurrent> {
    let snap = |p: &Point| -> Result<Point> {
        if p.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: p.dim() });
        }
        let i = ((p.coords()[0] - c.lo[0]) / c.h).round().clamp(0.0, c.n as f64) as usize;
        let j = ((p.coords()[1] - c.lo[1]) / c.h).round().clamp(0.0, c.n as f64) as usize;
        Ok(c.vertex(i, j))
    };
    let mut edges = Vec::with_capacity(t.len());
    for e in t.edges() {
        edges.push(crate::currents::Edge::new(snap(&e.a)?, snap(&e.b)?, e.theta));
    }
    Ok(PolyhedralCurrent::from_raw(edges))
}
