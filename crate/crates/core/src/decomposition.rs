//! Path decompositions of acyclic polyhedral currents.
//!
//! A canonical current is read as a flow network: vertices are edge
//! endpoints, each edge carries its (positive) multiplicity along its
//! orientation. Sources are the atoms of the negative part of `∂T`, sinks
//! those of the positive part. On an acyclic network the greedy extraction
//! in [`good_decomposition`] writes `T` as a positive combination of simple
//! source-to-sink polylines without cancellations, so that
//!
//! * `M(T) = Σ w_γ · length(γ)`,
//! * `M(∂T) = 2 Σ w_γ`,
//! * on every edge, `θ_e` equals the total weight of the paths through it.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize};

use crate::currents::{arrangement, Edge, PolyhedralCurrent, THETA_TOL};
use crate::error::{Error, Result};
use crate::geometry::{check_dim, Grid, Point};
use crate::measures::CostSpec;
use crate::numeric::{cluster_points, pairwise_sum};

/// A weighted simple polyline.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedPath {
    vertices: Vec<Point>,
    #[serde(rename = "w")]
    weight: f64,
}

#[derive(Deserialize)]
struct PathRepr {
    vertices: Vec<Point>,
    w: f64,
}

impl<'de> Deserialize<'de> for WeightedPath {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = PathRepr::deserialize(d)?;
        WeightedPath::new(r.vertices, r.w).map_err(serde::de::Error::custom)
    }
}

impl WeightedPath {
    /// Requires at least two vertices, distinct consecutive vertices, no
    /// repeated vertex and a positive weight.
    pub fn new(vertices: Vec<Point>, weight: f64) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidArgument("path needs at least two vertices".into()));
        }
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::InvalidArgument(format!("path weight {weight} must be positive")));
        }
        let d = vertices[0].dim();
        for v in &vertices {
            check_dim(d, v.dim())?;
            if !v.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        let (ids, reps) = cluster_points(&vertices, crate::measures::ATOM_TOL);
        if reps.len() != vertices.len() {
            let repeated = ids.windows(2).any(|w| w[0] == w[1]);
            return Err(Error::InvalidArgument(if repeated {
                "consecutive path vertices coincide".into()
            } else {
                "path is not simple".into()
            }));
        }
        Ok(WeightedPath { vertices, weight })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn start(&self) -> &Point {
        &self.vertices[0]
    }

    pub fn end(&self) -> &Point {
        self.vertices.last().expect("path has vertices")
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| w[0].dist(&w[1])).sum()
    }

    fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.vertices
            .windows(2)
            .map(move |w| Edge::new(w[0].clone(), w[1].clone(), self.weight))
    }
}

/// A finite positive combination of simple paths.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct PathDecomposition {
    pub paths: Vec<WeightedPath>,
}

impl PathDecomposition {
    pub fn new(paths: Vec<WeightedPath>) -> Self {
        PathDecomposition { paths }
    }

    /// `P(Lip)`.
    pub fn total_weight(&self) -> f64 {
        let ws: Vec<f64> = self.paths.iter().map(|p| p.weight).collect();
        pairwise_sum(&ws)
    }

    /// `∫ M(I_γ) dP(γ)`.
    pub fn weighted_length(&self) -> f64 {
        let ls: Vec<f64> = self.paths.iter().map(|p| p.weight * p.length()).collect();
        pairwise_sum(&ls)
    }
}

/// Flow-network view of a canonical current.
struct Network {
    verts: Vec<Point>,
    /// (tail, head, flow)
    arcs: Vec<(usize, usize, f64)>,
    out: Vec<Vec<usize>>,
}

impl Network {
    fn new(t: &PolyhedralCurrent) -> Self {
        let pts: Vec<Point> = t.endpoints().cloned().collect();
        let (ids, verts) = cluster_points(&pts, crate::measures::ATOM_TOL);
        let arcs: Vec<(usize, usize, f64)> = t
            .edges()
            .iter()
            .enumerate()
            .map(|(i, e)| (ids[2 * i], ids[2 * i + 1], e.theta))
            .collect();
        let mut out = vec![Vec::new(); verts.len()];
        for (i, &(u, _, _)) in arcs.iter().enumerate() {
            out[u].push(i);
        }
        Network { verts, arcs, out }
    }

    /// First directed cycle among arcs with flow above `tol`, as arc indices.
    fn find_cycle(&self, flow: &[f64], tol: f64) -> Option<Vec<usize>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let n = self.verts.len();
        let mut mark = vec![Mark::New; n];
        let mut via = vec![usize::MAX; n];
        for root in 0..n {
            if mark[root] != Mark::New {
                continue;
            }
            // iterative DFS: (vertex, next out-arc position)
            let mut stack = vec![(root, 0usize)];
            mark[root] = Mark::Active;
            while let Some(&mut (v, ref mut pos)) = stack.last_mut() {
                if *pos < self.out[v].len() {
                    let a = self.out[v][*pos];
                    *pos += 1;
                    if flow[a] <= tol {
                        continue;
                    }
                    let w = self.arcs[a].1;
                    match mark[w] {
                        Mark::New => {
                            mark[w] = Mark::Active;
                            via[w] = a;
                            stack.push((w, 0));
                        }
                        Mark::Active => {
                            let mut cycle = vec![a];
                            let mut cur = v;
                            while cur != w {
                                let b = via[cur];
                                cycle.push(b);
                                cur = self.arcs[b].0;
                            }
                            cycle.reverse();
                            return Some(cycle);
                        }
                        Mark::Done => {}
                    }
                } else {
                    mark[v] = Mark::Done;
                    stack.pop();
                }
            }
        }
        None
    }

    fn current(&self, flow: &[f64]) -> PolyhedralCurrent {
        PolyhedralCurrent::from_raw(
            self.arcs
                .iter()
                .zip(flow)
                .map(|(&(u, v, _), &f)| Edge::new(self.verts[u].clone(), self.verts[v].clone(), f))
                .collect(),
        )
    }
}

fn flow_tol(t: &PolyhedralCurrent) -> f64 {
    let max = t.edges().iter().map(|e| e.theta).fold(1.0, f64::max);
    THETA_TOL * max
}

/// Whether the oriented network of `t` has no directed cycle.
pub fn is_acyclic(t: &PolyhedralCurrent) -> bool {
    let net = Network::new(t);
    let flow: Vec<f64> = net.arcs.iter().map(|a| a.2).collect();
    net.find_cycle(&flow, flow_tol(t)).is_none()
}

/// Cancels directed cycles until none is left.
///
/// Each round subtracts the smallest flow along the first cycle found, so the
/// boundary is unchanged and the mass drops by `min · length(cycle)`.
pub fn remove_cycles(t: &PolyhedralCurrent) -> PolyhedralCurrent {
    let net = Network::new(t);
    let mut flow: Vec<f64> = net.arcs.iter().map(|a| a.2).collect();
    let tol = flow_tol(t);
    let mut changed = false;
    while let Some(cycle) = net.find_cycle(&flow, tol) {
        let m = cycle.iter().map(|&a| flow[a]).fold(f64::INFINITY, f64::min);
        for &a in &cycle {
            flow[a] -= m;
        }
        // the minimizing arc is cleared exactly
        if let Some(&a) = cycle.iter().find(|&&a| flow[a] <= tol) {
            flow[a] = 0.0;
        }
        changed = true;
    }
    if changed {
        net.current(&flow)
    } else {
        t.clone()
    }
}

/// Greedy path decomposition of an acyclic current.
///
/// Sources are visited in vertex order (lexicographic in their coordinates);
/// from the current source the walk follows the outgoing arc with the largest
/// residual flow (ties to the lower arc index) until it reaches a vertex with
/// unmet demand. The path weight is the smallest of the residual arc flows,
/// the source excess and the sink demand.
pub fn good_decomposition(t: &PolyhedralCurrent) -> Result<PathDecomposition> {
    let net = Network::new(t);
    let mut flow: Vec<f64> = net.arcs.iter().map(|a| a.2).collect();
    let tol = flow_tol(t);
    if net.find_cycle(&flow, tol).is_some() {
        return Err(Error::NotAcyclic);
    }
    let n = net.verts.len();
    let mut net_out = vec![0.0f64; n];
    for &(u, v, f) in &net.arcs {
        net_out[u] += f;
        net_out[v] -= f;
    }
    let mut excess: Vec<f64> = net_out.iter().map(|&x| x.max(0.0)).collect();
    let mut demand: Vec<f64> = net_out.iter().map(|&x| (-x).max(0.0)).collect();

    let mut paths = Vec::new();
    let mut src = 0usize;
    while src < n {
        if excess[src] <= tol {
            src += 1;
            continue;
        }
        let mut verts = vec![src];
        let mut arcs = Vec::new();
        let mut cur = src;
        while cur == src || demand[cur] <= tol {
            let next = net.out[cur]
                .iter()
                .copied()
                .filter(|&a| flow[a] > tol)
                .fold(None::<usize>, |best, a| match best {
                    Some(b) if flow[b] >= flow[a] => Some(b),
                    _ => Some(a),
                });
            match next {
                Some(a) => {
                    arcs.push(a);
                    cur = net.arcs[a].1;
                    verts.push(cur);
                }
                None => break,
            }
        }
        if arcs.is_empty() || demand[cur] <= tol {
            // only numerical dust is left at this source
            excess[src] = 0.0;
            continue;
        }
        let w = arcs
            .iter()
            .map(|&a| flow[a])
            .fold(excess[src].min(demand[cur]), f64::min);
        for &a in &arcs {
            flow[a] -= w;
        }
        excess[src] -= w;
        demand[cur] -= w;
        let points = verts.iter().map(|&v| net.verts[v].clone()).collect();
        paths.push(WeightedPath::new(points, w)?);
    }
    Ok(PathDecomposition { paths })
}

/// `Σ_γ w_γ I_γ`, canonicalized.
pub fn current_of(d: &PathDecomposition) -> PolyhedralCurrent {
    PolyhedralCurrent::from_raw(d.paths.iter().flat_map(|p| p.edges()).collect())
}

/// Paths grouped by the grid cells containing their endpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct CellPart {
    pub decomposition: PathDecomposition,
    pub current: PolyhedralCurrent,
}

/// The family `T^{ij}` indexed by (start cell, end cell).
#[derive(Clone, Debug)]
pub struct CellPartition {
    pub grid: Grid,
    pub parts: BTreeMap<(u64, u64), CellPart>,
}

impl CellPartition {
    /// `Σ_{ij} T^{ij}`.
    pub fn total(&self) -> PolyhedralCurrent {
        PolyhedralCurrent::from_raw(
            self.parts
                .values()
                .flat_map(|p| p.current.edges().iter().cloned())
                .collect(),
        )
    }
}

/// Assigns every path to the pair (cell of its start, cell of its end).
pub fn partition_by_cells(d: &PathDecomposition, grid: &Grid) -> Result<CellPartition> {
    let locate = |p: &Point| -> Result<u64> {
        check_dim(grid.dim(), p.dim())?;
        if grid.on_skeleton(p) {
            return Err(Error::EndpointOnSkeleton {
                point: p.coords().to_vec(),
            });
        }
        grid.locate(p).ok_or_else(|| {
            Error::InvalidArgument(format!("path endpoint {p:?} outside the grid"))
        })
    };
    let mut groups: BTreeMap<(u64, u64), Vec<WeightedPath>> = BTreeMap::new();
    for path in &d.paths {
        let key = (locate(path.start())?, locate(path.end())?);
        groups.entry(key).or_default().push(path.clone());
    }
    let parts = groups
        .into_iter()
        .map(|(k, paths)| {
            let decomposition = PathDecomposition { paths };
            let current = current_of(&decomposition);
            (k, CellPart { decomposition, current })
        })
        .collect();
    Ok(CellPartition {
        grid: grid.clone(),
        parts,
    })
}

/// Segments of the common arrangement of all parts with the ℓ¹ combined
/// multiplicity `θ̄ = Σ_{ij} |θ^{ij}|` as `theta`.
pub fn combined_multiplicity(p: &CellPartition) -> Vec<Edge> {
    let labeled = p
        .parts
        .values()
        .enumerate()
        .flat_map(|(label, part)| part.current.edges().iter().map(move |e| (e.clone(), label)))
        .collect();
    arrangement(labeled)
        .into_iter()
        .filter_map(|piece| {
            let theta: f64 = piece.parts.iter().map(|(_, t)| t.abs()).sum();
            (theta > THETA_TOL).then(|| Edge::new(piece.a, piece.b, theta))
        })
        .collect()
}

/// `∫ H(θ̄) dH¹` over the common arrangement of the parts.
pub fn combined_multiplicity_mass(p: &CellPartition, cost: &CostSpec) -> f64 {
    let terms: Vec<f64> = combined_multiplicity(p)
        .iter()
        .map(|e| cost.eval(e.theta) * e.length())
        .collect();
    pairwise_sum(&terms)
}
