//! Exact small-instance optimal traffic paths.
//!
//! Candidates are directed forests on the terminals (atoms of `μ−` and `μ+`)
//! plus a bounded number of Steiner nodes. Flows are forced by conservation,
//! so a topology fixes every edge weight `H(flow)` and the energy
//! `Σ H(flow_e) |p_u − p_v|` only depends on the Steiner positions. That
//! function is a weighted sum of norms of affine maps, hence convex; it is
//! minimized by block-coordinate Weiszfeld steps (Vardi–Zhang variant, exact
//! at vertices) from several deterministic starts.
//!
//! Sources only emit and sinks only absorb. Routing through a terminal is
//! still representable: a Steiner node collapses onto it.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::currents::{h_mass, Edge, PolyhedralCurrent};
use crate::error::{Error, Result};
use crate::geometry::{check_dim, Cube, Point};
use crate::measures::{CostSpec, SignedAtomicMeasure, ATOM_TOL, MASS_TOL};

pub const MAX_TERMINALS: usize = 6;
pub const MAX_STEINER: usize = 3;
/// Steiner nodes closer than this to a terminal (or to each other) are merged.
pub const COLLAPSE_TOL: f64 = 1e-9;
/// Number of starts per topology in [`optimize_topology`].
pub const STARTS: usize = 20;
const SEED: u64 = 0x5eed_b7a9;
const MAX_SWEEPS: usize = 20_000;
/// Relative flow below which an edge counts as carrying nothing.
const FLOW_TOL: f64 = 1e-12;

/// A transport problem `μ− → μ+` with an H-mass cost.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr", into = "InstanceRepr")]
pub struct TransportInstance {
    pub d: usize,
    pub cost: CostSpec,
    pub mu_minus: SignedAtomicMeasure,
    pub mu_plus: SignedAtomicMeasure,
    pub domain: Cube,
    pub max_steiner: usize,
}

#[derive(Clone, Serialize, Deserialize)]
struct InstanceRepr {
    d: usize,
    cost: CostSpec,
    mu_minus: SignedAtomicMeasure,
    mu_plus: SignedAtomicMeasure,
    domain: Cube,
    #[serde(default = "default_max_steiner")]
    max_steiner: usize,
}

fn default_max_steiner() -> usize {
    2
}

impl TryFrom<InstanceRepr> for TransportInstance {
    type Error = Error;
    fn try_from(r: InstanceRepr) -> Result<Self> {
        TransportInstance::new(r.d, r.cost, r.mu_minus, r.mu_plus, r.domain, r.max_steiner)
    }
}

impl From<TransportInstance> for InstanceRepr {
    fn from(t: TransportInstance) -> Self {
        InstanceRepr {
            d: t.d,
            cost: t.cost,
            mu_minus: t.mu_minus,
            mu_plus: t.mu_plus,
            domain: t.domain,
            max_steiner: t.max_steiner,
        }
    }
}

impl TransportInstance {
    pub fn new(
        d: usize,
        cost: CostSpec,
        mu_minus: SignedAtomicMeasure,
        mu_plus: SignedAtomicMeasure,
        domain: Cube,
        max_steiner: usize,
    ) -> Result<Self> {
        check_dim(d, domain.dim())?;
        for (name, m) in [("mu_minus", &mu_minus), ("mu_plus", &mu_plus)] {
            if m.is_empty() || !m.is_nonnegative() {
                return Err(Error::InstanceInvalid(format!("{name} must be a nonzero positive measure")));
            }
            for a in m.atoms() {
                check_dim(d, a.point.dim())?;
                if !domain.contains(&a.point) {
                    return Err(Error::InstanceInvalid(format!(
                        "{name} atom {:?} lies outside the domain",
                        a.point.coords()
                    )));
                }
            }
        }
        let (a, b) = (mu_minus.total(), mu_plus.total());
        if (a - b).abs() > MASS_TOL {
            return Err(Error::MassMismatch { left: a, right: b });
        }
        for x in mu_minus.atoms() {
            for y in mu_plus.atoms() {
                if x.point.sup_dist_unchecked(&y.point) <= ATOM_TOL {
                    return Err(Error::InstanceInvalid(format!(
                        "mu_minus and mu_plus share the atom {:?}; they must be mutually singular",
                        x.point.coords()
                    )));
                }
            }
        }
        Ok(TransportInstance { d, cost, mu_minus, mu_plus, domain, max_steiner })
    }

    pub fn sources(&self) -> usize {
        self.mu_minus.len()
    }

    pub fn sinks(&self) -> usize {
        self.mu_plus.len()
    }

    pub fn terminals(&self) -> usize {
        self.sources() + self.sinks()
    }

    /// Terminal positions: sources first, then sinks.
    pub fn terminal_points(&self) -> Vec<Point> {
        self.mu_minus
            .atoms()
            .iter()
            .chain(self.mu_plus.atoms())
            .map(|a| a.point.clone())
            .collect()
    }

    /// Net supply of each terminal: `+mass` for sources, `−mass` for sinks.
    pub fn supplies(&self) -> Vec<f64> {
        self.mu_minus
            .atoms()
            .iter()
            .map(|a| a.weight)
            .chain(self.mu_plus.atoms().iter().map(|a| -a.weight))
            .collect()
    }

    fn mass(&self) -> f64 {
        self.mu_minus.total()
    }
}

/// Directed edge of a [`Topology`]; `flow > 0` runs from `from` to `to`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopoEdge {
    pub from: usize,
    pub to: usize,
    pub flow: f64,
}

/// Directed forest on `terminals + steiner` nodes. Nodes `0..terminals` are
/// the instance terminals (sources first), the rest are Steiner nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub terminals: usize,
    pub steiner: usize,
    pub edges: Vec<TopoEdge>,
}

impl Topology {
    pub fn nodes(&self) -> usize {
        self.terminals + self.steiner
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.from == v || e.to == v).count()
    }
}

fn check_budget(instance: &TransportInstance, max_steiner: usize) -> Result<()> {
    if instance.terminals() > MAX_TERMINALS || max_steiner > MAX_STEINER {
        return Err(Error::TooManyTerminals {
            terminals: instance.terminals(),
            max: MAX_TERMINALS,
            steiner: max_steiner,
            max_steiner: MAX_STEINER,
        });
    }
    Ok(())
}

/// Orients the undirected forest `pairs` by conservation. Returns `None`
/// unless every component balances, every edge carries flow, sources only
/// emit and sinks only absorb.
fn orient(n: usize, n_src: usize, n_term: usize, supply: &[f64], pairs: &[(usize, usize)], scale: f64) -> Option<Vec<TopoEdge>> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (k, &(u, v)) in pairs.iter().enumerate() {
        adj[u].push((v, k));
        adj[v].push((u, k));
    }
    let mut parent_edge: Vec<Option<usize>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut flows = vec![0.0; pairs.len()];
    let mut dir = vec![(0usize, 0usize); pairs.len()];
    for root in 0..n {
        if seen[root] {
            continue;
        }
        // iterative DFS, then accumulate subtree supplies in reverse order
        let mut order = Vec::new();
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(u) = stack.pop() {
            order.push(u);
            for &(v, k) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent_edge[v] = Some(k);
                    stack.push(v);
                }
            }
        }
        let mut sub: Vec<f64> = vec![0.0; n];
        for &u in order.iter().rev() {
            sub[u] += if u < n_term { supply[u] } else { 0.0 };
            if let Some(k) = parent_edge[u] {
                let (a, b) = pairs[k];
                let p = if a == u { b } else { a };
                sub[p] += sub[u];
                // sub[u] leaves u's subtree through edge k
                flows[k] = sub[u].abs();
                dir[k] = if sub[u] > 0.0 { (u, p) } else { (p, u) };
            }
        }
        if sub[root].abs() > MASS_TOL.max(FLOW_TOL * scale) {
            return None;
        }
    }
    let mut out = Vec::with_capacity(pairs.len());
    for k in 0..pairs.len() {
        if flows[k] <= FLOW_TOL * scale {
            return None;
        }
        let (from, to) = dir[k];
        if to < n_src || (from >= n_src && from < n_term) {
            return None;
        }
        out.push(TopoEdge { from, to, flow: flows[k] });
    }
    Some(out)
}

/// Canonical key of an edge set under permutations of the Steiner labels.
fn canonical_key(n_term: usize, steiner: usize, pairs: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut perm: Vec<usize> = (0..steiner).collect();
    let mut best: Option<Vec<(usize, usize)>> = None;
    loop {
        let map = |v: usize| if v < n_term { v } else { n_term + perm[v - n_term] };
        let mut key: Vec<(usize, usize)> = pairs
            .iter()
            .map(|&(u, v)| {
                let (a, b) = (map(u), map(v));
                (a.min(b), a.max(b))
            })
            .collect();
        key.sort_unstable();
        if best.as_ref().map_or(true, |b| key < *b) {
            best = Some(key);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    best.unwrap_or_default()
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

struct Search<'a> {
    n: usize,
    n_src: usize,
    n_term: usize,
    candidates: Vec<(usize, usize)>,
    last_use: Vec<usize>,
    supply: &'a [f64],
    scale: f64,
    chosen: Vec<(usize, usize)>,
    degree: Vec<usize>,
    comp: Vec<usize>,
    found: Vec<Vec<(usize, usize)>>,
}

impl Search<'_> {
    fn find(&self, mut v: usize) -> usize {
        while self.comp[v] != v {
            v = self.comp[v];
        }
        v
    }

    fn need(&self, v: usize) -> usize {
        if v < self.n_term {
            1
        } else {
            3
        }
    }

    fn closed_ok(&self, k: usize) -> bool {
        // nodes whose last candidate edge is k are now final
        let (u, v) = self.candidates[k];
        [u, v]
            .iter()
            .all(|&x| self.last_use[x] != k || self.degree[x] >= self.need(x))
    }

    fn run(&mut self, k: usize) {
        if k == self.candidates.len() {
            if self.orient().is_some() {
                self.found.push(self.chosen.clone());
            }
            return;
        }
        let (u, v) = self.candidates[k];
        let (ru, rv) = (self.find(u), self.find(v));
        if ru != rv && self.chosen.len() < self.n - 1 {
            let saved = self.comp[ru];
            self.comp[ru] = rv;
            self.chosen.push((u, v));
            self.degree[u] += 1;
            self.degree[v] += 1;
            if self.closed_ok(k) {
                self.run(k + 1);
            }
            self.degree[u] -= 1;
            self.degree[v] -= 1;
            self.chosen.pop();
            self.comp[ru] = saved;
        }
        if self.closed_ok(k) {
            self.run(k + 1);
        }
    }

    fn orient(&self) -> Option<Vec<TopoEdge>> {
        orient(self.n, self.n_src, self.n_term, self.supply, &self.chosen, self.scale)
    }
}

/// Every combinatorially distinct directed forest with at most `max_steiner`
/// Steiner nodes, each of degree at least three, whose forced flows are
/// nonzero and respect the source/sink roles. The order is deterministic.
pub fn enumerate_topologies(instance: &TransportInstance, max_steiner: usize) -> Result<Vec<Topology>> {
    check_budget(instance, max_steiner)?;
    let n_src = instance.sources();
    let n_term = instance.terminals();
    let supply = instance.supplies();
    let scale = instance.mass();
    let mut out = Vec::new();
    for k in 0..=max_steiner {
        let n = n_term + k;
        let mut candidates = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                let src_sink = u < n_src && (n_src..n_term).contains(&v);
                if src_sink || v >= n_term {
                    candidates.push((u, v));
                }
            }
        }
        let mut last_use = vec![usize::MAX; n];
        for (i, &(u, v)) in candidates.iter().enumerate() {
            last_use[u] = i;
            last_use[v] = i;
        }
        if (0..n).any(|v| last_use[v] == usize::MAX) {
            continue;
        }
        let mut search = Search {
            n,
            n_src,
            n_term,
            candidates,
            last_use,
            supply: &supply,
            scale,
            chosen: Vec::new(),
            degree: vec![0; n],
            comp: (0..n).collect(),
            found: Vec::new(),
        };
        search.run(0);
        let mut seen = BTreeSet::new();
        for pairs in search.found {
            let key = canonical_key(n_term, k, &pairs);
            if seen.insert(key.clone()) {
                let edges = orient(n, n_src, n_term, &supply, &key, scale)
                    .expect("a relabelled valid forest stays valid");
                out.push(Topology { terminals: n_term, steiner: k, edges });
            }
        }
    }
    Ok(out)
}

/// Positions and objective value of an optimized topology.
#[derive(Clone, Debug)]
pub struct Optimized {
    /// Positions of all nodes, terminals first.
    pub positions: Vec<Point>,
    /// `Σ H(flow_e) |p_u − p_v|` at `positions`.
    pub energy: f64,
}

fn objective(t: &Topology, weights: &[f64], pos: &[Point]) -> f64 {
    t.edges
        .iter()
        .zip(weights)
        .map(|(e, w)| w * pos[e.from].dist(&pos[e.to]))
        .sum()
}

/// One Vardi–Zhang step for the weighted Fermat–Weber problem of `(q_i, w_i)`
/// started at `p`. Returns the new point.
fn fermat_weber_step(p: &Point, anchors: &[(Point, f64)], tol: f64) -> Point {
    let d = p.dim();
    // a neighbor where the minimum is attained is an exact answer: the pull
    // of the other anchors is balanced by the weight sitting there
    for (j, (qj, _)) in anchors.iter().enumerate() {
        if anchors[..j].iter().any(|(q, _)| q.dist(qj) <= tol) {
            continue;
        }
        let mut pull = vec![0.0; d];
        let mut wj = 0.0;
        for (qi, wi) in anchors {
            let r = qj.dist(qi);
            if r <= tol {
                wj += wi;
            } else {
                for (k, slot) in pull.iter_mut().enumerate() {
                    *slot += wi * (qi.coords()[k] - qj.coords()[k]) / r;
                }
            }
        }
        if pull.iter().map(|x| x * x).sum::<f64>().sqrt() <= wj {
            return qj.clone();
        }
    }
    let mut num = vec![0.0; d];
    let mut den = 0.0;
    let mut pull = vec![0.0; d];
    let mut eta = 0.0;
    for (q, w) in anchors {
        let r = p.dist(q);
        if r <= tol {
            eta += w;
            continue;
        }
        den += w / r;
        for k in 0..d {
            num[k] += w * q.coords()[k] / r;
            pull[k] += w * (q.coords()[k] - p.coords()[k]) / r;
        }
    }
    if den == 0.0 {
        return p.clone();
    }
    let t: Vec<f64> = num.iter().map(|x| x / den).collect();
    let r = pull.iter().map(|x| x * x).sum::<f64>().sqrt();
    let lambda = if r > 0.0 { (eta / r).min(1.0) } else { 1.0 };
    Point::new(
        (0..d)
            .map(|k| (1.0 - lambda) * t[k] + lambda * p.coords()[k])
            .collect::<Vec<f64>>(),
    )
}

fn descend(t: &Topology, weights: &[f64], mut pos: Vec<Point>, scale: f64) -> Vec<Point> {
    let n_term = t.terminals;
    let tol = 1e-15 * scale.max(1.0);
    let mut anchors: Vec<Vec<(usize, f64)>> = vec![Vec::new(); t.nodes()];
    for (e, &w) in t.edges.iter().zip(weights) {
        anchors[e.from].push((e.to, w));
        anchors[e.to].push((e.from, w));
    }
    let mut last = objective(t, weights, &pos);
    let mut stalled = 0;
    for _ in 0..MAX_SWEEPS {
        let mut moved: f64 = 0.0;
        for s in n_term..t.nodes() {
            let local: Vec<(Point, f64)> = anchors[s].iter().map(|&(v, w)| (pos[v].clone(), w)).collect();
            let next = fermat_weber_step(&pos[s], &local, tol);
            moved = moved.max(next.dist(&pos[s]));
            pos[s] = next;
        }
        let now = objective(t, weights, &pos);
        if moved <= 1e-14 * scale.max(1.0) {
            break;
        }
        // linear convergence can crawl on flat valleys; stop when the
        // energy no longer changes in the last representable digits
        if last - now <= 1e-16 * now.abs().max(1.0) {
            stalled += 1;
            if stalled >= 50 {
                break;
            }
        } else {
            stalled = 0;
        }
        last = now;
    }
    pos
}

/// Merges Steiner nodes that sit on a terminal or on each other.
fn contract(pos: &mut [Point], n_term: usize) {
    for s in n_term..pos.len() {
        if let Some(q) = (0..n_term).find(|&q| pos[s].dist(&pos[q]) <= COLLAPSE_TOL) {
            pos[s] = pos[q].clone();
        }
    }
    for s in n_term..pos.len() {
        for r in (s + 1)..pos.len() {
            if pos[s] != pos[r] && pos[s].dist(&pos[r]) <= COLLAPSE_TOL {
                pos[r] = pos[s].clone();
            }
        }
    }
}

/// Minimizes `Σ H(flow_e) |p_u − p_v|` over the Steiner positions of `t`
/// from [`STARTS`] deterministic starts, then contracts collapsed nodes.
pub fn optimize_topology(t: &Topology, instance: &TransportInstance) -> Result<Optimized> {
    if t.terminals != instance.terminals() {
        return Err(Error::InvalidArgument("topology does not match the instance".into()));
    }
    let weights: Vec<f64> = t.edges.iter().map(|e| instance.cost.eval(e.flow)).collect();
    let terminals = instance.terminal_points();
    let scale = instance.domain.edge;
    if t.steiner == 0 {
        let energy = objective(t, &weights, &terminals);
        return Ok(Optimized { positions: terminals, energy });
    }
    let d = instance.d;
    let centroid = terminals
        .iter()
        .fold(Point::origin(d), |acc, p| acc.add(p))
        .scale(1.0 / terminals.len() as f64);
    let lo = instance.domain.lower();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut best: Option<Optimized> = None;
    for start in 0..STARTS {
        let mut pos = terminals.clone();
        for s in 0..t.steiner {
            pos.push(if start == 0 {
                // spread slightly so Steiner nodes do not start on top of each other
                centroid.add(&Point::unit(d, s % d).scale(1e-3 * scale * (s as f64 + 1.0)))
            } else {
                Point::new(
                    (0..d)
                        .map(|k| lo.coords()[k] + rng.gen::<f64>() * instance.domain.edge)
                        .collect::<Vec<f64>>(),
                )
            });
        }
        let mut pos = descend(t, &weights, pos, scale);
        contract(&mut pos, t.terminals);
        let energy = objective(t, &weights, &pos);
        if best.as_ref().map_or(true, |b| energy < b.energy) {
            best = Some(Optimized { positions: pos, energy });
        }
    }
    Ok(best.expect("at least one start"))
}

/// Whether the reported optimum is certified over the whole candidate class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimality {
    /// The Steiner budget covers every full tree on these terminals.
    ExactOverEnumeration,
    /// Trees needing more Steiner nodes than the budget were not searched.
    Heuristic,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub current: PolyhedralCurrent,
    pub energy: f64,
    pub topology: Topology,
    pub positions: Vec<Point>,
    pub optimality: Optimality,
}

/// Current carried by an optimized topology.
pub fn topology_current(t: &Topology, positions: &[Point]) -> PolyhedralCurrent {
    PolyhedralCurrent::from_raw(
        t.edges
            .iter()
            .map(|e| Edge::new(positions[e.from].clone(), positions[e.to].clone(), e.flow))
            .collect(),
    )
}

/// Best traffic path over all topologies with at most `max_steiner` Steiner
/// nodes. Topologies are optimized in parallel; ties go to the lowest index.
pub fn solve(instance: &TransportInstance, max_steiner: usize) -> Result<Solution> {
    let topologies = enumerate_topologies(instance, max_steiner)?;
    let scored: Vec<Result<(f64, PolyhedralCurrent, Optimized)>> = topologies
        .par_iter()
        .map(|t| {
            let opt = optimize_topology(t, instance)?;
            let current = topology_current(t, &opt.positions);
            Ok((h_mass(&current, &instance.cost), current, opt))
        })
        .collect();
    let mut best: Option<(usize, f64, PolyhedralCurrent, Optimized)> = None;
    for (i, r) in scored.into_iter().enumerate() {
        let (energy, current, opt) = r?;
        if best.as_ref().map_or(true, |b| energy < b.1) {
            best = Some((i, energy, current, opt));
        }
    }
    let (i, energy, current, opt) =
        best.ok_or_else(|| Error::InstanceInvalid("no admissible topology".into()))?;
    let optimality = if max_steiner + 2 >= instance.terminals() {
        Optimality::ExactOverEnumeration
    } else {
        Optimality::Heuristic
    };
    Ok(Solution {
        current,
        energy,
        topology: topologies[i].clone(),
        positions: opt.positions,
        optimality,
    })
}

/// Straight-segment transport along the north-west-corner plan between the
/// atoms of `μ−` and `μ+`: a cheap upper bound for the optimum.
pub fn direct_transport(instance: &TransportInstance) -> PolyhedralCurrent {
    let src = instance.mu_minus.atoms();
    let dst = instance.mu_plus.atoms();
    let ratio = instance.mu_minus.total() / instance.mu_plus.total();
    let mut left: Vec<f64> = src.iter().map(|a| a.weight).collect();
    let mut right: Vec<f64> = dst.iter().map(|a| a.weight * ratio).collect();
    let (mut i, mut j) = (0, 0);
    let mut edges = Vec::new();
    while i < src.len() && j < dst.len() {
        let m = left[i].min(right[j]);
        if m > 0.0 {
            edges.push(Edge::new(src[i].point.clone(), dst[j].point.clone(), m));
        }
        left[i] -= m;
        right[j] -= m;
        if left[i] <= right[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    PolyhedralCurrent::from_raw(edges)
}

/// Largest number of lattice points scanned by [`oracle_small`].
pub const ORACLE_BUDGET: usize = 50_000_000;

/// Brute-force reference energy for planar instances with at most three
/// terminals: the better of the direct star and the one-Steiner star, whose
/// Steiner position is found by scanning a lattice of step `grid_step` over
/// the domain (terminal points included) and refining by alternating
/// golden-section searches.
pub fn oracle_small(instance: &TransportInstance, grid_step: f64) -> Result<f64> {
    if instance.d != 2 || instance.terminals() > 3 {
        return Err(Error::InvalidArgument("the oracle handles planar instances with at most 3 terminals".into()));
    }
    if !(grid_step.is_finite() && grid_step > 0.0) {
        return Err(Error::InvalidArgument(format!("grid step must be positive, got {grid_step}")));
    }
    let h = |m: f64| instance.cost.eval(m);
    let xs: Vec<(f64, f64, f64)> = instance
        .mu_minus
        .atoms()
        .iter()
        .chain(instance.mu_plus.atoms())
        .map(|a| (a.point.coords()[0], a.point.coords()[1], h(a.weight)))
        .collect();
    let star = |x: f64, y: f64| -> f64 { xs.iter().map(|&(a, b, w)| w * ((x - a).powi(2) + (y - b).powi(2)).sqrt()).sum() };

    // two terminals: a single segment; three: one side has a single atom,
    // which is the hub of the direct star
    let (src, dst) = (instance.mu_minus.atoms(), instance.mu_plus.atoms());
    let hub = if src.len() == 1 { &src[0] } else { &dst[0] };
    let direct = star(hub.point.coords()[0], hub.point.coords()[1]);
    if instance.terminals() < 3 {
        return Ok(direct);
    }

    let n = (instance.domain.edge / grid_step).floor() as usize + 1;
    if n.saturating_mul(n) > ORACLE_BUDGET {
        return Err(Error::Budget(format!("{n}x{n} oracle lattice exceeds {ORACLE_BUDGET} points")));
    }
    let lo = instance.domain.lower();
    let (x0, y0) = (lo.coords()[0], lo.coords()[1]);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..n {
        let x = x0 + i as f64 * grid_step;
        for j in 0..n {
            let y = y0 + j as f64 * grid_step;
            let v = star(x, y);
            if v < best.0 {
                best = (v, x, y);
            }
        }
    }
    for &(a, b, _) in &xs {
        let v = star(a, b);
        if v < best.0 {
            best = (v, a, b);
        }
    }
    let (_, mut bx, mut by) = best;
    let mut radius = grid_step;
    for _ in 0..200 {
        bx = golden(|x| star(x, by), bx - radius, bx + radius);
        by = golden(|y| star(bx, y), by - radius, by + radius);
        radius *= 0.9;
    }
    Ok(direct.min(star(bx, by)).min(best.0))
}

fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
