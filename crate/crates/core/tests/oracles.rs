//! Library results checked against slow, independent reference computations.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use branchpath::geometry::{shift_grid_avoiding, SKELETON_TOL};
use branchpath::measures::w1_distance;
use branchpath::solver::{enumerate_topologies, TransportInstance};
use branchpath::{CostSpec, Cube, Point, SignedAtomicMeasure};

fn p2(x: f64, y: f64) -> Point {
    Point::from(vec![x, y])
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// With n equal atoms on each side, some optimal plan is a permutation
/// (Birkhoff), so W1 is the cheapest matching.
#[test]
fn w1_matches_brute_force_matching() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=5 {
        for _ in 0..6 {
            let d = rng.gen_range(1..=3);
            let pts = |rng: &mut ChaCha8Rng| -> Vec<Point> {
                (0..n)
                    .map(|_| Point::from((0..d).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<_>>()))
                    .collect()
            };
            let (xs, ys) = (pts(&mut rng), pts(&mut rng));
            let w = 1.0 / n as f64;
            let mu = SignedAtomicMeasure::from_atoms(xs.iter().map(|x| (x.clone(), w))).unwrap();
            let nu = SignedAtomicMeasure::from_atoms(ys.iter().map(|y| (y.clone(), w))).unwrap();
            let best = permutations(n)
                .iter()
                .map(|s| s.iter().enumerate().map(|(i, &j)| w * xs[i].dist(&ys[j])).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            let lp = w1_distance(&mu, &nu).unwrap();
            assert!((lp - best).abs() <= 1e-9, "n={n}: LP {lp} vs matching {best}");
        }
    }
}

/// Two atoms of different masses: the plan is forced, W1 = m·|x−y| summed.
#[test]
fn w1_of_forced_plans() {
    let mu = SignedAtomicMeasure::from_atoms([(p2(0.0, 0.0), 0.3), (p2(1.0, 0.0), 0.7)]).unwrap();
    let nu = SignedAtomicMeasure::dirac(p2(0.0, 2.0), 1.0);
    let expected = 0.3 * 2.0 + 0.7 * 5f64.sqrt();
    assert!((w1_distance(&mu, &nu).unwrap() - expected).abs() <= 1e-12);
}

// Reference topology enumeration: every subset of the admissible node pairs,
// kept when it is a forest whose tree flows (net supply of the far side) are
// nonzero, leave sources, enter sinks, and give Steiner nodes degree >= 3.
// Duplicates up to relabelling Steiner nodes are removed by the minimum edge
// list over all relabellings.

fn reference_topologies(supply: &[f64], n_src: usize, max_steiner: usize) -> BTreeSet<(usize, Vec<(usize, usize)>)> {
    let n_term = supply.len();
    let mut out = BTreeSet::new();
    for k in 0..=max_steiner {
        let n = n_term + k;
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .filter(|&(u, v)| (u < n_src && v >= n_src && v < n_term) || v >= n_term)
            .collect();
        let perms = permutations(k);
        for mask in 0u64..(1 << pairs.len()) {
            let chosen: Vec<(usize, usize)> =
                (0..pairs.len()).filter(|i| mask >> i & 1 == 1).map(|i| pairs[i]).collect();
            if let Some(directed) = orient_forest(n, n_src, supply, &chosen) {
                let key = perms
                    .iter()
                    .map(|perm| {
                        let relabel = |v: usize| if v < n_term { v } else { n_term + perm[v - n_term] };
                        let mut e: Vec<(usize, usize)> = directed.iter().map(|&(a, b)| (relabel(a), relabel(b))).collect();
                        e.sort();
                        e
                    })
                    .min()
                    .expect("at least the identity relabelling");
                out.insert((k, key));
            }
        }
    }
    out
}

fn orient_forest(n: usize, n_src: usize, supply: &[f64], edges: &[(usize, usize)]) -> Option<Vec<(usize, usize)>> {
    let n_term = supply.len();
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    for v in 0..n {
        let need = if v < n_term { 1 } else { 3 };
        if adj[v].len() < need {
            return None;
        }
    }
    if edges.len() + components(&adj) != n {
        return None; // has a cycle
    }
    let node_supply = |v: usize| if v < n_term { supply[v] } else { 0.0 };
    let mut directed = Vec::new();
    for &(u, v) in edges {
        // supply on u's side once the edge is cut
        let side = far_side_supply(&adj, u, v, &node_supply);
        if side.abs() <= 1e-9 {
            return None;
        }
        let (from, to) = if side > 0.0 { (u, v) } else { (v, u) };
        let source_in = to < n_src;
        let sink_out = from >= n_src && from < n_term;
        if source_in || sink_out {
            return None;
        }
        directed.push((from, to));
    }
    // every component balances
    let mut seen = vec![false; n];
    for s in 0..n {
        if !seen[s] {
            let mut stack = vec![s];
            seen[s] = true;
            let mut total = 0.0;
            while let Some(v) = stack.pop() {
                total += node_supply(v);
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            if total.abs() > 1e-9 {
                return None;
            }
        }
    }
    Some(directed)
}

fn components(adj: &[Vec<usize>]) -> usize {
    let mut seen = vec![false; adj.len()];
    let mut count = 0;
    for s in 0..adj.len() {
        if seen[s] {
            continue;
        }
        count += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    count
}

fn far_side_supply(adj: &[Vec<usize>], root: usize, cut: usize, supply: &dyn Fn(usize) -> f64) -> f64 {
    let mut seen = vec![false; adj.len()];
    seen[root] = true;
    seen[cut] = true;
    let mut stack = vec![root];
    let mut total = 0.0;
    while let Some(v) = stack.pop() {
        total += supply(v);
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    total
}

fn library_topologies(inst: &TransportInstance, max_steiner: usize) -> BTreeSet<(usize, Vec<(usize, usize)>)> {
    let n_term = inst.terminals();
    let topos = enumerate_topologies(inst, max_steiner).unwrap();
    let set: BTreeSet<_> = topos
        .iter()
        .map(|t| {
            let perms = permutations(t.steiner);
            let key = perms
                .iter()
                .map(|perm| {
                    let relabel = |v: usize| if v < n_term { v } else { n_term + perm[v - n_term] };
                    let mut e: Vec<(usize, usize)> = t.edges.iter().map(|e| (relabel(e.from), relabel(e.to))).collect();
                    e.sort();
                    e
                })
                .min()
                .unwrap();
            (t.steiner, key)
        })
        .collect();
    assert_eq!(set.len(), topos.len(), "library returned duplicate topologies");
    set
}

fn instance(sources: &[f64], sinks: &[f64]) -> TransportInstance {
    let pt = |i: usize| p2(i as f64, (i * i % 7) as f64 * 0.1);
    let mu_minus = SignedAtomicMeasure::from_atoms(sources.iter().enumerate().map(|(i, &w)| (pt(i), w))).unwrap();
    let mu_plus =
        SignedAtomicMeasure::from_atoms(sinks.iter().enumerate().map(|(i, &w)| (pt(i + sources.len()), w))).unwrap();
    TransportInstance::new(2, CostSpec::power(0.5).unwrap(), mu_minus, mu_plus, Cube::new(p2(2.0, 0.0), 12.0).unwrap(), 2)
        .unwrap()
}

#[test]
fn topology_enumeration_matches_reference() {
    let cases: Vec<(Vec<f64>, Vec<f64>, usize)> = vec![
        (vec![1.0], vec![1.0], 2),
        (vec![1.0], vec![0.4, 0.6], 2),
        (vec![0.3, 0.7], vec![1.0], 2),
        (vec![0.3, 0.7], vec![0.6, 0.4], 2),
        // balanced pairs allow forests with two trees
        (vec![0.5, 0.5], vec![0.5, 0.5], 2),
        (vec![1.0], vec![0.2, 0.3, 0.5], 2),
        (vec![0.4, 0.6], vec![0.4, 0.3, 0.3], 1),
    ];
    for (src, snk, k) in cases {
        let inst = instance(&src, &snk);
        let supply = inst.supplies();
        let reference = reference_topologies(&supply, src.len(), k);
        let library = library_topologies(&inst, k);
        assert_eq!(library, reference, "sources {src:?}, sinks {snk:?}, max_steiner {k}");
    }
}

#[test]
fn topology_counts_for_small_cases() {
    // a single edge, then the V and the Y
    assert_eq!(library_topologies(&instance(&[1.0], &[1.0]), 2).len(), 1);
    assert_eq!(library_topologies(&instance(&[1.0], &[0.4, 0.6]), 1).len(), 2);
}

/// Checks every level from 0 to kmax coordinate by coordinate, using plain
/// arithmetic on the returned cube rather than the grid type.
#[test]
fn shifted_grid_misses_atoms_at_every_level() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..40 {
        let d = rng.gen_range(1..=3);
        let center = Point::from((0..d).map(|_| rng.gen_range(-3.0..3.0)).collect::<Vec<_>>());
        let q = Cube::new(center, rng.gen_range(0.2..4.0)).unwrap();
        let kmax = rng.gen_range(0..=10);
        let lo = q.lower();
        // atoms on dyadic points of the input cube are the adversarial case
        let atoms: Vec<Point> = (0..rng.gen_range(1..30))
            .map(|_| {
                Point::from(
                    (0..d)
                        .map(|i| {
                            if rng.gen_bool(0.5) {
                                lo.coords()[i] + q.edge * rng.gen_range(0..=16) as f64 / 16.0
                            } else {
                                lo.coords()[i] + q.edge * rng.gen::<f64>()
                            }
                        })
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        let s = shift_grid_avoiding(&q, &atoms, kmax).unwrap();
        assert!(s.contains_cube(&q), "trial {trial}: shifted cube must contain the input");
        assert_eq!(s.edge, q.edge.ceil() + 2.0);
        let slo = s.lower();
        for a in &atoms {
            assert!(s.contains(a));
            for k in 0..=kmax {
                let spacing = s.edge / (1u64 << k) as f64;
                for i in 0..d {
                    let t = (a.coords()[i] - slo.coords()[i]) / spacing;
                    let gap = (t - t.round()).abs() * spacing;
                    assert!(gap > SKELETON_TOL * s.edge, "trial {trial}: atom {a:?} on level {k} hyperplane");
                }
            }
        }
    }
}
