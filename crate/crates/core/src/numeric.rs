//! Small numeric helpers shared by the modules.

use crate::geometry::Point;

/// Pairwise summation; deterministic for a given input order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let (l, r) = xs.split_at(xs.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

/// Neumaier compensated summation.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Groups points closer than `tol` in the sup norm.
///
/// Returns the cluster id of every input point and one representative per
/// cluster (the first point seen in lexicographic order). Cluster ids follow
/// the lexicographic order of their representatives.
pub fn cluster_points(points: &[Point], tol: f64) -> (Vec<usize>, Vec<Point>) {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].lex_cmp(&points[b]));
    let mut ids = vec![0usize; points.len()];
    let mut reps: Vec<Point> = Vec::new();
    let mut window_start = 0usize;
    for &i in &order {
        let p = &points[i];
        let x0 = p.coords().first().copied().unwrap_or(0.0);
        while window_start < reps.len() && reps[window_start].coords()[0] < x0 - tol {
            window_start += 1;
        }
        let hit = (window_start..reps.len()).find(|&r| reps[r].sup_dist_unchecked(p) <= tol);
        ids[i] = match hit {
            Some(r) => r,
            None => {
                reps.push(p.clone());
                reps.len() - 1
            }
        };
    }
    (ids, reps)
}
