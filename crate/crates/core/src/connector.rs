//! Cheap connections between equal-mass atomic measures.
//!
//! [`connect`] builds, on a dyadic grid of level `k`, a current with boundary
//! exactly `μ − ν` and an explicit H-mass bound: every cell ships its local
//! imbalance to its center through a cone, and the cell imbalances
//! `θ_ℓ = ν(Q^ℓ) − μ(Q^ℓ)` are then balanced through one cone at the center of
//! the root cube. The first term of the bound decays like `2^{-k}`, the second
//! is controlled by the H-mass of the cell imbalances, which vanishes as the
//! two measures get close at a fixed scale.
//!
//! [`dyadic_connection_cost`] chains such cones across levels for a single
//! measure and exposes the summability threshold `α = 1 − 1/d`.

use std::collections::BTreeMap;

use crate::currents::{cone, h_mass, PolyhedralCurrent};
use crate::error::{Error, Result};
use crate::geometry::{check_dim, Cube, Grid, Point};
use crate::measures::{
    canonicalize, h_mass_measure, CostSpec, SignedAtomicMeasure, MASS_TOL, WEIGHT_TOL,
};
use crate::numeric::compensated_sum;

/// Output of [`connect`].
#[derive(Clone, Debug)]
pub struct ConnectionResult {
    /// `C1 − C2`, with boundary `μ − ν`.
    pub current: PolyhedralCurrent,
    pub k: u32,
    /// `2^{-k} l (M_H(μ) + M_H(ν)) + l M_H(σ)` with `l` the root diameter.
    pub bound: f64,
    /// Cell imbalances `Σ_ℓ θ_ℓ δ_{x_ℓ}`.
    pub sigma: SignedAtomicMeasure,
}

impl ConnectionResult {
    pub fn energy(&self, cost: &CostSpec) -> f64 {
        h_mass(&self.current, cost)
    }
}

fn check_measure_in(mu: &SignedAtomicMeasure, q: &Cube, name: &str) -> Result<()> {
    if !mu.is_nonnegative() {
        return Err(Error::InvalidArgument(format!("{name} must be a positive measure")));
    }
    for a in mu.atoms() {
        check_dim(q.dim(), a.point.dim())?;
        if !q.contains(&a.point) {
            return Err(Error::InvalidArgument(format!(
                "{name} has an atom at {:?} outside the cube",
                a.point
            )));
        }
    }
    Ok(())
}

/// Groups the atoms of `mu` by cell of `grid`; the key is the flat cell index.
fn by_cell(mu: &SignedAtomicMeasure, grid: &Grid, strict: bool) -> Result<BTreeMap<u64, Vec<(Point, f64)>>> {
    let mut cells: BTreeMap<u64, Vec<(Point, f64)>> = BTreeMap::new();
    for a in mu.atoms() {
        if strict && grid.on_skeleton(&a.point) {
            return Err(Error::AtomOnSkeleton {
                point: a.point.coords().to_vec(),
                level: grid.level(),
            });
        }
        let idx = grid.locate(&a.point).ok_or_else(|| {
            Error::InvalidArgument(format!("atom {:?} outside the grid", a.point))
        })?;
        cells.entry(idx).or_default().push((a.point.clone(), a.weight));
    }
    Ok(cells)
}

/// Connects `μ` to `ν` through the level-`k` grid of `q`.
///
/// Both measures must be positive, of equal mass, supported in `q`, and keep
/// off the level-`k` skeleton (see [`crate::geometry::shift_grid_avoiding`]).
pub fn connect(
    mu: &SignedAtomicMeasure,
    nu: &SignedAtomicMeasure,
    q: &Cube,
    k: u32,
    cost: &CostSpec,
) -> Result<ConnectionResult> {
    check_measure_in(mu, q, "mu")?;
    check_measure_in(nu, q, "nu")?;
    let (m, n) = (mu.total(), nu.total());
    if (m - n).abs() > MASS_TOL {
        return Err(Error::MassMismatch { left: m, right: n });
    }
    let grid = q.subdivide(k)?;
    let mu_cells = by_cell(mu, &grid, true)?;
    let nu_cells = by_cell(nu, &grid, true)?;

    let mut occupied: Vec<u64> = mu_cells.keys().chain(nu_cells.keys()).copied().collect();
    occupied.sort_unstable();
    occupied.dedup();

    let empty = Vec::new();
    let mut c1_edges = Vec::new();
    let mut sigma_raw = Vec::new();
    for idx in occupied {
        let mu_here = mu_cells.get(&idx).unwrap_or(&empty);
        let nu_here = nu_cells.get(&idx).unwrap_or(&empty);
        let center = grid.cell(idx).center;
        let local = canonicalize(
            mu_here
                .iter()
                .cloned()
                .chain(nu_here.iter().map(|(p, w)| (p.clone(), -w)))
                .collect(),
        );
        c1_edges.extend(cone(&center, &local)?.edges().iter().cloned());
        let theta = compensated_sum(nu_here.iter().map(|a| a.1))
            - compensated_sum(mu_here.iter().map(|a| a.1));
        if theta.abs() >= WEIGHT_TOL {
            sigma_raw.push((center, theta));
        }
    }
    let sigma = canonicalize(sigma_raw);
    let c1 = PolyhedralCurrent::from_raw(c1_edges);
    let c2 = cone(&q.center, &sigma)?;
    let current = c1.sub(&c2);

    let l = q.diameter();
    let bound = (0.5f64).powi(k as i32) * l * (h_mass_measure(mu, cost) + h_mass_measure(nu, cost))
        + l * h_mass_measure(&sigma, cost);
    Ok(ConnectionResult {
        current,
        k,
        bound,
        sigma,
    })
}

/// Level-`k` dyadic discretization: the mass of each cell concentrated at
/// its center. Cells are half-open, so atoms on the skeleton go to the upper
/// cell.
pub fn discretize(mu: &SignedAtomicMeasure, q: &Cube, k: u32) -> Result<SignedAtomicMeasure> {
    let grid = q.subdivide(k)?;
    let cells = by_cell(mu, &grid, false)?;
    Ok(canonicalize(
        cells
            .into_iter()
            .map(|(idx, atoms)| (grid.cell(idx).center, compensated_sum(atoms.iter().map(|a| a.1))))
            .collect(),
    ))
}

/// Per-level transport costs between consecutive dyadic discretizations.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicCosts {
    /// `levels[ℓ]` is the H-mass of the cones from level-`ℓ` cell centers to
    /// the level-`(ℓ+1)` discretization.
    pub levels: Vec<f64>,
}

impl DyadicCosts {
    pub fn partial_sums(&self) -> Vec<f64> {
        self.levels
            .iter()
            .scan(0.0, |acc, c| {
                *acc += c;
                Some(*acc)
            })
            .collect()
    }

    /// Consecutive ratios `levels[ℓ+1] / levels[ℓ]` where defined.
    pub fn ratios(&self) -> Vec<f64> {
        self.levels
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }

    /// Median of the consecutive ratios (`None` with fewer than two nonzero levels).
    pub fn empirical_ratio(&self) -> Option<f64> {
        let mut r = self.ratios();
        if r.is_empty() {
            return None;
        }
        r.sort_by(f64::total_cmp);
        let m = r.len() / 2;
        Some(if r.len() % 2 == 1 { r[m] } else { 0.5 * (r[m - 1] + r[m]) })
    }
}

/// Costs of the dyadic cone chain `μ_0 → μ_1 → … → μ_kmax` for a probability
/// measure supported in `q`, where `μ_ℓ` is the level-`ℓ` discretization.
pub fn dyadic_connection_cost(
    mu: &SignedAtomicMeasure,
    q: &Cube,
    kmax: u32,
    cost: &CostSpec,
) -> Result<DyadicCosts> {
    check_measure_in(mu, q, "mu")?;
    if (mu.total() - 1.0).abs() > MASS_TOL {
        return Err(Error::InvalidArgument(format!(
            "mu must be a probability measure (mass {})",
            mu.total()
        )));
    }
    let mut levels = Vec::with_capacity(kmax as usize);
    for l in 0..kmax {
        let coarse = q.subdivide(l)?;
        let fine = discretize(mu, q, l + 1)?;
        let cells = by_cell(&fine, &coarse, false)?;
        let mut edges = Vec::new();
        for (idx, atoms) in cells {
            let center = coarse.cell(idx).center;
            edges.extend(cone(&center, &canonicalize(atoms))?.edges().iter().cloned());
        }
        levels.push(h_mass(&PolyhedralCurrent::from_raw(edges), cost));
    }
    Ok(DyadicCosts { levels })
}

/// The uniform probability measure on the `2^{kd}` level-`k` cell centers of `q`.
pub fn uniform_dyadic_measure(q: &Cube, k: u32) -> Result<SignedAtomicMeasure> {
    let grid = q.subdivide(k)?;
    let n = grid.cell_count();
    let w = 1.0 / n as f64;
    Ok(canonicalize(grid.cells().map(|c| (c.center, w)).collect()))
}
