//! Cones over atomic measures and sup-norm slices of a Y-shaped current.
//!
//! Run: cargo run --example cone_and_slice

use branchpath::currents::{boundary, cone, good_slice_radius, h_mass, slice, slice_by_restriction};
use branchpath::measures::{canonicalize, h_mass_measure};
use branchpath::{CostSpec, Cube, Point, PolyhedralCurrent, SignedAtomicMeasure};

fn p(x: f64, y: f64) -> Point {
    Point::from([x, y])
}

fn main() -> branchpath::Result<()> {
    let alpha = CostSpec::power(0.5)?;

    // x ⌞ μ joins the vertex to every atom; its boundary is μ − M(μ) δ_x
    let q = Cube::unit(2);
    let mu = canonicalize(vec![(p(0.1, 0.2), 0.3), (p(0.8, 0.7), 0.5), (p(0.4, 0.9), 0.2)]);
    let x = p(0.5, 0.5);
    let c = cone(&x, &mu)?;
    let expected = mu.sub(&SignedAtomicMeasure::dirac(x.clone(), mu.total()));
    println!("cone: {} segments, boundary error {:.2e}", c.len(), boundary(&c).max_abs_diff(&expected));
    println!(
        "  H-mass {:.6} <= diam(Q) * H-mass(mu) = {:.6}",
        h_mass(&c, &alpha),
        q.diameter() * h_mass_measure(&mu, &alpha)
    );

    // a Y: unit flow splits at (1, 0) into two halves
    let y = PolyhedralCurrent::new(vec![
        branchpath::Edge::new(p(0.0, 0.0), p(1.0, 0.0), 1.0),
        branchpath::Edge::new(p(1.0, 0.0), p(2.0, 1.0), 0.5),
        branchpath::Edge::new(p(1.0, 0.0), p(2.0, -1.0), 0.5),
    ])?;
    let center = p(1.0, 0.0);
    for r in [0.25, 0.5, 0.9] {
        let s = slice(&y, &center, r)?;
        let direct = slice_by_restriction(&y, &center, r)?;
        println!(
            "slice r={r}: {} atoms, mass {:.3}, agrees with the restriction formula to {:.1e}",
            s.measure().len(),
            s.mass(),
            s.measure().max_abs_diff(&direct)
        );
    }

    let good = good_slice_radius(&[y.clone()], &center, &p(0.0, 0.0), 0.4, 1.5, &alpha)?;
    println!("good slice radius in (0.4, 0.6): {:.6} (exceptions: {:?})", good.radius, good.exceptions);
    Ok(())
}
