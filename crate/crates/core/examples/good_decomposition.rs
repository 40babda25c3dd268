//! Path decompositions of acyclic flows, cycle cancellation, and the
//! combined multiplicity that exposes cancellations between cell groups.
//!
//! Run: cargo run --example good_decomposition

use branchpath::currents::{boundary, mass};
use branchpath::decomposition::{
    combined_multiplicity_mass, current_of, good_decomposition, is_acyclic, partition_by_cells,
    remove_cycles,
};
use branchpath::{CostSpec, Cube, Edge, Point, PolyhedralCurrent};

fn p(x: f64, y: f64) -> Point {
    Point::from([x, y])
}

fn main() -> branchpath::Result<()> {
    let y = PolyhedralCurrent::new(vec![
        Edge::new(p(0.0, 0.0), p(1.0, 0.0), 1.0),
        Edge::new(p(1.0, 0.0), p(2.0, 1.0), 0.5),
        Edge::new(p(1.0, 0.0), p(2.0, -1.0), 0.5),
    ])?;
    let d = good_decomposition(&y)?;
    for path in &d.paths {
        println!("path w={:.2} through {} vertices, length {:.4}", path.weight(), path.vertices().len(), path.length());
    }
    println!(
        "M(T) = {:.6}, sum w*len = {:.6}; M(dT) = {:.3}, 2 * total weight = {:.3}",
        mass(&y),
        d.weighted_length(),
        boundary(&y).total_variation(),
        2.0 * d.total_weight()
    );
    println!("round trip exact: {}", current_of(&d).approx_eq(&y, 1e-12));

    // a flow with a circulation: a loop sharing one side with the trunk is
    // cancelled first
    let with_loop = y.add(&PolyhedralCurrent::polyline(
        &[p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0), p(0.0, 0.0)],
        0.25,
    )?);
    println!("with loop: acyclic = {}", is_acyclic(&with_loop));
    let cleaned = remove_cycles(&with_loop);
    println!(
        "after removing cycles: acyclic = {}, mass {:.4} -> {:.4}, boundary unchanged = {}",
        is_acyclic(&cleaned),
        mass(&with_loop),
        mass(&cleaned),
        boundary(&cleaned).approx_eq(&boundary(&with_loop), 1e-12)
    );

    // two opposite paths through the same segment, grouped in different
    // cells: the sum cancels, the combined multiplicity does not
    let a = PolyhedralCurrent::polyline(&[p(0.1, 0.1), p(0.3, 0.3), p(0.9, 0.9)], 1.0)?;
    let b = PolyhedralCurrent::polyline(&[p(0.7, 0.1), p(0.9, 0.9), p(0.3, 0.3), p(0.1, 0.7)], 1.0)?;
    let mut paths = good_decomposition(&a)?.paths;
    paths.extend(good_decomposition(&b)?.paths);
    let grid = Cube::unit(2).subdivide(1)?;
    let part = partition_by_cells(&branchpath::decomposition::PathDecomposition::new(paths), &grid)?;
    println!(
        "{} cell groups; mass of the sum {:.4}, combined-multiplicity mass {:.4}",
        part.parts.len(),
        mass(&part.total()),
        combined_multiplicity_mass(&part, &CostSpec::power(1.0)?)
    );
    Ok(())
}
