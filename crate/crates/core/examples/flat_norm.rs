//! Simplicial flat norm: filling two opposite segments, and the decay of
//! the flat distance along the size counterexample.
//!
//! Run: cargo run --release --example flat_norm

use branchpath::flatnorm::{flat_norm, rasterize, TriComplex};
use branchpath::{Cube, Point, PolyhedralCurrent};

fn p(x: f64, y: f64) -> Point {
    Point::from([x, y])
}

fn main() -> branchpath::Result<()> {
    // two unit segments at distance 1/4 with opposite orientations: filling
    // the rectangle costs area + two short sides = 3/4 instead of mass 2
    let h_sep = 0.25;
    let c = TriComplex::new(&Cube::from_corner(&p(-0.5, -0.5), 2.0)?, h_sep / 4.0)?;
    let t = PolyhedralCurrent::segment(p(0.0, 0.0), p(1.0, 0.0), 1.0)?
        .add(&PolyhedralCurrent::segment(p(1.0, h_sep), p(0.0, h_sep), 1.0)?);
    let chain = rasterize(&t, &c)?;
    let f = flat_norm(&chain, &c)?;
    let filled = f.s.iter().filter(|s| s.abs() > 1e-9).count();
    println!(
        "parallel segments: mass {:.4}, flat norm {:.6} ({} triangles filled, residual {:.1e})",
        chain.mass(&c),
        f.value,
        filled,
        f.residual(&chain, &c)
    );

    // T_n − T = −(1/n) [p, e1] for the size counterexample
    let mesh = 1.0 / 64.0;
    let gamma2 = PolyhedralCurrent::segment(p(0.5, 0.125), p(1.0, 0.0), 1.0)?;
    let c = TriComplex::covering(&[&gamma2], mesh, 0.125)?;
    let base = rasterize(&gamma2, &c)?;
    for n in [2u32, 4, 8, 16] {
        let f = flat_norm(&base.scale(-1.0 / n as f64), &c)?;
        println!("n = {n:>2}: F(T_n - T) = {:.6}", f.value);
    }
    Ok(())
}
