//! Dyadic connections between nearby measures: as the measures approach
//! each other, the connection at a matching level gets cheap, and the
//! certified bound always holds.
//!
//! Run: cargo run --release --example connect_measures

use branchpath::connector::connect;
use branchpath::currents::boundary;
use branchpath::geometry::shift_grid_avoiding;
use branchpath::measures::{h_mass_measure, w1_distance};
use branchpath::{CostSpec, Cube, Point, SignedAtomicMeasure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0;

fn main() -> branchpath::Result<()> {
    let alpha = CostSpec::power(0.5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let base: Vec<Point> = (0..4).map(|_| Point::from([rng.gen::<f64>(), rng.gen::<f64>()])).collect();
    let dirs: Vec<Point> = (0..4)
        .map(|_| {
            let t = rng.gen::<f64>() * std::f64::consts::TAU;
            Point::from([t.cos(), t.sin()])
        })
        .collect();
    let mu = SignedAtomicMeasure::from_atoms(base.iter().map(|x| (x.clone(), 0.25)))?;
    let family: Vec<SignedAtomicMeasure> = (1..=8)
        .map(|m| {
            let step = 4f64.powi(-m);
            SignedAtomicMeasure::from_atoms(base.iter().zip(&dirs).map(|(x, u)| (x.add(&u.scale(step)), 0.25)))
        })
        .collect::<Result<_, _>>()?;

    // one cube whose level-8 skeleton misses every atom of the family
    let mut atoms = mu.points();
    for nu in &family {
        atoms.extend(nu.points());
    }
    let q = shift_grid_avoiding(&Cube::unit(2), &atoms, 8)?;
    println!("root cube: center {:?}, edge {}", q.center.coords(), q.edge);
    println!("H-mass(mu) = {:.3}", h_mass_measure(&mu, &alpha));

    println!("{:>2} {:>12} {:>12} {:>12} {:>8}", "m", "W1", "energy", "bound", "exact");
    for (i, nu) in family.iter().enumerate() {
        let m = i as u32 + 1;
        let r = connect(&mu, nu, &q, m, &alpha)?;
        let exact = boundary(&r.current).approx_eq(&mu.sub(nu), 1e-12);
        println!(
            "{m:>2} {:>12.3e} {:>12.6} {:>12.6} {:>8}",
            w1_distance(&mu, nu)?,
            r.energy(&alpha),
            r.bound,
            exact
        );
    }
    Ok(())
}
