//! Optimal traffic paths of small instances: branching appears as the cost
//! gets more concave, and the brute-force oracle agrees with the solver.
//!
//! Run: cargo run --release --example solve_steiner

use branchpath::solver::{enumerate_topologies, oracle_small, solve, TransportInstance};
use branchpath::{CostSpec, Cube, Point, SignedAtomicMeasure};

fn p(x: f64, y: f64) -> Point {
    Point::from([x, y])
}

fn main() -> branchpath::Result<()> {
    let sources = SignedAtomicMeasure::from_atoms([(p(-0.5, 1.0), 0.5), (p(0.5, 1.0), 0.5)])?;
    let sink = SignedAtomicMeasure::dirac(p(0.0, 0.0), 1.0);
    let domain = Cube::new(p(0.0, 0.5), 3.0)?;

    println!("{:>5} {:>10} {:>10} {:>8} {}", "alpha", "energy", "oracle", "steiner", "branch point");
    for alpha in [1.0, 0.9, 0.75, 0.5, 0.25, 0.1] {
        let inst = TransportInstance::new(2, CostSpec::power(alpha)?, sources.clone(), sink.clone(), domain.clone(), 1)?;
        let s = solve(&inst, 1)?;
        let oracle = oracle_small(&inst, 1e-3)?;
        let branch = s.positions.get(3).map(|b| format!("{:.4?}", b.coords())).unwrap_or_default();
        println!("{alpha:>5} {:>10.6} {:>10.6} {:>8} {branch}", s.energy, oracle, s.topology.steiner);
    }

    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/counterexample_n4.json"))?;
    let ce: TransportInstance = serde_json::from_str(&text)?;
    let tops = enumerate_topologies(&ce, 2)?;
    let s = solve(&ce, 2)?;
    println!(
        "\nsize counterexample n=4: {} topologies, energy {:.10} (sqrt(17)/4 = {:.10}), {:?}",
        tops.len(),
        s.energy,
        17f64.sqrt() / 4.0,
        s.optimality
    );
    for e in s.current.edges() {
        println!("  {:?} -> {:?}  theta {:.2}", e.a.coords(), e.b.coords(), e.theta);
    }
    Ok(())
}
