//! Stability runs: for α-masses the limit candidate is optimal and the
//! paths converge in flat norm; the size cost fails the same test.
//!
//! Run: cargo run --release --example stability

use branchpath::lab::{run_stability, ExperimentConfig, Family};
use branchpath::{CostSpec, Cube, Point, SignedAtomicMeasure};

fn report(label: &str, config: &ExperimentConfig) -> branchpath::Result<()> {
    let r = run_stability(config)?;
    println!("{label} [{}]: limit {:.6} vs optimum {:.6}", r.cost, r.limit_energy, r.limit_optimum);
    for row in &r.rows {
        println!(
            "  n={:>2} energy {:.6} |E - W| {:.2e} flat {:.5} W1 {:.5}",
            row.n, row.energy, row.energy_deviation, row.flat_distance, row.w1_marginals
        );
    }
    println!("  -> {}", if r.pass { "PASS" } else { "FAIL" });
    Ok(())
}

fn main() -> branchpath::Result<()> {
    report(
        "counterexample family",
        &ExperimentConfig { cost: Some(CostSpec::power(0.75)?), ..Default::default() },
    )?;
    report(
        "counterexample family",
        &ExperimentConfig { cost: Some(CostSpec::Size), tolerance: Some(1e-6), ..Default::default() },
    )?;
    let family = Family::Perturbed {
        mu_minus: SignedAtomicMeasure::from_atoms([(Point::from([0.0, 0.0]), 0.5), (Point::from([0.0, 1.0]), 0.5)])?,
        mu_plus: SignedAtomicMeasure::dirac(Point::from([1.0, 0.5]), 1.0),
        domain: Cube::new(Point::from([0.5, 0.5]), 2.0)?,
        amplitude: 0.2,
        seed: 7,
    };
    report(
        "perturbed two-to-one",
        &ExperimentConfig { cost: Some(CostSpec::power(1.0)?), family: family.clone(), ..Default::default() },
    )?;
    report(
        "perturbed two-to-one",
        &ExperimentConfig { cost: Some(CostSpec::power(0.5)?), family, ..Default::default() },
    )
}
