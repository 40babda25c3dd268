//! Dyadic connection costs of the uniform measure: the level ratio is
//! 2^{d(1-α)-1}, summable exactly above the threshold α = 1 - 1/d.
//!
//! Run: cargo run --release --example alpha_threshold

use branchpath::lab::run_threshold;

fn main() -> branchpath::Result<()> {
    for (d, kmax, alphas) in [(2, 8, vec![0.3, 0.4, 0.5, 0.6, 0.75, 0.9]), (3, 5, vec![0.5, 2.0 / 3.0, 0.8])] {
        let r = run_threshold(&alphas, d, kmax)?;
        println!("d = {d}, kmax = {kmax}");
        for row in &r.rows {
            println!(
                "  alpha {:.3}: ratio {:.6} (predicted {:.6}) -> {}",
                row.alpha,
                row.empirical_ratio,
                row.predicted_ratio,
                if row.summable { "summable" } else { "diverging" }
            );
        }
    }
    Ok(())
}
