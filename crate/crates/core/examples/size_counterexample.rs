//! The size functional is not stable: every instance of the family has
//! optimal energy sqrt(17)/4, the instances converge, yet the limit current
//! loses to a unit segment.
//!
//! Run: cargo run --release --example size_counterexample

use branchpath::lab::run_counterexample;

fn main() -> branchpath::Result<()> {
    let r = run_counterexample(&[2, 4, 8, 16])?;
    println!("{:>3} {:>12} {:>10} {:>10}", "n", "W^H", "flat", "W1");
    for row in &r.stability.rows {
        println!("{:>3} {:>12.9} {:>10.6} {:>10.6}", row.n, row.optimal, row.flat_distance, row.w1_marginals);
    }
    println!("limit current energy {:.9}", r.stability.limit_energy);
    println!("segment energy       {:.9}", r.segment_energy);
    println!("gap                  {:.9}", r.stability.gap);
    println!("stability: {}", if r.pass() { "PASS" } else { "FAIL" });
    Ok(())
}
