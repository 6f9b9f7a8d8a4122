//! Exhaustive search on tiny instances, next to the main algorithm and the
//! per-coflow lower bound.
//!
//!     cargo run --release --example oracle_comparison [instances]

use coflow_ocs::oracle::{self, DEFAULT_MAX_FLOWS};

fn main() -> anyhow::Result<()> {
    let count: u64 = std::env::args().nth(1).map_or(Ok(50), |s| s.parse())?;
    let mut worst = (1.0, 0);
    println!("{:>5} {:>5} {:>10} {:>10} {:>10} {:>8}", "seed", "flows", "lb", "oracle", "ours", "ratio");
    for seed in 0..count {
        let w = oracle::tiny_workload(seed, DEFAULT_MAX_FLOWS, 3)?;
        let c = oracle::compare(&w, DEFAULT_MAX_FLOWS)?;
        let ratio = c.algorithm_over_oracle();
        if ratio > worst.0 {
            worst = (ratio, seed);
        }
        println!(
            "{seed:>5} {:>5} {:>10.3} {:>10.3} {:>10.3} {ratio:>8.4}",
            c.flows, c.lb_total, c.oracle_total, c.algorithm_total
        );
    }
    println!("worst algorithm/oracle ratio {:.4} (seed {})", worst.0, worst.1);
    Ok(())
}
