//! Reconfiguration-delay sweep through the experiment runner, writing
//! `results.csv` and `report.json` to a temporary directory.
//!
//!     cargo run --release --example delta_sweep

use coflow_ocs::experiment::{cmd_run, ExperimentConfig, Seeds, Sweep, SweepAxis};

fn main() -> anyhow::Result<()> {
    let out = std::env::temp_dir().join("coflow-delta-sweep");
    let config = ExperimentConfig {
        seeds: Seeds::Range { start: 0, count: 5 },
        sweep: Some(Sweep { axis: SweepAxis::Delta, values: vec![2.0, 4.0, 6.0, 8.0, 10.0, 12.0] }),
        output_dir: out.clone(),
        ..ExperimentConfig::default()
    };
    let run = cmd_run(&config)?;
    println!("{:>6} {:>10} {:>10} {:>10}", "delta", "rho", "rand", "ours p95");
    for delta in [2.0, 4.0, 6.0, 8.0, 10.0, 12.0] {
        let rows: Vec<_> = run.rows.iter().filter(|r| r.delta == delta).collect();
        let mean = |alg: &str| {
            let v: Vec<f64> = rows.iter().filter(|r| r.algorithm.to_string() == alg).map(|r| r.norm_w).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let p95 = rows.iter().filter(|r| r.algorithm.to_string() == "ours").map(|r| r.p95_cct).sum::<f64>() / 5.0;
        println!("{delta:>6} {:>10.3} {:>10.3} {p95:>10.2}", mean("rho"), mean("rand"));
    }
    println!("reports in {}", out.display());
    Ok(())
}
