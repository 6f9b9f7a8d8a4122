//! Main algorithm against the load-only and random assignment baselines.
//!
//!     cargo run --release --example ablation [seeds]

use coflow_ocs::baselines::{run_baseline, BaselineKind};
use coflow_ocs::metrics::{norm_w, tail_cct};
use coflow_ocs::model::NetworkConfig;
use coflow_ocs::scheduler;
use coflow_ocs::workload::{synth_workload, SynthParams, WeightModel};

fn main() -> anyhow::Result<()> {
    let seeds: u64 = std::env::args().nth(1).map_or(Ok(20), |s| s.parse())?;
    let config = NetworkConfig::ocs(16, vec![10.0, 20.0, 30.0], 8.0)?;
    let params = SynthParams::default();
    let mut norm = [Vec::new(), Vec::new()];
    println!("{:>5} {:>12} {:>9} {:>9} {:>10}", "seed", "ours", "rho", "rand", "ours p99");
    for seed in 0..seeds {
        let w = synth_workload(&config, &params, WeightModel::default(), seed)?;
        let ours = scheduler::run(&w)?;
        let rho = run_baseline(BaselineKind::RhoAssign, &w, None)?;
        let rand = run_baseline(BaselineKind::RandAssign, &w, Some(seed))?;
        let base = ours.total_weighted_cct();
        let r = norm_w(rho.total_weighted_cct(), base)?;
        let q = norm_w(rand.total_weighted_cct(), base)?;
        let p99 = tail_cct(&ours.schedule.completion_times()?, 99.0)?;
        println!("{seed:>5} {base:>12.1} {r:>9.3} {q:>9.3} {p99:>10.2}");
        norm[0].push(r);
        norm[1].push(q);
    }
    for (name, v) in ["rho", "rand"].iter().zip(&mut norm) {
        v.sort_by(f64::total_cmp);
        println!("median NormW {name}: {:.3}", v[v.len() / 2]);
    }
    Ok(())
}
