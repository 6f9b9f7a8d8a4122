//! Schedule a small synthetic workload and print per-coflow completion times.
//!
//!     cargo run --example quickstart

use coflow_ocs::model::{verify_schedule, NetworkConfig};
use coflow_ocs::scheduler;
use coflow_ocs::workload::{synth_workload, SynthParams, WeightModel};

fn main() -> anyhow::Result<()> {
    let config = NetworkConfig::ocs(8, vec![10.0, 20.0, 30.0], 8.0)?;
    let params = SynthParams { coflows: 12, ..SynthParams::default() };
    let workload = synth_workload(&config, &params, WeightModel::default(), 42)?;

    let out = scheduler::run(&workload)?;
    let report = verify_schedule(&out.schedule, &out.assignment, &workload)?;
    println!("feasible: {}", report.is_clean());

    let ccts = out.schedule.completion_times()?;
    println!("{:>4} {:>8} {:>6} {:>10}", "pos", "coflow", "weight", "cct");
    for (pos, &m) in out.order.iter().enumerate() {
        let c = &workload.coflows()[m];
        println!("{pos:>4} {:>8} {:>6.2} {:>10.3}", c.id, c.weight, ccts[m]);
    }
    println!("total weighted CCT {:.3}", out.total_weighted_cct());
    Ok(())
}
