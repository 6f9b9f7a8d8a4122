//! The packet-switched variant: no reconfiguration delay, same pipeline.
//!
//!     cargo run --example eps_variant

use coflow_ocs::model::NetworkConfig;
use coflow_ocs::scheduler;
use coflow_ocs::workload::{synth_workload, SynthParams, WeightModel};

fn main() -> anyhow::Result<()> {
    let params = SynthParams { coflows: 40, ..SynthParams::default() };
    let weights = WeightModel::Normal { mu: 10.0, sigma: 2.0 };
    let ocs = synth_workload(&NetworkConfig::ocs(16, vec![10.0, 20.0, 30.0], 8.0)?, &params, weights, 3)?;
    let eps = ocs.with_config(NetworkConfig::eps(16, vec![10.0, 20.0, 30.0])?)?;

    let a = scheduler::run(&ocs)?;
    let b = scheduler::run_eps(&eps)?;
    println!("OCS total weighted CCT {:.2}", a.total_weighted_cct());
    println!("EPS total weighted CCT {:.2}", b.total_weighted_cct());
    let c = &b.audit.checks;
    println!("EPS prefix check excess     {:.3}", c.eps_prefix.map_or(f64::NAN, |x| x.excess));
    println!("EPS aggregate check excess  {:.3}", c.eps_weight_ratio_bound.map_or(f64::NAN, |x| x.excess));
    println!("EPS sum w T / aggregate RHS {:.4}", b.audit.theorem_bound_ratio());
    Ok(())
}
