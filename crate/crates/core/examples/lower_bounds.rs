//! Lower bounds and the prefix audit for one instance.
//!
//!     cargo run --example lower_bounds

use coflow_ocs::bounds::{gamma_w, global_lb, per_core_lb, relaxed_global_lb_floor};
use coflow_ocs::model::{DemandMatrix, NetworkConfig};
use coflow_ocs::scheduler;
use coflow_ocs::workload::{synth_workload, SynthParams, WeightModel};

fn main() -> anyhow::Result<()> {
    let d = DemandMatrix::from_rows(vec![vec![4.0, 2.0], vec![0.0, 6.0]])?;
    let config = NetworkConfig::ocs(2, vec![1.0, 2.0], 1.0)?;
    println!("rho = {}, tau = {}", d.rho(), d.tau());
    for (k, &r) in config.rates().iter().enumerate() {
        println!("core {} alone: {}", k + 1, per_core_lb(&d, r, config.delta())?);
    }
    println!("global: {}", global_lb(&d, &config)?);
    println!("relaxed floor (psi = 2): {}", relaxed_global_lb_floor(&d, &config, 2.0)?);
    println!("gamma_w(1, 1, 1, 5) = {}", gamma_w(&[1.0, 1.0, 1.0, 5.0])?);

    let config = NetworkConfig::ocs(8, vec![10.0, 20.0, 30.0], 8.0)?;
    let params = SynthParams { coflows: 8, ..SynthParams::default() };
    let w = synth_workload(&config, &params, WeightModel::default(), 1)?;
    let out = scheduler::run(&w)?;
    println!("\n{:>3} {:>9} {:>12} {:>10} {:>10}", "pos", "T_LB", "max_k prefix", "assign", "T");
    for p in &out.audit.prefixes {
        println!(
            "{:>3} {:>9.3} {:>12.3} {:>10.3} {:>10.3}",
            p.position, p.global_lb, p.max_core_lb, p.assignment_bound, p.completion
        );
    }
    let c = &out.audit.checks;
    println!("\nexcess (lhs - rhs; <= 0 means the inequality holds)");
    println!("  T >= T_LB:                      {:.3}", c.global_lb.excess);
    println!("  prefix assignment:              {:.3}", c.assignment_prefix.map_or(f64::NAN, |x| x.excess));
    println!("  T <= 2 max_k prefix bound:      {:.3}", c.scheduling_prefix.excess);
    println!("  weight-ratio aggregate:         {:.3}", c.weight_ratio_bound.map_or(f64::NAN, |x| x.excess));
    println!("  concentration aggregate:        {:.3}", c.concentration_bound.map_or(f64::NAN, |x| x.excess));
    Ok(())
}
