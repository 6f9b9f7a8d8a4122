//! Exhaustive reference for desk-sized instances.
//!
//! Enumerates every flow-to-core assignment and, for each, every priority
//! order of the flows on each core, building each schedule with its own
//! straightforward event loop (kept independent of
//! [`crate::scheduler::schedule_core`]). Only active list schedules are
//! searched, so the result is an upper bound on the optimum, not the optimum.

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::bounds::{self, BoundsError};
use crate::model::{
    CircuitEvent, CoflowSpec, DemandMatrix, FlowAssignment, ModelError, NetworkConfig,
    Schedule, Workload,
};
use crate::rng::{self, Purpose};
use crate::scheduler::{self, CoflowFlow, SchedulerError};

pub const DEFAULT_MAX_FLOWS: usize = 6;
pub const MAX_CORES: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(
        "instance too large for exhaustive search: {flows} flows on {cores} cores \
         (limits: at most {max_flows} flows and {max_cores} cores)"
    )]
    TooLarge {
        flows: usize,
        cores: usize,
        max_flows: usize,
        max_cores: usize,
    },
    #[error("workload has no coflows")]
    EmptyWorkload,
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub best_total: f64,
    /// Flows in the witness priority order, core by core.
    pub witness_order: Vec<CoflowFlow>,
    /// Core of each entry of `witness_order`.
    pub witness_cores: Vec<usize>,
    pub assignment: FlowAssignment,
    pub schedule: Schedule,
}

/// Literal list-scheduling loop: scan all pending flows in order at the
/// current time, start those with both ports free, then jump to the next
/// port release.
pub fn simulate_list(flows: &[CoflowFlow], core: usize, rate: f64, delta: f64) -> Vec<CircuitEvent> {
    let n = flows
        .iter()
        .map(|f| f.flow.ingress.max(f.flow.egress) + 1)
        .max()
        .unwrap_or(0);
    let mut ingress_busy = vec![0.0_f64; n];
    let mut egress_busy = vec![0.0_f64; n];
    let mut done = vec![false; flows.len()];
    let mut remaining = flows.len();
    let mut events = Vec::with_capacity(flows.len());
    let mut t = 0.0_f64;
    while remaining > 0 {
        for (idx, cf) in flows.iter().enumerate() {
            if done[idx] {
                continue;
            }
            let (i, j) = (cf.flow.ingress, cf.flow.egress);
            if ingress_busy[i] <= t && egress_busy[j] <= t {
                let finish = t + delta + cf.flow.size / rate;
                ingress_busy[i] = finish;
                egress_busy[j] = finish;
                done[idx] = true;
                remaining -= 1;
                events.push(CircuitEvent {
                    coflow: cf.coflow,
                    core,
                    ingress: i,
                    egress: j,
                    establish: t,
                    start: t + delta,
                    finish,
                    size: cf.flow.size,
                });
            }
        }
        t = ingress_busy
            .iter()
            .chain(&egress_busy)
            .copied()
            .filter(|&b| b > t)
            .fold(f64::INFINITY, f64::min);
    }
    events
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let Some(i) = (0..p.len() - 1).rev().find(|&i| p[i] < p[i + 1]) else {
        return false;
    };
    let j = (i + 1..p.len()).rev().find(|&j| p[j] > p[i]).unwrap();
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

fn all_permutations(len: usize) -> Vec<Vec<usize>> {
    let mut p: Vec<usize> = (0..len).collect();
    let mut out = vec![p.clone()];
    while next_permutation(&mut p) {
        out.push(p.clone());
    }
    out
}

fn weighted_total(weights: &[f64], completions: &[f64]) -> f64 {
    weights.iter().zip(completions).map(|(w, t)| w * t).sum()
}

/// Searches all assignments and per-core orders. Refuses instances with
/// more than `max_flows` flows or more than [`MAX_CORES`] cores.
pub fn best_list_schedule(workload: &Workload, max_flows: usize) -> Result<OracleResult, OracleError> {
    if workload.is_empty() {
        return Err(OracleError::EmptyWorkload);
    }
    let config = workload.config();
    let k = config.num_cores();
    let flows: Vec<CoflowFlow> = workload
        .coflows()
        .iter()
        .enumerate()
        .flat_map(|(coflow, c)| c.demand.flows().map(move |flow| CoflowFlow { coflow, flow }))
        .collect();
    let f = flows.len();
    if f > max_flows || k > MAX_CORES {
        return Err(OracleError::TooLarge {
            flows: f,
            cores: k,
            max_flows,
            max_cores: MAX_CORES,
        });
    }
    let weights = workload.weights();
    let m = workload.len();
    let perms: Vec<Vec<Vec<usize>>> = (0..=f).map(all_permutations).collect();
    let assignments = k.pow(f as u32);

    // per assignment: (total, assignment index, per-core permutation choice)
    let best = (0..assignments)
        .into_par_iter()
        .map(|code| {
            let cores = decode(code, k, f);
            let members: Vec<Vec<usize>> = (0..k)
                .map(|core| (0..f).filter(|&x| cores[x] == core).collect())
                .collect();
            // completion per coflow on each core, for each permutation
            let per_core: Vec<Vec<Vec<f64>>> = members
                .iter()
                .enumerate()
                .map(|(core, list)| {
                    perms[list.len()]
                        .iter()
                        .map(|p| {
                            let ordered: Vec<CoflowFlow> = p.iter().map(|&x| flows[list[x]]).collect();
                            let mut t = vec![0.0; m];
                            for e in simulate_list(&ordered, core, config.rate(core), config.delta()) {
                                t[e.coflow] = f64::max(t[e.coflow], e.finish);
                            }
                            t
                        })
                        .collect()
                })
                .collect();
            let mut choice = vec![0usize; k];
            let mut best: Option<(f64, Vec<usize>)> = None;
            loop {
                let completions: Vec<f64> = (0..m)
                    .map(|c| (0..k).map(|core| per_core[core][choice[core]][c]).fold(0.0, f64::max))
                    .collect();
                let total = weighted_total(&weights, &completions);
                if best.as_ref().map_or(true, |(b, _)| total < *b) {
                    best = Some((total, choice.clone()));
                }
                // odometer over per-core permutation indices
                let mut pos = k;
                loop {
                    if pos == 0 {
                        break;
                    }
                    pos -= 1;
                    choice[pos] += 1;
                    if choice[pos] < per_core[pos].len() {
                        break;
                    }
                    choice[pos] = 0;
                    if pos == 0 {
                        pos = usize::MAX;
                        break;
                    }
                }
                if pos == usize::MAX {
                    break;
                }
            }
            let (total, choice) = best.expect("at least one permutation per core");
            (total, code, choice)
        })
        .reduce_with(|a, b| match a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)) {
            std::cmp::Ordering::Greater => b,
            _ => a,
        })
        .expect("at least one assignment");

    let (best_total, code, choice) = best;
    let cores = decode(code, k, f);
    let mut witness_order = Vec::with_capacity(f);
    let mut witness_cores = Vec::with_capacity(f);
    let mut assignment = FlowAssignment::empty(m, k, config.n());
    let mut events = Vec::with_capacity(f);
    for core in 0..k {
        let list: Vec<usize> = (0..f).filter(|&x| cores[x] == core).collect();
        let ordered: Vec<CoflowFlow> = perms[list.len()][choice[core]].iter().map(|&x| flows[list[x]]).collect();
        for cf in &ordered {
            assignment.place(cf.coflow, core, cf.flow);
            witness_cores.push(core);
        }
        events.extend(simulate_list(&ordered, core, config.rate(core), config.delta()));
        witness_order.extend(ordered);
    }
    Ok(OracleResult {
        best_total,
        witness_order,
        witness_cores,
        assignment,
        schedule: Schedule::new(m, events),
    })
}

fn decode(mut code: usize, k: usize, f: usize) -> Vec<usize> {
    // most significant digit first, so increasing codes are lexicographic
    let mut digits = vec![0; f];
    for slot in digits.iter_mut().rev() {
        *slot = code % k;
        code /= k;
    }
    digits
}

/// Re-simulates an oracle witness through the production scheduler.
pub fn replay_witness(workload: &Workload, result: &OracleResult) -> Result<f64, OracleError> {
    let config = workload.config();
    let mut events = Vec::new();
    for core in 0..config.num_cores() {
        let flows: Vec<CoflowFlow> = result
            .witness_order
            .iter()
            .zip(&result.witness_cores)
            .filter(|(_, &c)| c == core)
            .map(|(f, _)| *f)
            .collect();
        events.extend(scheduler::schedule_core(&flows, core, config.rate(core), config.delta()));
    }
    let completions = Schedule::new(workload.len(), events).completion_times()?;
    Ok(weighted_total(&workload.weights(), &completions))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub flows: usize,
    pub algorithm_total: f64,
    pub oracle_total: f64,
    /// `sum_m w_m T_LB(D_m)`.
    pub lb_total: f64,
}

impl OracleComparison {
    pub fn algorithm_over_oracle(&self) -> f64 {
        self.algorithm_total / self.oracle_total
    }

    pub fn oracle_over_lb(&self) -> f64 {
        self.oracle_total / self.lb_total
    }
}

pub fn compare(workload: &Workload, max_flows: usize) -> Result<OracleComparison, OracleError> {
    let oracle = best_list_schedule(workload, max_flows)?;
    let algorithm = scheduler::run(workload)?;
    let config = workload.config();
    let lb_total = workload
        .coflows()
        .iter()
        .map(|c| Ok(c.weight * bounds::global_lb(&c.demand, config)?))
        .sum::<Result<f64, BoundsError>>()?;
    Ok(OracleComparison {
        flows: workload.total_flows(),
        algorithm_total: algorithm.total_weighted_cct(),
        oracle_total: oracle.best_total,
        lb_total,
    })
}

/// A random instance small enough for [`best_list_schedule`] on a random
/// fabric: 2 to 4 ports, 1 to 3 cores with rates from `{1, 2, 3, 5}`, delta
/// in `{0, 1, 8}`. See [`tiny_workload_on`] for the demands.
pub fn tiny_workload(seed: u64, max_flows: usize, max_coflows: usize) -> Result<Workload, OracleError> {
    let mut rng = rng::stream(seed, Purpose::TinyInstances);
    let n = rng.random_range(2..=4usize);
    let k = rng.random_range(1..=MAX_CORES);
    let rates: Vec<f64> = (0..k).map(|_| [1.0, 2.0, 3.0, 5.0][rng.random_range(0..4)]).collect();
    let delta = [0.0, 1.0, 8.0][rng.random_range(0..3)];
    let config = NetworkConfig::ocs(n, rates, delta)?;
    tiny_demands(config, &mut rng, max_flows, max_coflows)
}

/// Random demands on a given fabric: at most `max_flows` flows over at most
/// `max_coflows` coflows, integral sizes in `[1, 20]`, weights in `[0.5, 5)`.
pub fn tiny_workload_on(
    config: &NetworkConfig,
    seed: u64,
    max_flows: usize,
    max_coflows: usize,
) -> Result<Workload, OracleError> {
    let mut rng = rng::stream(seed, Purpose::TinyInstances);
    tiny_demands(config.clone(), &mut rng, max_flows, max_coflows)
}

fn tiny_demands(
    config: NetworkConfig,
    rng: &mut impl Rng,
    max_flows: usize,
    max_coflows: usize,
) -> Result<Workload, OracleError> {
    let n = config.n();
    let flows = rng.random_range(1..=max_flows.max(1));
    let coflows = rng.random_range(1..=max_coflows.max(1).min(flows));
    let mut demands = vec![DemandMatrix::zeros(n)?; coflows];
    for f in 0..flows {
        // every coflow gets at least one flow
        let c = if f < coflows { f } else { rng.random_range(0..coflows) };
        if demands[c].flow_count() == n * n {
            continue;
        }
        loop {
            let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
            if demands[c].get(i, j) == 0.0 {
                let size = rng.random_range(1.0..20.0_f64).round();
                demands[c] = demands[c].add_entry(i, j, size)?;
                break;
            }
        }
    }
    let specs = demands
        .into_iter()
        .enumerate()
        .map(|(c, d)| CoflowSpec::new(c as u64 + 1, rng.random_range(0.5..5.0_f64), d))
        .collect();
    Ok(Workload::new(config, specs)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::verify_schedule;

    fn single(n: usize, i: usize, j: usize, size: f64) -> DemandMatrix {
        DemandMatrix::zeros(n).unwrap().add_entry(i, j, size).unwrap()
    }

    #[test]
    fn single_flow_picks_fast_core() {
        let cfg = NetworkConfig::ocs(1, vec![1.0, 2.0], 1.0).unwrap();
        let w = Workload::new(cfg, vec![CoflowSpec::new(1, 2.0, single(1, 0, 0, 4.0))]).unwrap();
        let r = best_list_schedule(&w, DEFAULT_MAX_FLOWS).unwrap();
        assert_eq!(r.best_total, 2.0 * 3.0);
        assert_eq!(r.witness_cores, vec![1]);
    }

    #[test]
    fn two_orders_on_shared_ingress() {
        let cfg = NetworkConfig::ocs(2, vec![1.0], 1.0).unwrap();
        let w = Workload::new(
            cfg,
            vec![
                CoflowSpec::new(1, 1.0, single(2, 0, 0, 2.0)),
                CoflowSpec::new(2, 1.0, single(2, 0, 1, 3.0)),
            ],
        )
        .unwrap();
        let r = best_list_schedule(&w, DEFAULT_MAX_FLOWS).unwrap();
        assert_eq!(r.best_total, 10.0);
        assert!(verify_schedule(&r.schedule, &r.assignment, &w).unwrap().is_clean());
        assert_eq!(replay_witness(&w, &r).unwrap(), r.best_total);
    }

    #[test]
    fn refuses_large_instances() {
        let cfg = NetworkConfig::ocs(3, vec![1.0], 1.0).unwrap();
        let d = DemandMatrix::from_rows(vec![vec![1.0; 3]; 3]).unwrap();
        let w = Workload::new(cfg, vec![CoflowSpec::new(1, 1.0, d)]).unwrap();
        assert!(matches!(
            best_list_schedule(&w, DEFAULT_MAX_FLOWS),
            Err(OracleError::TooLarge { flows: 9, .. })
        ));
        let cfg = NetworkConfig::ocs(2, vec![1.0; 4], 1.0).unwrap();
        let w = Workload::new(cfg, vec![CoflowSpec::new(1, 1.0, single(2, 0, 0, 1.0))]).unwrap();
        assert!(matches!(best_list_schedule(&w, 6), Err(OracleError::TooLarge { cores: 4, .. })));
    }

    #[test]
    fn permutations_are_complete() {
        assert_eq!(all_permutations(0).len(), 1);
        assert_eq!(all_permutations(3).len(), 6);
        assert_eq!(all_permutations(5).len(), 120);
        assert_eq!(decode(5, 2, 3), vec![1, 0, 1]);
    }

    #[test]
    fn sandwich_on_tiny_instances() {
        for seed in 0..25 {
            let w = tiny_workload(seed, 5, 3).unwrap();
            let c = compare(&w, DEFAULT_MAX_FLOWS).unwrap();
            assert!(c.lb_total <= c.oracle_total + 1e-9, "seed {seed}: {c:?}");
            assert!(c.oracle_total <= c.algorithm_total + 1e-9, "seed {seed}: {c:?}");
        }
    }

    mod props {
        use super::*;
        use crate::model::Flow;
        use proptest::prelude::*;

        fn flow(ingress: usize, egress: usize, size: f64) -> Flow {
            Flow { ingress, egress, size }
        }

        fn flow_list() -> impl Strategy<Value = Vec<CoflowFlow>> {
            prop::collection::vec((0usize..4, 0usize..5, 0usize..5, 1u32..40), 0..40).prop_map(|v| {
                v.into_iter()
                    .map(|(coflow, i, j, s)| CoflowFlow { coflow, flow: flow(i, j, s as f64 / 2.0) })
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn literal_loop_matches_production_scheduler(
                flows in flow_list(),
                rate in prop_oneof![Just(1.0), Just(3.0), Just(7.5)],
                delta in prop_oneof![Just(0.0), Just(1.0), Just(8.0)],
            ) {
                let mut a = simulate_list(&flows, 0, rate, delta);
                let mut b = scheduler::schedule_core(&flows, 0, rate, delta);
                let key = |e: &CircuitEvent| (e.establish.to_bits(), e.ingress, e.egress, e.coflow);
                a.sort_by_key(key);
                b.sort_by_key(key);
                prop_assert_eq!(a, b);
            }
        }
    }
}
