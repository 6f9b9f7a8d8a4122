//! The three-phase scheduling pipeline: global coflow ordering by
//! `w / T_LB`, greedy cross-core flow assignment on the per-core prefix
//! bound, and a work-conserving list scheduler on every core.
//!
//! Every tie is broken deterministically:
//! - coflows with equal score keep their original relative order,
//! - flows inside a coflow go by non-increasing size, then `(ingress, egress)`,
//! - an assignment tie goes to the lowest core index.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap};

use thiserror::Error;

use crate::bounds::{self, port_lb, AuditScope, BoundAudit, BoundsError};
use crate::model::{
    CircuitEvent, DemandMatrix, FabricMode, Flow, FlowAssignment, ModelError, Schedule, Workload,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchedulerError {
    #[error("workload has no coflows")]
    EmptyWorkload,
    #[error("expected a {expected} fabric, workload is configured for {found}")]
    WrongMode { expected: FabricMode, found: FabricMode },
    #[error("order is not a permutation of the workload's coflows")]
    BadOrder,
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerOutput {
    /// Coflow indices in execution order.
    pub order: Vec<usize>,
    pub assignment: FlowAssignment,
    pub schedule: Schedule,
    pub audit: BoundAudit,
}

impl SchedulerOutput {
    pub fn total_weighted_cct(&self) -> f64 {
        self.audit.total_weighted_cct
    }
}

/// A flow tagged with the coflow it belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoflowFlow {
    pub coflow: usize,
    pub flow: Flow,
}

/// Sorts coflows by non-increasing `w_m / T_LB(D_m)`.
pub fn order_coflows(workload: &Workload) -> Result<Vec<usize>, SchedulerError> {
    if workload.is_empty() {
        return Err(SchedulerError::EmptyWorkload);
    }
    let config = workload.config();
    let scores = workload
        .coflows()
        .iter()
        .map(|c| Ok(c.weight / bounds::global_lb(&c.demand, config)?))
        .collect::<Result<Vec<f64>, BoundsError>>()?;
    let mut order: Vec<usize> = (0..workload.len()).collect();
    // stable: equal scores stay in index order
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    Ok(order)
}

fn flow_cmp(a: &Flow, b: &Flow) -> Ordering {
    b.size
        .total_cmp(&a.size)
        .then(a.ingress.cmp(&b.ingress))
        .then(a.egress.cmp(&b.egress))
}

/// Non-zero flows of one coflow, largest first, ties by `(ingress, egress)`.
pub fn coflow_flows(d: &DemandMatrix) -> Vec<Flow> {
    let mut flows: Vec<Flow> = d.flows().collect();
    flows.sort_by(flow_cmp);
    flows
}

/// Every flow of the workload in the total priority order.
pub fn priority_flows(workload: &Workload, order: &[usize]) -> Vec<CoflowFlow> {
    order
        .iter()
        .flat_map(|&coflow| {
            coflow_flows(&workload.coflows()[coflow].demand)
                .into_iter()
                .map(move |flow| CoflowFlow { coflow, flow })
        })
        .collect()
}

pub(crate) fn check_order(workload: &Workload, order: &[usize]) -> Result<(), SchedulerError> {
    let mut seen = vec![false; workload.len()];
    if order.len() != workload.len() {
        return Err(SchedulerError::BadOrder);
    }
    for &c in order {
        if c >= seen.len() || seen[c] {
            return Err(SchedulerError::BadOrder);
        }
        seen[c] = true;
    }
    Ok(())
}

/// Score used to pick a core for the next flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum AssignRule {
    /// Per-core prefix lower bound, including the circuit-count term.
    PrefixBound,
    /// Bottleneck load over rate only.
    LoadOnly,
}

/// Running port loads of the traffic already placed on one core.
struct CoreLoad {
    n: usize,
    rate: f64,
    delta: f64,
    rows: Vec<f64>,
    cols: Vec<f64>,
    row_counts: Vec<usize>,
    col_counts: Vec<usize>,
    occupied: Vec<bool>,
    max_lb: f64,
    max_load: f64,
}

impl CoreLoad {
    fn new(n: usize, rate: f64, delta: f64) -> Self {
        Self {
            n,
            rate,
            delta,
            rows: vec![0.0; n],
            cols: vec![0.0; n],
            row_counts: vec![0; n],
            col_counts: vec![0; n],
            occupied: vec![false; n * n],
            max_lb: 0.0,
            max_load: 0.0,
        }
    }

    fn tentative(&self, f: &Flow, rule: AssignRule) -> f64 {
        let row = self.rows[f.ingress] + f.size;
        let col = self.cols[f.egress] + f.size;
        match rule {
            AssignRule::PrefixBound => {
                let fresh = !self.occupied[f.ingress * self.n + f.egress] as usize;
                let li = port_lb(row, self.row_counts[f.ingress] + fresh, self.rate, self.delta);
                let lj = port_lb(col, self.col_counts[f.egress] + fresh, self.rate, self.delta);
                self.max_lb.max(li).max(lj)
            }
            AssignRule::LoadOnly => self.max_load.max(row).max(col) / self.rate,
        }
    }

    fn place(&mut self, f: &Flow) {
        let slot = f.ingress * self.n + f.egress;
        if !self.occupied[slot] {
            self.occupied[slot] = true;
            self.row_counts[f.ingress] += 1;
            self.col_counts[f.egress] += 1;
        }
        self.rows[f.ingress] += f.size;
        self.cols[f.egress] += f.size;
        let li = port_lb(self.rows[f.ingress], self.row_counts[f.ingress], self.rate, self.delta);
        let lj = port_lb(self.cols[f.egress], self.col_counts[f.egress], self.rate, self.delta);
        self.max_lb = self.max_lb.max(li).max(lj);
        self.max_load = self.max_load.max(self.rows[f.ingress]).max(self.cols[f.egress]);
    }
}

pub(crate) fn assign_greedy(
    workload: &Workload,
    order: &[usize],
    rule: AssignRule,
) -> Result<FlowAssignment, SchedulerError> {
    check_order(workload, order)?;
    let config = workload.config();
    let mut cores: Vec<CoreLoad> = config
        .rates()
        .iter()
        .map(|&r| CoreLoad::new(config.n(), r, config.delta()))
        .collect();
    let mut assignment = FlowAssignment::empty(workload.len(), cores.len(), config.n());
    for cf in priority_flows(workload, order) {
        let mut best = 0;
        let mut best_score = f64::INFINITY;
        for (k, core) in cores.iter().enumerate() {
            let score = core.tentative(&cf.flow, rule);
            if score < best_score {
                best = k;
                best_score = score;
            }
        }
        cores[best].place(&cf.flow);
        assignment.place(cf.coflow, best, cf.flow);
    }
    Ok(assignment)
}

/// Places each flow, whole, on the core whose prefix lower bound is smallest
/// after adding it.
pub fn assign_flows(workload: &Workload, order: &[usize]) -> Result<FlowAssignment, SchedulerError> {
    assign_greedy(workload, order, AssignRule::PrefixBound)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TimeKey(f64);

impl Eq for TimeKey {}

impl PartialOrd for TimeKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TimeKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// List-schedules the flows of one core. `flows` must be in priority order.
///
/// Time starts at zero and only moves to circuit finish times. At every such
/// instant the pending flows are scanned in priority order and each one whose
/// ingress and egress are both free is established immediately, reserving
/// both ports for `delta + size / rate`. Only flows touching a port released
/// at that instant can become eligible, so the scan is restricted to them.
pub fn schedule_core(flows: &[CoflowFlow], core: usize, rate: f64, delta: f64) -> Vec<CircuitEvent> {
    let n = flows
        .iter()
        .map(|f| f.flow.ingress.max(f.flow.egress) + 1)
        .max()
        .unwrap_or(0);
    let mut ingress_free = vec![0.0_f64; n];
    let mut egress_free = vec![0.0_f64; n];
    let mut waiting_in: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut waiting_out: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut finishes: BinaryHeap<Reverse<(TimeKey, usize)>> = BinaryHeap::new();
    let mut events = Vec::with_capacity(flows.len());
    let mut pending = flows.len();

    for (idx, f) in flows.iter().enumerate() {
        waiting_in[f.flow.ingress].insert(idx);
        waiting_out[f.flow.egress].insert(idx);
    }

    let mut try_start = |idx: usize,
                         t: f64,
                         ingress_free: &mut [f64],
                         egress_free: &mut [f64],
                         waiting_in: &mut [BTreeSet<usize>],
                         waiting_out: &mut [BTreeSet<usize>],
                         finishes: &mut BinaryHeap<Reverse<(TimeKey, usize)>>|
     -> bool {
        let cf = flows[idx];
        let (i, j) = (cf.flow.ingress, cf.flow.egress);
        if ingress_free[i] > t || egress_free[j] > t {
            return false;
        }
        let ev = CircuitEvent::new(cf.coflow, core, cf.flow, t, delta, rate);
        ingress_free[i] = ev.finish;
        egress_free[j] = ev.finish;
        waiting_in[i].remove(&idx);
        waiting_out[j].remove(&idx);
        finishes.push(Reverse((TimeKey(ev.finish), idx)));
        events.push(ev);
        true
    };

    for idx in 0..flows.len() {
        if try_start(
            idx,
            0.0,
            &mut ingress_free,
            &mut egress_free,
            &mut waiting_in,
            &mut waiting_out,
            &mut finishes,
        ) {
            pending -= 1;
        }
    }

    while pending > 0 {
        let Some(Reverse((TimeKey(t), first))) = finishes.pop() else {
            unreachable!("pending flows always wait on an in-flight circuit");
        };
        let mut released = vec![first];
        while let Some(Reverse((TimeKey(next), idx))) = finishes.peek().copied() {
            if next != t {
                break;
            }
            finishes.pop();
            released.push(idx);
        }
        let mut candidates = BTreeSet::new();
        for idx in released {
            let f = flows[idx].flow;
            candidates.extend(waiting_in[f.ingress].iter().copied());
            candidates.extend(waiting_out[f.egress].iter().copied());
        }
        for idx in candidates {
            if try_start(
                idx,
                t,
                &mut ingress_free,
                &mut egress_free,
                &mut waiting_in,
                &mut waiting_out,
                &mut finishes,
            ) {
                pending -= 1;
            }
        }
    }
    events
}

/// Runs the per-core list scheduler on every core. Each core sees its flows
/// in the global priority order.
pub fn schedule_all(
    workload: &Workload,
    order: &[usize],
    assignment: &FlowAssignment,
) -> Result<Schedule, SchedulerError> {
    check_order(workload, order)?;
    assignment.validate(workload)?;
    let config = workload.config();
    let mut events = Vec::with_capacity(workload.total_flows());
    for core in 0..config.num_cores() {
        let flows: Vec<CoflowFlow> = order
            .iter()
            .flat_map(|&coflow| {
                coflow_flows(assignment.part(coflow, core))
                    .into_iter()
                    .map(move |flow| CoflowFlow { coflow, flow })
            })
            .collect();
        events.extend(schedule_core(&flows, core, config.rate(core), config.delta()));
    }
    Ok(Schedule::new(workload.len(), events))
}

pub(crate) fn finish_pipeline(
    workload: &Workload,
    order: Vec<usize>,
    assignment: FlowAssignment,
    scope: AuditScope,
) -> Result<SchedulerOutput, SchedulerError> {
    let schedule = schedule_all(workload, &order, &assignment)?;
    let audit = bounds::audit(workload, &order, &assignment, &schedule, scope)?;
    Ok(SchedulerOutput {
        order,
        assignment,
        schedule,
        audit,
    })
}

/// Orders, assigns and schedules a workload, then audits the result.
pub fn run(workload: &Workload) -> Result<SchedulerOutput, SchedulerError> {
    let order = order_coflows(workload)?;
    let assignment = assign_flows(workload, &order)?;
    finish_pipeline(workload, order, assignment, AuditScope::MainAlgorithm)
}

/// The packet-switched variant: the same pipeline with no reconfiguration
/// delay, audited against the EPS bounds.
pub fn run_eps(workload: &Workload) -> Result<SchedulerOutput, SchedulerError> {
    let mode = workload.config().mode();
    if mode != FabricMode::Eps {
        return Err(SchedulerError::WrongMode {
            expected: FabricMode::Eps,
            found: mode,
        });
    }
    run(workload)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{verify_schedule, CoflowSpec, NetworkConfig};

    fn m(rows: &[&[f64]]) -> DemandMatrix {
        DemandMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn single(n: usize, i: usize, j: usize, size: f64) -> DemandMatrix {
        DemandMatrix::zeros(n).unwrap().add_entry(i, j, size).unwrap()
    }

    #[test]
    fn order_by_score() {
        // rates [1], delta 0: T_LB = rho, scores 2/2 = 1 and 1/4 = 0.25
        let cfg = NetworkConfig::ocs(2, vec![1.0], 0.0).unwrap();
        let w = Workload::new(
            cfg,
            vec![
                CoflowSpec::new(7, 2.0, single(2, 0, 0, 2.0)),
                CoflowSpec::new(3, 1.0, single(2, 1, 1, 4.0)),
            ],
        )
        .unwrap();
        assert_eq!(order_coflows(&w).unwrap(), vec![0, 1]);
        let swapped = w.with_weights(&[0.1, 1.0]).unwrap();
        assert_eq!(order_coflows(&swapped).unwrap(), vec![1, 0]);
    }

    #[test]
    fn order_ties_and_singletons() {
        let cfg = NetworkConfig::ocs(2, vec![1.0], 1.0).unwrap();
        let d = single(2, 0, 1, 5.0);
        let w = Workload::new(
            cfg.clone(),
            (0..4).map(|id| CoflowSpec::new(id, 1.0, d.clone())).collect(),
        )
        .unwrap();
        assert_eq!(order_coflows(&w).unwrap(), vec![0, 1, 2, 3]);
        let one = Workload::new(cfg.clone(), vec![CoflowSpec::new(9, 1.0, d)]).unwrap();
        assert_eq!(order_coflows(&one).unwrap(), vec![0]);
        let empty = Workload::new(cfg, vec![]).unwrap();
        assert_eq!(order_coflows(&empty), Err(SchedulerError::EmptyWorkload));
    }

    #[test]
    fn within_coflow_order() {
        let d = m(&[&[1.0, 3.0], &[3.0, 2.0]]);
        let sizes: Vec<(usize, usize, f64)> =
            coflow_flows(&d).iter().map(|f| (f.ingress, f.egress, f.size)).collect();
        assert_eq!(sizes, vec![(0, 1, 3.0), (1, 0, 3.0), (1, 1, 2.0), (0, 0, 1.0)]);
    }

    #[test]
    fn assignment_prefers_faster_core() {
        let cfg = NetworkConfig::ocs(2, vec![1.0, 2.0], 1.0).unwrap();
        let w = Workload::new(cfg, vec![CoflowSpec::new(1, 1.0, single(2, 0, 0, 4.0))]).unwrap();
        let a = assign_flows(&w, &[0]).unwrap();
        assert_eq!(a.core_of(0, 0, 0), Some(1));
    }

    #[test]
    fn assignment_single_core() {
        let cfg = NetworkConfig::ocs(3, vec![5.0], 2.0).unwrap();
        let d = m(&[&[1.0, 2.0, 0.0], &[0.0, 3.0, 4.0], &[5.0, 0.0, 6.0]]);
        let w = Workload::new(cfg, vec![CoflowSpec::new(1, 1.0, d.clone())]).unwrap();
        let a = assign_flows(&w, &[0]).unwrap();
        assert_eq!(a.part(0, 0), &d);
    }

    /// Prefix on the fast core already holds 8 units on ingress 0. A second
    /// flow of 4 on the same ingress costs 4/1 + 5 = 9 on the slow core and
    /// 12/4 + 2*5 = 13 on the fast one.
    #[test]
    fn assignment_counts_circuits() {
        let cfg = NetworkConfig::ocs(2, vec![1.0, 4.0], 5.0).unwrap();
        let w = Workload::new(
            cfg,
            vec![
                CoflowSpec::new(1, 100.0, single(2, 0, 0, 8.0)),
                CoflowSpec::new(2, 1.0, single(2, 0, 1, 4.0)),
            ],
        )
        .unwrap();
        let order = order_coflows(&w).unwrap();
        assert_eq!(order, vec![0, 1]);
        let a = assign_flows(&w, &order).unwrap();
        // the first flow alone: 8/1 + 5 = 13 vs 8/4 + 5 = 7
        assert_eq!(a.core_of(0, 0, 0), Some(1));
        assert_eq!(a.core_of(1, 0, 1), Some(0));
    }

    fn flows(list: &[(usize, usize, usize, f64)]) -> Vec<CoflowFlow> {
        list.iter()
            .map(|&(coflow, ingress, egress, size)| CoflowFlow {
                coflow,
                flow: Flow { ingress, egress, size },
            })
            .collect()
    }

    #[test]
    fn core_schedule_shared_ingress() {
        let ev = schedule_core(&flows(&[(0, 0, 0, 2.0), (1, 0, 1, 3.0)]), 0, 1.0, 1.0);
        let times: Vec<(f64, f64)> = ev.iter().map(|e| (e.establish, e.finish)).collect();
        assert_eq!(times, vec![(0.0, 3.0), (3.0, 7.0)]);
    }

    #[test]
    fn core_schedule_disjoint_pairs_run_concurrently() {
        let ev = schedule_core(&flows(&[(0, 0, 0, 2.0), (1, 1, 1, 3.0)]), 0, 1.0, 1.0);
        let times: Vec<(f64, f64)> = ev.iter().map(|e| (e.establish, e.finish)).collect();
        assert_eq!(times, vec![(0.0, 3.0), (0.0, 4.0)]);
    }

    #[test]
    fn core_schedule_single_flow() {
        let ev = schedule_core(&flows(&[(0, 2, 1, 12.0)]), 0, 4.0, 1.5);
        assert_eq!(ev[0].finish, 1.5 + 3.0);
        assert!(schedule_core(&[], 0, 1.0, 1.0).is_empty());
    }

    #[test]
    fn core_schedule_backfills_lower_priority() {
        // (2,0) waits for egress 0 while the lower-priority (2,1) uses ingress 2
        let list = flows(&[(0, 0, 0, 4.0), (0, 2, 0, 1.0), (1, 2, 1, 1.0)]);
        let ev = schedule_core(&list, 0, 1.0, 0.0);
        let times: Vec<(usize, usize, f64)> = ev.iter().map(|e| (e.ingress, e.egress, e.establish)).collect();
        assert_eq!(times, vec![(0, 0, 0.0), (2, 1, 0.0), (2, 0, 4.0)]);
        // a long lower-priority circuit can hold a port the waiting flow needs
        let list = flows(&[(0, 0, 0, 4.0), (0, 1, 0, 1.0), (1, 1, 2, 10.0)]);
        let ev = schedule_core(&list, 0, 1.0, 0.0);
        let est: Vec<f64> = ev.iter().map(|e| e.establish).collect();
        assert_eq!(est, vec![0.0, 0.0, 10.0]);
    }

    #[test]
    fn run_singleton() {
        let cfg = NetworkConfig::ocs(2, vec![4.0], 2.0).unwrap();
        let w = Workload::new(cfg, vec![CoflowSpec::new(1, 3.0, single(2, 1, 0, 8.0))]).unwrap();
        let out = run(&w).unwrap();
        assert_eq!(out.total_weighted_cct(), 3.0 * (2.0 + 2.0));
        assert!(out.audit.checks.all_passed());
    }

    #[test]
    fn run_two_coflow_example() {
        let cfg = NetworkConfig::ocs(2, vec![1.0], 1.0).unwrap();
        let w = Workload::new(
            cfg,
            vec![
                CoflowSpec::new(1, 1.0, single(2, 0, 0, 2.0)),
                CoflowSpec::new(2, 1.0, single(2, 0, 1, 3.0)),
            ],
        )
        .unwrap();
        let out = run(&w).unwrap();
        assert_eq!(out.order, vec![0, 1]);
        assert_eq!(out.schedule.completion_times().unwrap(), vec![3.0, 7.0]);
        assert_eq!(out.total_weighted_cct(), 10.0);
        assert!(verify_schedule(&out.schedule, &out.assignment, &w).unwrap().is_clean());
    }

    #[test]
    fn eps_variant() {
        let eps = NetworkConfig::eps(2, vec![4.0]).unwrap();
        let w = Workload::new(eps, vec![CoflowSpec::new(1, 1.0, single(2, 0, 0, 10.0))]).unwrap();
        let out = run_eps(&w).unwrap();
        assert_eq!(out.schedule.completion_times().unwrap(), vec![2.5]);
        assert!(out.audit.checks.eps_prefix.unwrap().passed());

        let ocs = NetworkConfig::ocs(2, vec![4.0], 0.0).unwrap();
        let w = w.with_config(ocs).unwrap();
        assert!(matches!(run_eps(&w), Err(SchedulerError::WrongMode { .. })));
    }

    #[test]
    fn bad_orders_are_rejected() {
        let cfg = NetworkConfig::ocs(2, vec![1.0], 1.0).unwrap();
        let w = Workload::new(cfg, vec![CoflowSpec::new(1, 1.0, single(2, 0, 0, 1.0))]).unwrap();
        assert_eq!(assign_flows(&w, &[1]), Err(SchedulerError::BadOrder));
        assert_eq!(assign_flows(&w, &[]), Err(SchedulerError::BadOrder));
    }
}
