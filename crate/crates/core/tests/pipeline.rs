use coflow_ocs::baselines::{run_baseline, BaselineKind};
use coflow_ocs::bounds::{global_lb, AuditScope};
use coflow_ocs::metrics::total_weighted_cct;
use coflow_ocs::model::{verify_schedule, CoflowSpec, DemandMatrix, NetworkConfig, Workload};
use coflow_ocs::scheduler::{self, run};
use proptest::prelude::*;

fn workload_strategy() -> impl Strategy<Value = Workload> {
    (2usize..6, prop::collection::vec(1u32..6, 1..4), prop_oneof![Just(0.0), Just(1.0), Just(8.0)])
        .prop_flat_map(|(n, rates, delta)| {
            let coflow = (
                1u32..20,
                prop::collection::vec((0..n, 0..n, 1u32..50), 1..8),
            );
            (Just(n), Just(rates), Just(delta), prop::collection::vec(coflow, 1..7))
        })
        .prop_map(|(n, rates, delta, coflows)| {
            let config = NetworkConfig::ocs(n, rates.into_iter().map(f64::from).collect(), delta).unwrap();
            let specs = coflows
                .into_iter()
                .enumerate()
                .map(|(c, (w, entries))| {
                    let mut d = DemandMatrix::zeros(n).unwrap();
                    for (i, j, s) in entries {
                        d = d.add_entry(i, j, f64::from(s)).unwrap();
                    }
                    CoflowSpec::new(c as u64, f64::from(w) / 4.0, d)
                })
                .collect();
            Workload::new(config, specs).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn main_algorithm_is_feasible_and_lower_bounded(w in workload_strategy()) {
        let out = run(&w).unwrap();
        let report = verify_schedule(&out.schedule, &out.assignment, &w).unwrap();
        prop_assert!(report.is_clean(), "{:?}", report.violations);
        out.assignment.validate(&w).unwrap();
        let t = out.schedule.completion_times().unwrap();
        for (c, tm) in w.coflows().iter().zip(&t) {
            prop_assert!(*tm >= global_lb(&c.demand, w.config()).unwrap() - 1e-9);
        }
        prop_assert!(out.audit.checks.assignment_prefix.unwrap().passed());
        let total = total_weighted_cct(&out.schedule, &w.weights()).unwrap();
        prop_assert_eq!(total, out.total_weighted_cct());
    }

    #[test]
    fn pipeline_is_deterministic(w in workload_strategy()) {
        prop_assert_eq!(run(&w).unwrap(), run(&w).unwrap());
        let a = run_baseline(BaselineKind::RandAssign, &w, Some(3)).unwrap();
        let b = run_baseline(BaselineKind::RandAssign, &w, Some(3)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn baselines_are_feasible(w in workload_strategy(), seed in any::<u64>()) {
        for (kind, s) in [(BaselineKind::RhoAssign, None), (BaselineKind::RandAssign, Some(seed))] {
            let out = run_baseline(kind, &w, s).unwrap();
            prop_assert_eq!(out.audit.scope, AuditScope::Baseline);
            prop_assert!(out.audit.checks.assignment_prefix.is_none());
            let report = verify_schedule(&out.schedule, &out.assignment, &w).unwrap();
            prop_assert!(report.is_clean(), "{:?}", report.violations);
        }
    }

    #[test]
    fn load_only_assignment_matches_without_delay(w in workload_strategy()) {
        let c = w.config();
        let w = w.with_config(NetworkConfig::ocs(c.n(), c.rates().to_vec(), 0.0).unwrap()).unwrap();
        let ours = run(&w).unwrap();
        let rho = run_baseline(BaselineKind::RhoAssign, &w, None).unwrap();
        prop_assert_eq!(ours.schedule, rho.schedule);
    }

    #[test]
    fn single_core_makes_assignment_irrelevant(w in workload_strategy(), seed in any::<u64>()) {
        let c = w.config();
        let w = w.with_config(NetworkConfig::ocs(c.n(), vec![c.rates()[0]], c.delta()).unwrap()).unwrap();
        let ours = run(&w).unwrap();
        let rand = run_baseline(BaselineKind::RandAssign, &w, Some(seed)).unwrap();
        prop_assert_eq!(ours.schedule, rand.schedule);
    }

    #[test]
    fn reordering_coflows_keeps_the_total(w in workload_strategy()) {
        let mut specs = w.coflows().to_vec();
        specs.reverse();
        let reversed = Workload::new(w.config().clone(), specs).unwrap();
        let a = run(&w).unwrap().total_weighted_cct();
        let b = run(&reversed).unwrap().total_weighted_cct();
        // ties in the priority score are broken by index, so only tie-free
        // instances are order independent
        let scores: Vec<f64> = w
            .coflows()
            .iter()
            .map(|c| c.weight / global_lb(&c.demand, w.config()).unwrap())
            .collect();
        let distinct = scores.iter().enumerate().all(|(i, x)| scores[..i].iter().all(|y| y != x));
        if distinct {
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
        }
    }
}

fn single(n: usize, flows: &[(usize, usize, f64)]) -> DemandMatrix {
    flows
        .iter()
        .fold(DemandMatrix::zeros(n).unwrap(), |d, &(i, j, s)| d.add_entry(i, j, s).unwrap())
}

#[test]
fn backfilling_can_exceed_the_scheduling_prefix_bound() {
    // the first coflow waits for egress 0 while a long flow of the second
    // coflow takes its free ingress
    let cfg = NetworkConfig::ocs(3, vec![1.0], 0.0).unwrap();
    let w = Workload::new(
        cfg,
        vec![
            CoflowSpec::new(1, 10.0, single(3, &[(1, 0, 2.0), (0, 0, 1.0)])),
            CoflowSpec::new(2, 1.0, single(3, &[(0, 2, 100.0)])),
        ],
    )
    .unwrap();
    let out = run(&w).unwrap();
    assert_eq!(out.order, vec![0, 1]);
    assert!(verify_schedule(&out.schedule, &out.assignment, &w).unwrap().is_clean());
    assert_eq!(out.schedule.completion_time(0), Some(101.0));
    let first = &out.audit.prefixes[0];
    assert_eq!(first.max_core_lb, 3.0);
    assert!(!out.audit.checks.scheduling_prefix.passed());
    assert_eq!(out.audit.checks.scheduling_prefix.excess, 101.0 - 6.0);
}

#[test]
fn equal_weights_on_one_port_pair_exceed_the_concentration_bound() {
    let cfg = NetworkConfig::ocs(1, vec![1.0], 0.0).unwrap();
    let specs = (0..10).map(|c| CoflowSpec::new(c, 1.0, single(1, &[(0, 0, 1.0)]))).collect();
    let w = Workload::new(cfg, specs).unwrap();
    let out = run(&w).unwrap();
    assert_eq!(out.audit.gamma_w, 1.0);
    assert_eq!(out.total_weighted_cct(), 55.0);
    assert_eq!(out.audit.concentration_rhs, 20.0);
    assert!(!out.audit.checks.concentration_bound.unwrap().passed());
    assert!(out.audit.checks.weight_ratio_bound.unwrap().passed());
}

#[test]
fn two_coflows_on_one_ingress() {
    let cfg = NetworkConfig::ocs(2, vec![1.0], 1.0).unwrap();
    let w = Workload::new(
        cfg,
        vec![
            CoflowSpec::new(1, 1.0, single(2, &[(0, 0, 2.0)])),
            CoflowSpec::new(2, 1.0, single(2, &[(0, 1, 3.0)])),
        ],
    )
    .unwrap();
    let out = run(&w).unwrap();
    assert_eq!(out.schedule.completion_times().unwrap(), vec![3.0, 7.0]);
    assert_eq!(out.total_weighted_cct(), 10.0);
    assert_eq!(scheduler::order_coflows(&w).unwrap(), vec![0, 1]);
}
