//! Ablation baselines. Both keep the coflow order and the per-core list
//! scheduler of [`crate::scheduler::run`] and only swap the assignment rule.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::AuditScope;
use crate::model::{FlowAssignment, Workload};
use crate::rng::{self, Purpose};
use crate::scheduler::{self, AssignRule, SchedulerError, SchedulerOutput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselineKind {
    /// Least `rho / rate` after placement, ignoring circuit counts.
    #[serde(rename = "rho")]
    RhoAssign,
    /// Core drawn with probability proportional to its rate.
    #[serde(rename = "rand")]
    RandAssign,
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::RhoAssign => "rho",
            BaselineKind::RandAssign => "rand",
        })
    }
}

impl FromStr for BaselineKind {
    type Err = BaselineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "rho" | "rho-assign" => Ok(BaselineKind::RhoAssign),
            "rand" | "rand-assign" => Ok(BaselineKind::RandAssign),
            _ => Err(BaselineError::UnknownKind(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("the random-assignment baseline needs a seed")]
    MissingSeed,
    #[error("unknown baseline {0:?} (expected rho or rand)")]
    UnknownKind(String),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
}

pub fn assign_rho(workload: &Workload, order: &[usize]) -> Result<FlowAssignment, SchedulerError> {
    scheduler::assign_greedy(workload, order, AssignRule::LoadOnly)
}

/// Draws one core per flow, in priority order, from the
/// [`Purpose::RandomAssignment`] stream: `u` uniform in `[0, R)` selects the
/// first core whose cumulative rate exceeds `u`.
pub fn assign_rand(workload: &Workload, order: &[usize], seed: u64) -> Result<FlowAssignment, SchedulerError> {
    scheduler::check_order(workload, order)?;
    let config = workload.config();
    let cumulative: Vec<f64> = config
        .rates()
        .iter()
        .scan(0.0, |acc, r| {
            *acc += r;
            Some(*acc)
        })
        .collect();
    let total = config.total_rate();
    let mut rng = rng::stream(seed, Purpose::RandomAssignment);
    let mut assignment = FlowAssignment::empty(workload.len(), config.num_cores(), config.n());
    for cf in scheduler::priority_flows(workload, order) {
        let u = rng.random::<f64>() * total;
        let core = cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(cumulative.len() - 1);
        assignment.place(cf.coflow, core, cf.flow);
    }
    Ok(assignment)
}

/// Runs the main pipeline with the assignment phase replaced.
pub fn run_baseline(
    kind: BaselineKind,
    workload: &Workload,
    seed: Option<u64>,
) -> Result<SchedulerOutput, BaselineError> {
    let order = scheduler::order_coflows(workload)?;
    let assignment = match kind {
        BaselineKind::RhoAssign => assign_rho(workload, &order)?,
        BaselineKind::RandAssign => {
            assign_rand(workload, &order, seed.ok_or(BaselineError::MissingSeed)?)?
        }
    };
    Ok(scheduler::finish_pipeline(
        workload,
        order,
        assignment,
        AuditScope::Baseline,
    )?)
}
