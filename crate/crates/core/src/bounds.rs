//! Completion-time lower bounds, the weight concentration parameter and the
//! per-run audit that checks produced schedules against the guarantees of
//! the scheduling pipeline.

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    DemandMatrix, FabricMode, FlowAssignment, ModelError, NetworkConfig, PortLoads, Schedule,
    Workload, TIME_TOLERANCE,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("lower bounds are undefined for an all-zero demand matrix")]
    ZeroMatrix,
    #[error("rate must be strictly positive, got {0}")]
    InvalidRate(f64),
    #[error("delta must be non-negative, got {0}")]
    InvalidDelay(f64),
    #[error("psi = {psi} is below max(K, tau) = {required}")]
    PsiTooSmall { psi: f64, required: f64 },
    #[error("weight list is empty")]
    NoWeights,
    #[error("weights must be strictly positive, got {0}")]
    InvalidWeight(f64),
    #[error("order is not a permutation of {0} coflows")]
    BadOrder(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Per-core lower bound: the largest of `load / rate + count * delta` over
/// every ingress and egress port.
pub fn per_core_lb(d: &DemandMatrix, rate: f64, delta: f64) -> Result<f64, BoundsError> {
    if !(rate > 0.0) {
        return Err(BoundsError::InvalidRate(rate));
    }
    if !(delta >= 0.0) {
        return Err(BoundsError::InvalidDelay(delta));
    }
    if d.is_zero() {
        return Err(BoundsError::ZeroMatrix);
    }
    Ok(lb_from_loads(&d.row_col_loads(), rate, delta))
}

pub(crate) fn port_lb(load: f64, count: usize, rate: f64, delta: f64) -> f64 {
    load / rate + count as f64 * delta
}

pub(crate) fn lb_from_loads(loads: &PortLoads, rate: f64, delta: f64) -> f64 {
    let rows = loads.rows.iter().zip(&loads.row_counts);
    let cols = loads.cols.iter().zip(&loads.col_counts);
    rows.chain(cols)
        .map(|(&load, &count)| port_lb(load, count, rate, delta))
        .fold(0.0, f64::max)
}

/// Assignment-independent bound: `delta + rho / R` on OCS, `rho / R` on EPS.
pub fn global_lb(d: &DemandMatrix, config: &NetworkConfig) -> Result<f64, BoundsError> {
    if d.is_zero() {
        return Err(BoundsError::ZeroMatrix);
    }
    let transfer = d.rho() / config.total_rate();
    Ok(match config.mode() {
        FabricMode::Ocs => config.delta() + transfer,
        FabricMode::Eps => transfer,
    })
}

/// `(rho / r_max + tau * delta) / psi`, never above [`global_lb`] when
/// `psi >= max(K, tau)`.
pub fn relaxed_global_lb_floor(
    d: &DemandMatrix,
    config: &NetworkConfig,
    psi: f64,
) -> Result<f64, BoundsError> {
    if d.is_zero() {
        return Err(BoundsError::ZeroMatrix);
    }
    let loads = d.row_col_loads();
    let tau = loads.tau();
    let required = (config.num_cores().max(tau)) as f64;
    if psi < required {
        return Err(BoundsError::PsiTooSmall { psi, required });
    }
    Ok((loads.rho() / config.max_rate() + tau as f64 * config.delta()) / psi)
}

/// Weight concentration `M * sum(w^2) / sum(w)^2`, always in `[1, M]`.
pub fn gamma_w(weights: &[f64]) -> Result<f64, BoundsError> {
    if weights.is_empty() {
        return Err(BoundsError::NoWeights);
    }
    if let Some(&bad) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
        return Err(BoundsError::InvalidWeight(bad));
    }
    // normalise first so huge or tiny weights do not overflow the squares
    let max = weights.iter().copied().fold(0.0, f64::max);
    let (sum, sum_sq) = weights.iter().fold((0.0, 0.0), |(s, q), &w| {
        let x = w / max;
        (s + x, q + x * x)
    });
    Ok(weights.len() as f64 * sum_sq / (sum * sum))
}

/// Largest per-coflow `tau` over the workload.
pub fn tau_max(workload: &Workload) -> usize {
    workload
        .coflows()
        .iter()
        .map(|c| c.demand.tau())
        .max()
        .unwrap_or(0)
}

/// `psi = max(K, tau_max)`.
pub fn psi(workload: &Workload) -> usize {
    workload.config().num_cores().max(tau_max(workload))
}

/// Running aggregates for the first `position + 1` coflows of an order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrefixAggregate {
    pub position: usize,
    pub coflow: usize,
    /// `rho` of the aggregated demand `D_{1:m}`.
    pub rho: f64,
    /// `tau` of `D_{1:m}` (non-zero entries of the sum, not a sum of counts).
    pub tau: usize,
    /// Per-core lower bound of `D_{1:m}^k`; `None` while a core is empty.
    pub core_lbs: Vec<Option<f64>>,
}

impl PrefixAggregate {
    pub fn max_core_lb(&self) -> f64 {
        self.core_lbs.iter().flatten().copied().fold(0.0, f64::max)
    }
}

fn check_order(order: &[usize], m: usize) -> Result<(), BoundsError> {
    let mut seen = vec![false; m];
    if order.len() != m {
        return Err(BoundsError::BadOrder(m));
    }
    for &c in order {
        if c >= m || seen[c] {
            return Err(BoundsError::BadOrder(m));
        }
        seen[c] = true;
    }
    Ok(())
}

pub fn prefix_aggregates(
    workload: &Workload,
    order: &[usize],
    assignment: &FlowAssignment,
) -> Result<Vec<PrefixAggregate>, BoundsError> {
    check_order(order, workload.len())?;
    assignment.validate(workload)?;
    let config = workload.config();
    let n = config.n();
    let k = config.num_cores();
    let mut total = DemandMatrix::zeros(n)?;
    let mut per_core = vec![DemandMatrix::zeros(n)?; k];
    let mut out = Vec::with_capacity(order.len());
    for (position, &coflow) in order.iter().enumerate() {
        total = total.sum(&workload.coflows()[coflow].demand)?;
        for (core, acc) in per_core.iter_mut().enumerate() {
            *acc = acc.sum(assignment.part(coflow, core))?;
        }
        let loads = total.row_col_loads();
        let core_lbs = per_core
            .iter()
            .enumerate()
            .map(|(core, d)| {
                (!d.is_zero()).then(|| lb_from_loads(&d.row_col_loads(), config.rate(core), config.delta()))
            })
            .collect();
        out.push(PrefixAggregate {
            position,
            coflow,
            rho: loads.rho(),
            tau: loads.tau(),
            core_lbs,
        });
    }
    Ok(out)
}

/// Outcome of one inequality check. `excess` is the worst `lhs - rhs` seen;
/// the check passes when it does not exceed [`TIME_TOLERANCE`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Check {
    pub excess: f64,
}

impl Check {
    fn over<I: IntoIterator<Item = (f64, f64)>>(pairs: I) -> Self {
        let excess = pairs
            .into_iter()
            .map(|(lhs, rhs)| lhs - rhs)
            .fold(f64::NEG_INFINITY, f64::max);
        Self { excess }
    }

    pub fn passed(&self) -> bool {
        self.excess <= TIME_TOLERANCE
    }
}

/// Which guarantees an audit asserts. Baselines replace the assignment rule,
/// so only the schedule-level checks apply to them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditScope {
    MainAlgorithm,
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrefixAudit {
    pub position: usize,
    pub coflow: usize,
    pub rho: f64,
    pub tau: usize,
    pub max_core_lb: f64,
    /// `rho_{1:m} / r_max + tau_{1:m} * delta`.
    pub assignment_bound: f64,
    pub completion: f64,
    pub global_lb: f64,
}

/// `None` marks a check that does not apply to this mode or scope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditChecks {
    pub global_lb: Check,
    pub assignment_prefix: Option<Check>,
    pub scheduling_prefix: Check,
    pub weight_ratio_bound: Option<Check>,
    pub concentration_bound: Option<Check>,
    pub eps_prefix: Option<Check>,
    pub eps_weight_ratio_bound: Option<Check>,
}

impl AuditChecks {
    pub fn all_passed(&self) -> bool {
        let optional = [
            self.assignment_prefix,
            self.weight_ratio_bound,
            self.concentration_bound,
            self.eps_prefix,
            self.eps_weight_ratio_bound,
        ];
        self.global_lb.passed()
            && self.scheduling_prefix.passed()
            && optional.iter().flatten().all(Check::passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundAudit {
    pub mode: FabricMode,
    pub scope: AuditScope,
    pub global_lbs: Vec<f64>,
    pub prefixes: Vec<PrefixAudit>,
    pub tau_max: usize,
    pub psi: usize,
    pub gamma_w: f64,
    pub w_max: f64,
    pub w_min: f64,
    pub total_weighted_cct: f64,
    /// `sum_m w_m * T_LB(D_m)`.
    pub weighted_lb_sum: f64,
    /// `2 M (w_max / w_min) psi * weighted_lb_sum` (OCS).
    pub weight_ratio_rhs: f64,
    /// `2 psi Gamma_w * weighted_lb_sum` (OCS).
    pub concentration_rhs: f64,
    /// `2 M H (w_max / w_min) * sum_m w_m rho_m / R` (EPS).
    pub eps_weight_ratio_rhs: f64,
    pub checks: AuditChecks,
}

impl BoundAudit {
    /// `sum w T` over the weight-ratio bound that applies to the mode.
    pub fn theorem_bound_ratio(&self) -> f64 {
        match self.mode {
            FabricMode::Ocs => self.total_weighted_cct / self.weight_ratio_rhs,
            FabricMode::Eps => self.total_weighted_cct / self.eps_weight_ratio_rhs,
        }
    }
}

/// Audits a finished schedule. `order` is the coflow execution order used to
/// build it.
pub fn audit(
    workload: &Workload,
    order: &[usize],
    assignment: &FlowAssignment,
    schedule: &Schedule,
    scope: AuditScope,
) -> Result<BoundAudit, BoundsError> {
    let config = workload.config();
    let prefixes = prefix_aggregates(workload, order, assignment)?;
    let completions = schedule.completion_times()?;
    let weights = workload.weights();
    let global_lbs = workload
        .coflows()
        .iter()
        .map(|c| global_lb(&c.demand, config))
        .collect::<Result<Vec<_>, _>>()?;

    let r_max = config.max_rate();
    let delta = config.delta();
    let prefix_audits: Vec<PrefixAudit> = prefixes
        .iter()
        .map(|p| PrefixAudit {
            position: p.position,
            coflow: p.coflow,
            rho: p.rho,
            tau: p.tau,
            max_core_lb: p.max_core_lb(),
            assignment_bound: p.rho / r_max + p.tau as f64 * delta,
            completion: completions[p.coflow],
            global_lb: global_lbs[p.coflow],
        })
        .collect();

    let m = workload.len() as f64;
    let tau_max = tau_max(workload);
    let psi = config.num_cores().max(tau_max);
    let gamma = gamma_w(&weights)?;
    let w_max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w_min = weights.iter().copied().fold(f64::INFINITY, f64::min);
    let total: f64 = weights.iter().zip(&completions).map(|(w, t)| w * t).sum();
    let weighted_lb_sum: f64 = weights.iter().zip(&global_lbs).map(|(w, lb)| w * lb).sum();
    let weight_ratio_rhs = 2.0 * m * (w_max / w_min) * psi as f64 * weighted_lb_sum;
    let concentration_rhs = 2.0 * psi as f64 * gamma * weighted_lb_sum;
    let weighted_rho: f64 = workload
        .coflows()
        .iter()
        .map(|c| c.weight * c.demand.rho() / config.total_rate())
        .sum();
    let h = config.num_cores() as f64;
    let eps_weight_ratio_rhs = 2.0 * m * h * (w_max / w_min) * weighted_rho;

    let main = scope == AuditScope::MainAlgorithm;
    let ocs = config.mode() == FabricMode::Ocs;
    let checks = AuditChecks {
        global_lb: Check::over(prefix_audits.iter().map(|p| (p.global_lb, p.completion))),
        assignment_prefix: main
            .then(|| Check::over(prefix_audits.iter().map(|p| (p.max_core_lb, p.assignment_bound)))),
        scheduling_prefix: Check::over(prefix_audits.iter().map(|p| (p.completion, 2.0 * p.max_core_lb))),
        weight_ratio_bound: (main && ocs).then(|| Check::over([(total, weight_ratio_rhs)])),
        concentration_bound: (main && ocs).then(|| Check::over([(total, concentration_rhs)])),
        eps_prefix: (main && !ocs)
            .then(|| Check::over(prefix_audits.iter().map(|p| (p.completion, 2.0 * p.rho / r_max)))),
        eps_weight_ratio_bound: (main && !ocs).then(|| Check::over([(total, eps_weight_ratio_rhs)])),
    };

    Ok(BoundAudit {
        mode: config.mode(),
        scope,
        global_lbs,
        prefixes: prefix_audits,
        tau_max,
        psi,
        gamma_w: gamma,
        w_max,
        w_min,
        total_weighted_cct: total,
        weighted_lb_sum,
        weight_ratio_rhs,
        concentration_rhs,
        eps_weight_ratio_rhs,
        checks,
    })
}
