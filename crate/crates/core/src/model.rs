//! Domain types shared by the rest of the crate: demand matrices, the
//! multi-core fabric configuration, workloads, cross-core assignments and
//! circuit schedules, plus the feasibility checker for schedules.
//!
//! Port and core indices are 0-based everywhere in the API. File formats
//! written by [`crate::workload`] and [`crate::experiment`] are 1-based.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance, in time units, used by every verifier and audit.
pub const TIME_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("demand matrix must have at least one port")]
    ZeroPorts,
    #[error("expected {expected} rows/columns, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("entry ({i}, {j}) is {value}; demands must be finite and non-negative")]
    InvalidEntry { i: usize, j: usize, value: f64 },
    #[error("index ({i}, {j}) out of range for a {n}x{n} matrix")]
    IndexOutOfRange { i: usize, j: usize, n: usize },
    #[error("amount must be strictly positive, got {0}")]
    NonPositiveAmount(f64),
    #[error("network needs at least one core")]
    NoCores,
    #[error("core {core} has rate {rate}; rates must be finite and strictly positive")]
    InvalidRate { core: usize, rate: f64 },
    #[error("reconfiguration delay must be finite and non-negative, got {0}")]
    InvalidDelay(f64),
    #[error("EPS fabrics have no reconfiguration delay, got delta = {0}")]
    EpsWithDelay(f64),
    #[error("coflow {id} has weight {weight}; weights must be finite and strictly positive")]
    InvalidWeight { id: u64, weight: f64 },
    #[error("coflow {id} has an all-zero demand matrix")]
    EmptyCoflow { id: u64 },
    #[error("coflow id {0} appears more than once")]
    DuplicateCoflowId(u64),
    #[error("assignment does not match workload: {0}")]
    AssignmentMismatch(String),
    #[error("coflow index {0} has no circuit events")]
    MissingCoflow(usize),
}

/// An `n x n` matrix of non-negative data sizes, `d(i, j)` being the amount
/// sent from ingress port `i` to egress port `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandMatrix {
    n: usize,
    entries: Vec<f64>,
}

/// Row/column sums and non-zero counts of a demand matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PortLoads {
    pub rows: Vec<f64>,
    pub cols: Vec<f64>,
    pub row_counts: Vec<usize>,
    pub col_counts: Vec<usize>,
}

impl PortLoads {
    /// Maximum row or column sum.
    pub fn rho(&self) -> f64 {
        self.rows
            .iter()
            .chain(self.cols.iter())
            .copied()
            .fold(0.0, f64::max)
    }

    /// Maximum number of non-zero entries in any row or column.
    pub fn tau(&self) -> usize {
        self.row_counts
            .iter()
            .chain(self.col_counts.iter())
            .copied()
            .max()
            .unwrap_or(0)
    }
}

/// One non-zero entry of a demand matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flow {
    pub ingress: usize,
    pub egress: usize,
    pub size: f64,
}

impl DemandMatrix {
    pub fn zeros(n: usize) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::ZeroPorts);
        }
        Ok(Self {
            n,
            entries: vec![0.0; n * n],
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let n = rows.len();
        let mut m = Self::zeros(n)?;
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(ModelError::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, value) in row.into_iter().enumerate() {
                if !value.is_finite() || value < 0.0 {
                    return Err(ModelError::InvalidEntry { i, j, value });
                }
                m.entries[i * n + j] = value;
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    /// Returns a copy with `amount` added to entry `(i, j)`.
    pub fn add_entry(&self, i: usize, j: usize, amount: f64) -> Result<Self, ModelError> {
        let mut out = self.clone();
        out.add_in_place(i, j, amount)?;
        Ok(out)
    }

    pub(crate) fn add_in_place(&mut self, i: usize, j: usize, amount: f64) -> Result<(), ModelError> {
        if i >= self.n || j >= self.n {
            return Err(ModelError::IndexOutOfRange { i, j, n: self.n });
        }
        if !(amount > 0.0) || !amount.is_finite() {
            return Err(ModelError::NonPositiveAmount(amount));
        }
        self.entries[i * self.n + j] += amount;
        Ok(())
    }

    /// Entry-wise sum. Both matrices must share the same dimension.
    pub fn sum(&self, other: &DemandMatrix) -> Result<Self, ModelError> {
        if self.n != other.n {
            return Err(ModelError::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self { n: self.n, entries })
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&v| v == 0.0)
    }

    pub fn row_col_loads(&self) -> PortLoads {
        let n = self.n;
        let mut loads = PortLoads {
            rows: vec![0.0; n],
            cols: vec![0.0; n],
            row_counts: vec![0; n],
            col_counts: vec![0; n],
        };
        for i in 0..n {
            for j in 0..n {
                let v = self.get(i, j);
                loads.rows[i] += v;
                loads.cols[j] += v;
                if v > 0.0 {
                    loads.row_counts[i] += 1;
                    loads.col_counts[j] += 1;
                }
            }
        }
        loads
    }

    pub fn rho(&self) -> f64 {
        self.row_col_loads().rho()
    }

    pub fn tau(&self) -> usize {
        self.row_col_loads().tau()
    }

    /// Non-zero entries in row-major order.
    pub fn flows(&self) -> impl Iterator<Item = Flow> + '_ {
        self.entries.iter().enumerate().filter_map(move |(idx, &size)| {
            (size > 0.0).then(|| Flow {
                ingress: idx / self.n,
                egress: idx % self.n,
                size,
            })
        })
    }

    pub fn flow_count(&self) -> usize {
        self.entries.iter().filter(|&&v| v > 0.0).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FabricMode {
    Ocs,
    Eps,
}

impl fmt::Display for FabricMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FabricMode::Ocs => f.write_str("ocs"),
            FabricMode::Eps => f.write_str("eps"),
        }
    }
}

/// `K` parallel `n x n` cores, each with its own per-port rate, sharing one
/// reconfiguration delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNetworkConfig", into = "RawNetworkConfig")]
pub struct NetworkConfig {
    mode: FabricMode,
    n: usize,
    rates: Vec<f64>,
    delta: f64,
}

#[derive(Serialize, Deserialize)]
struct RawNetworkConfig {
    mode: FabricMode,
    n: usize,
    rates: Vec<f64>,
    #[serde(default)]
    delta: f64,
}

impl TryFrom<RawNetworkConfig> for NetworkConfig {
    type Error = ModelError;

    fn try_from(raw: RawNetworkConfig) -> Result<Self, Self::Error> {
        NetworkConfig::new(raw.mode, raw.n, raw.rates, raw.delta)
    }
}

impl From<NetworkConfig> for RawNetworkConfig {
    fn from(c: NetworkConfig) -> Self {
        RawNetworkConfig {
            mode: c.mode,
            n: c.n,
            rates: c.rates,
            delta: c.delta,
        }
    }
}

impl NetworkConfig {
    pub fn new(mode: FabricMode, n: usize, rates: Vec<f64>, delta: f64) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::ZeroPorts);
        }
        if rates.is_empty() {
            return Err(ModelError::NoCores);
        }
        for (core, &rate) in rates.iter().enumerate() {
            if !rate.is_finite() || rate <= 0.0 {
                return Err(ModelError::InvalidRate { core, rate });
            }
        }
        if !delta.is_finite() || delta < 0.0 {
            return Err(ModelError::InvalidDelay(delta));
        }
        if mode == FabricMode::Eps && delta != 0.0 {
            return Err(ModelError::EpsWithDelay(delta));
        }
        Ok(Self { mode, n, rates, delta })
    }

    pub fn ocs(n: usize, rates: Vec<f64>, delta: f64) -> Result<Self, ModelError> {
        Self::new(FabricMode::Ocs, n, rates, delta)
    }

    pub fn eps(n: usize, rates: Vec<f64>) -> Result<Self, ModelError> {
        Self::new(FabricMode::Eps, n, rates, 0.0)
    }

    pub fn mode(&self) -> FabricMode {
        self.mode
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn rate(&self, core: usize) -> f64 {
        self.rates[core]
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn num_cores(&self) -> usize {
        self.rates.len()
    }

    /// Aggregate rate `R`.
    pub fn total_rate(&self) -> f64 {
        self.rates.iter().sum()
    }

    pub fn max_rate(&self) -> f64 {
        self.rates.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoflowSpec {
    pub id: u64,
    pub weight: f64,
    pub demand: DemandMatrix,
}

impl CoflowSpec {
    pub fn new(id: u64, weight: f64, demand: DemandMatrix) -> Self {
        Self { id, weight, demand }
    }
}

/// A validated set of coflows on a fabric. The position of a coflow in
/// [`Workload::coflows`] is its coflow index everywhere else in the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    config: NetworkConfig,
    coflows: Vec<CoflowSpec>,
}

impl Workload {
    pub fn new(config: NetworkConfig, coflows: Vec<CoflowSpec>) -> Result<Self, ModelError> {
        let mut seen = HashSet::with_capacity(coflows.len());
        for c in &coflows {
            if !seen.insert(c.id) {
                return Err(ModelError::DuplicateCoflowId(c.id));
            }
            if !c.weight.is_finite() || c.weight <= 0.0 {
                return Err(ModelError::InvalidWeight {
                    id: c.id,
                    weight: c.weight,
                });
            }
            if c.demand.n() != config.n() {
                return Err(ModelError::DimensionMismatch {
                    expected: config.n(),
                    found: c.demand.n(),
                });
            }
            if c.demand.is_zero() {
                return Err(ModelError::EmptyCoflow { id: c.id });
            }
        }
        Ok(Self { config, coflows })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn coflows(&self) -> &[CoflowSpec] {
        &self.coflows
    }

    pub fn len(&self) -> usize {
        self.coflows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coflows.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.coflows.iter().map(|c| c.weight).collect()
    }

    pub fn total_flows(&self) -> usize {
        self.coflows.iter().map(|c| c.demand.flow_count()).sum()
    }

    /// Same coflows on a different fabric with the same port count.
    pub fn with_config(&self, config: NetworkConfig) -> Result<Self, ModelError> {
        Self::new(config, self.coflows.clone())
    }

    /// Same demands with new weights, one per coflow.
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self, ModelError> {
        if weights.len() != self.coflows.len() {
            return Err(ModelError::DimensionMismatch {
                expected: self.coflows.len(),
                found: weights.len(),
            });
        }
        let coflows = self
            .coflows
            .iter()
            .zip(weights)
            .map(|(c, &w)| CoflowSpec::new(c.id, w, c.demand.clone()))
            .collect();
        Self::new(self.config.clone(), coflows)
    }
}

/// Per-coflow, per-core demand matrices `D_m^k`, indexed `[coflow][core]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowAssignment {
    parts: Vec<Vec<DemandMatrix>>,
}

impl FlowAssignment {
    pub fn new(parts: Vec<Vec<DemandMatrix>>) -> Self {
        Self { parts }
    }

    pub(crate) fn empty(coflows: usize, cores: usize, n: usize) -> Self {
        let zero = DemandMatrix::zeros(n).expect("n > 0 checked by NetworkConfig");
        Self {
            parts: vec![vec![zero; cores]; coflows],
        }
    }

    pub(crate) fn place(&mut self, coflow: usize, core: usize, flow: Flow) {
        self.parts[coflow][core]
            .add_in_place(flow.ingress, flow.egress, flow.size)
            .expect("flow comes from a validated demand matrix");
    }

    pub fn part(&self, coflow: usize, core: usize) -> &DemandMatrix {
        &self.parts[coflow][core]
    }

    pub fn num_coflows(&self) -> usize {
        self.parts.len()
    }

    pub fn num_cores(&self) -> usize {
        self.parts.first().map_or(0, Vec::len)
    }

    /// Core carrying the flow `(i, j)` of `coflow`, if any.
    pub fn core_of(&self, coflow: usize, i: usize, j: usize) -> Option<usize> {
        self.parts[coflow].iter().position(|d| d.get(i, j) > 0.0)
    }

    /// Checks that every flow of the workload lives, unsplit, on exactly one
    /// core and that nothing else was added.
    pub fn validate(&self, workload: &Workload) -> Result<(), ModelError> {
        let k = workload.config().num_cores();
        let n = workload.config().n();
        if self.parts.len() != workload.len() {
            return Err(ModelError::AssignmentMismatch(format!(
                "{} coflows assigned, workload has {}",
                self.parts.len(),
                workload.len()
            )));
        }
        for (m, (cores, coflow)) in self.parts.iter().zip(workload.coflows()).enumerate() {
            if cores.len() != k {
                return Err(ModelError::AssignmentMismatch(format!(
                    "coflow {m} has {} core parts, fabric has {k}",
                    cores.len()
                )));
            }
            if let Some(bad) = cores.iter().find(|d| d.n() != n) {
                return Err(ModelError::DimensionMismatch {
                    expected: n,
                    found: bad.n(),
                });
            }
            for i in 0..n {
                for j in 0..n {
                    let want = coflow.demand.get(i, j);
                    let holders: Vec<f64> =
                        cores.iter().map(|d| d.get(i, j)).filter(|&v| v > 0.0).collect();
                    let ok = if want > 0.0 {
                        holders.len() == 1 && holders[0] == want
                    } else {
                        holders.is_empty()
                    };
                    if !ok {
                        return Err(ModelError::AssignmentMismatch(format!(
                            "coflow {m} entry ({i}, {j}): demand {want}, assigned {holders:?}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// One circuit: established at `establish`, transmitting from
/// `start = establish + delta` until `finish = start + size / rate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitEvent {
    pub coflow: usize,
    pub core: usize,
    pub ingress: usize,
    pub egress: usize,
    pub establish: f64,
    pub start: f64,
    pub finish: f64,
    pub size: f64,
}

impl CircuitEvent {
    pub fn new(coflow: usize, core: usize, flow: Flow, establish: f64, delta: f64, rate: f64) -> Self {
        let start = establish + delta;
        Self {
            coflow,
            core,
            ingress: flow.ingress,
            egress: flow.egress,
            establish,
            start,
            finish: start + flow.size / rate,
            size: flow.size,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    num_coflows: usize,
    events: Vec<CircuitEvent>,
}

impl Schedule {
    pub fn new(num_coflows: usize, events: Vec<CircuitEvent>) -> Self {
        Self { num_coflows, events }
    }

    pub fn events(&self) -> &[CircuitEvent] {
        &self.events
    }

    pub fn num_coflows(&self) -> usize {
        self.num_coflows
    }

    /// `T_m`, or `None` for a coflow without events.
    pub fn completion_time(&self, coflow: usize) -> Option<f64> {
        self.events
            .iter()
            .filter(|e| e.coflow == coflow)
            .map(|e| e.finish)
            .reduce(f64::max)
    }

    /// `T_m^k` for every core.
    pub fn core_completion_times(&self, coflow: usize, cores: usize) -> Vec<Option<f64>> {
        let mut out = vec![None; cores];
        for e in self.events.iter().filter(|e| e.coflow == coflow && e.core < cores) {
            let slot = &mut out[e.core];
            *slot = Some(slot.map_or(e.finish, |t: f64| t.max(e.finish)));
        }
        out
    }

    /// `T_m` for every coflow, indexed by coflow index.
    pub fn completion_times(&self) -> Result<Vec<f64>, ModelError> {
        let mut out: Vec<Option<f64>> = vec![None; self.num_coflows];
        for e in &self.events {
            if let Some(slot) = out.get_mut(e.coflow) {
                *slot = Some(slot.map_or(e.finish, |t| t.max(e.finish)));
            }
        }
        out.into_iter()
            .enumerate()
            .map(|(m, t)| t.ok_or(ModelError::MissingCoflow(m)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Port {
    Ingress(usize),
    Egress(usize),
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Port::Ingress(i) => write!(f, "ingress {}", i + 1),
            Port::Egress(j) => write!(f, "egress {}", j + 1),
        }
    }
}

/// A broken feasibility condition. Event references are indices into
/// [`Schedule::events`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    OutOfRange { event: usize },
    UnexpectedEvent { event: usize },
    MissingEvent { coflow: usize, core: usize, ingress: usize, egress: usize },
    DuplicateEvent { event: usize, first: usize },
    SizeMismatch { event: usize, expected: f64, found: f64 },
    NegativeEstablish { event: usize, establish: f64 },
    Timing { event: usize, expected_start: f64, expected_finish: f64 },
    PortConflict { core: usize, port: Port, first: usize, second: usize },
    NotEarliest { event: usize, idle_from: f64, idle_to: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutOfRange { event } => {
                write!(f, "range violation: event {event} references a core or port outside the fabric")
            }
            Violation::UnexpectedEvent { event } => {
                write!(f, "coverage violation: event {event} has no matching assigned demand")
            }
            Violation::MissingEvent { coflow, core, ingress, egress } => write!(
                f,
                "coverage violation: coflow index {coflow} flow ({}, {}) on core {} has no event",
                ingress + 1,
                egress + 1,
                core + 1
            ),
            Violation::DuplicateEvent { event, first } => {
                write!(f, "coverage violation: event {event} duplicates event {first}")
            }
            Violation::SizeMismatch { event, expected, found } => write!(
                f,
                "coverage violation: event {event} carries {found}, assigned size is {expected}"
            ),
            Violation::NegativeEstablish { event, establish } => {
                write!(f, "timing violation: event {event} established at {establish} < 0")
            }
            Violation::Timing { event, expected_start, expected_finish } => write!(
                f,
                "timing violation: event {event} should start at {expected_start} and finish at {expected_finish}"
            ),
            Violation::PortConflict { core, port, first, second } => write!(
                f,
                "port-exclusivity violation: events {first} and {second} overlap on {port} of core {}",
                core + 1
            ),
            Violation::NotEarliest { event, idle_from, idle_to } => write!(
                f,
                "work-conservation violation: both ports of event {event} idle during [{idle_from}, {idle_to})"
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerificationReport {
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks a schedule against its assignment and workload: coverage, timing
/// arithmetic, port exclusivity and the list-scheduling density property
/// (before an event is established, at least one of its two ports is
/// occupied at every instant).
pub fn verify_schedule(
    schedule: &Schedule,
    assignment: &FlowAssignment,
    workload: &Workload,
) -> Result<VerificationReport, ModelError> {
    assignment.validate(workload)?;
    if schedule.num_coflows() != workload.len() {
        return Err(ModelError::AssignmentMismatch(format!(
            "schedule covers {} coflows, workload has {}",
            schedule.num_coflows(),
            workload.len()
        )));
    }
    let config = workload.config();
    let (n, k, delta) = (config.n(), config.num_cores(), config.delta());
    let events = schedule.events();
    let mut violations = Vec::new();

    // coverage
    let mut owner = vec![None; workload.len() * k * n * n];
    let slot = |e: &CircuitEvent| ((e.coflow * k + e.core) * n + e.ingress) * n + e.egress;
    let mut in_range = vec![false; events.len()];
    for (idx, e) in events.iter().enumerate() {
        if e.coflow >= workload.len() || e.core >= k || e.ingress >= n || e.egress >= n {
            violations.push(Violation::OutOfRange { event: idx });
            continue;
        }
        in_range[idx] = true;
        let expected = assignment.part(e.coflow, e.core).get(e.ingress, e.egress);
        if expected <= 0.0 {
            violations.push(Violation::UnexpectedEvent { event: idx });
            continue;
        }
        match owner[slot(e)] {
            Some(first) => violations.push(Violation::DuplicateEvent { event: idx, first }),
            None => owner[slot(e)] = Some(idx),
        }
        if (e.size - expected).abs() > TIME_TOLERANCE {
            violations.push(Violation::SizeMismatch {
                event: idx,
                expected,
                found: e.size,
            });
        }
    }
    for m in 0..workload.len() {
        for core in 0..k {
            for flow in assignment.part(m, core).flows() {
                let s = ((m * k + core) * n + flow.ingress) * n + flow.egress;
                if owner[s].is_none() {
                    violations.push(Violation::MissingEvent {
                        coflow: m,
                        core,
                        ingress: flow.ingress,
                        egress: flow.egress,
                    });
                }
            }
        }
    }

    // timing
    for (idx, e) in events.iter().enumerate().filter(|(i, _)| in_range[*i]) {
        if e.establish < -TIME_TOLERANCE {
            violations.push(Violation::NegativeEstablish {
                event: idx,
                establish: e.establish,
            });
        }
        let rate = config.rate(e.core);
        let expected_start = e.establish + delta;
        let expected_finish = expected_start + e.size / rate;
        if (e.start - e.establish - delta).abs() > TIME_TOLERANCE
            || (e.finish - e.start - e.size / rate).abs() > TIME_TOLERANCE
        {
            violations.push(Violation::Timing {
                event: idx,
                expected_start,
                expected_finish,
            });
        }
    }

    // per-port occupancy lists, sorted by establish time
    let mut by_port: Vec<Vec<usize>> = vec![Vec::new(); k * 2 * n];
    let port_slot = |core: usize, port: Port| match port {
        Port::Ingress(i) => core * 2 * n + i,
        Port::Egress(j) => core * 2 * n + n + j,
    };
    for (idx, e) in events.iter().enumerate().filter(|(i, _)| in_range[*i]) {
        by_port[port_slot(e.core, Port::Ingress(e.ingress))].push(idx);
        by_port[port_slot(e.core, Port::Egress(e.egress))].push(idx);
    }
    for list in &mut by_port {
        list.sort_by(|&a, &b| {
            events[a]
                .establish
                .total_cmp(&events[b].establish)
                .then(a.cmp(&b))
        });
    }

    // port exclusivity
    for core in 0..k {
        for p in 0..n {
            for port in [Port::Ingress(p), Port::Egress(p)] {
                let list = &by_port[port_slot(core, port)];
                let mut latest: Option<usize> = None;
                for &idx in list {
                    if let Some(prev) = latest {
                        if events[idx].establish < events[prev].finish - TIME_TOLERANCE {
                            violations.push(Violation::PortConflict {
                                core,
                                port,
                                first: prev,
                                second: idx,
                            });
                        }
                        if events[idx].finish > events[prev].finish {
                            latest = Some(idx);
                        }
                    } else {
                        latest = Some(idx);
                    }
                }
            }
        }
    }

    // density: [0, establish) must be covered by occupancy of either port
    for (idx, e) in events.iter().enumerate().filter(|(i, _)| in_range[*i]) {
        if e.establish <= TIME_TOLERANCE {
            continue;
        }
        let mut intervals: Vec<(f64, f64)> = by_port[port_slot(e.core, Port::Ingress(e.ingress))]
            .iter()
            .chain(&by_port[port_slot(e.core, Port::Egress(e.egress))])
            .filter(|&&o| o != idx && events[o].establish < e.establish)
            .map(|&o| (events[o].establish, events[o].finish))
            .collect();
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut covered = 0.0_f64;
        let mut gap = None;
        for (s, f) in intervals {
            if s > covered + TIME_TOLERANCE {
                gap = Some((covered, s));
                break;
            }
            covered = covered.max(f);
        }
        if gap.is_none() && covered < e.establish - TIME_TOLERANCE {
            gap = Some((covered, e.establish));
        }
        if let Some((from, to)) = gap {
            violations.push(Violation::NotEarliest {
                event: idx,
                idle_from: from,
                idle_to: to.min(e.establish),
            });
        }
    }

    Ok(VerificationReport { violations })
}
