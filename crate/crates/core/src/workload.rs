//! Workload construction: receiver-level records split into flows, seeded
//! synthetic generation, weight models and the trace CSV format.
//!
//! Trace CSV: header `coflow_id,weight,src,dst,size`, 1-based ports, one row
//! per flow. Rows with the same `(coflow_id, src, dst)` are summed. Coflows
//! keep the order in which their ids first appear.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal, Pareto};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CoflowSpec, DemandMatrix, ModelError, NetworkConfig, Workload};
use crate::rng::{self, Purpose};

/// Floor for truncated normal weights, as a fraction of the mean.
pub const NORMAL_TRUNCATION: f64 = 1e-6;
pub const DEFAULT_PERTURBATION: f64 = 0.1;

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("coflow {coflow}: receiver {receiver} has no senders")]
    EmptySenders { coflow: u64, receiver: usize },
    #[error("coflow {coflow}: receiver {receiver} has non-positive byte count {bytes}")]
    NonPositiveBytes { coflow: u64, receiver: usize, bytes: f64 },
    #[error("perturbation must lie in [0, 1), got {0}")]
    BadPerturbation(f64),
    #[error("line {line}: port {port} outside 1..={n}")]
    PortOutOfRange { line: usize, port: usize, n: usize },
    #[error("receiver record port {port} outside 0..{n}")]
    RecordPortOutOfRange { port: usize, n: usize },
    #[error("line {line}: coflow {coflow} has weight {found}, earlier rows say {expected}")]
    InconsistentWeight { line: usize, coflow: u64, expected: f64, found: f64 },
    #[error("coflow {coflow} carries no bytes")]
    EmptyCoflow { coflow: u64 },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("invalid weight model: {0}")]
    BadWeightModel(String),
    #[error("invalid synthetic parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Bytes received by one port of a coflow and the ports that sent them.
/// Ports are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverRecord {
    pub coflow_id: u64,
    pub receiver: usize,
    pub bytes: f64,
    pub senders: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum WeightModel {
    Constant { w: f64 },
    Uniform { lo: f64, hi: f64 },
    /// Samples below `1e-6 * mu` are raised to that floor.
    Normal { mu: f64, sigma: f64 },
}

impl Default for WeightModel {
    fn default() -> Self {
        WeightModel::Uniform { lo: 1.0, hi: 10.0 }
    }
}

impl WeightModel {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        let ok = match *self {
            WeightModel::Constant { w } => w.is_finite() && w > 0.0,
            WeightModel::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi,
            WeightModel::Normal { mu, sigma } => mu.is_finite() && sigma.is_finite() && mu > 0.0 && sigma >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(WorkloadError::BadWeightModel(format!("{self:?}")))
        }
    }
}

pub fn sample_weights(model: WeightModel, m: usize, seed: u64) -> Result<Vec<f64>, WorkloadError> {
    model.validate()?;
    let mut rng = rng::stream(seed, Purpose::Weights);
    let weights = match model {
        WeightModel::Constant { w } => vec![w; m],
        WeightModel::Uniform { lo, hi } if lo == hi => vec![lo; m],
        WeightModel::Uniform { lo, hi } => (0..m).map(|_| rng.random_range(lo..hi)).collect(),
        WeightModel::Normal { mu, sigma } => {
            let normal = Normal::new(mu, sigma).map_err(|e| WorkloadError::BadWeightModel(e.to_string()))?;
            let floor = NORMAL_TRUNCATION * mu;
            (0..m).map(|_| normal.sample(&mut rng).max(floor)).collect()
        }
    };
    Ok(weights)
}

/// Splits each receiver's bytes over its senders in proportion to
/// `u_s ~ U[1 - eps, 1 + eps]`. Returns one demand matrix per coflow id, in
/// order of first appearance.
pub fn expand_receivers(
    records: &[ReceiverRecord],
    n: usize,
    eps: f64,
    seed: u64,
) -> Result<Vec<(u64, DemandMatrix)>, WorkloadError> {
    if !(0.0..1.0).contains(&eps) {
        return Err(WorkloadError::BadPerturbation(eps));
    }
    let mut rng = rng::stream(seed, Purpose::Perturbation);
    let mut out: Vec<(u64, DemandMatrix)> = Vec::new();
    let mut slot: HashMap<u64, usize> = HashMap::new();
    for r in records {
        if r.senders.is_empty() {
            return Err(WorkloadError::EmptySenders { coflow: r.coflow_id, receiver: r.receiver });
        }
        if !(r.bytes.is_finite() && r.bytes > 0.0) {
            return Err(WorkloadError::NonPositiveBytes { coflow: r.coflow_id, receiver: r.receiver, bytes: r.bytes });
        }
        for &port in r.senders.iter().chain(std::iter::once(&r.receiver)) {
            if port >= n {
                return Err(WorkloadError::RecordPortOutOfRange { port, n });
            }
        }
        let u: Vec<f64> = r.senders.iter().map(|_| 1.0 - eps + 2.0 * eps * rng.random::<f64>()).collect();
        let total: f64 = u.iter().sum();
        let idx = match slot.get(&r.coflow_id) {
            Some(&i) => i,
            None => {
                slot.insert(r.coflow_id, out.len());
                out.push((r.coflow_id, DemandMatrix::zeros(n)?));
                out.len() - 1
            }
        };
        for (&s, us) in r.senders.iter().zip(&u) {
            out[idx].1.add_in_place(s, r.receiver, r.bytes * us / total)?;
        }
    }
    Ok(out)
}

/// Parameters of the synthetic generator.
///
/// Each coflow picks a receiver count and, per receiver, a sender count,
/// both uniform in `1..=max_width` over distinct ports. A receiver gets
/// `senders * Pareto(pareto_scale, pareto_shape)` bytes, split with
/// [`expand_receivers`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub coflows: usize,
    pub pareto_scale: f64,
    pub pareto_shape: f64,
    /// Defaults to `max(1, N / 2)`.
    pub max_width: Option<usize>,
    pub perturbation: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            coflows: 100,
            pareto_scale: 1.0,
            pareto_shape: 1.2,
            max_width: None,
            perturbation: DEFAULT_PERTURBATION,
        }
    }
}

pub fn synth_receivers(n: usize, params: &SynthParams, seed: u64) -> Result<Vec<ReceiverRecord>, WorkloadError> {
    let width = params.max_width.unwrap_or((n / 2).max(1));
    if params.coflows == 0 || width == 0 || width > n {
        return Err(WorkloadError::BadParams(format!(
            "need at least one coflow and 1 <= max_width <= N, got {} coflows, width {width}, N = {n}",
            params.coflows
        )));
    }
    let pareto = Pareto::new(params.pareto_scale, params.pareto_shape)
        .map_err(|e| WorkloadError::BadParams(e.to_string()))?;
    let mut rng = rng::stream(seed, Purpose::Demands);
    let mut records = Vec::new();
    for c in 0..params.coflows {
        let receivers = rng.random_range(1..=width);
        for receiver in index::sample(&mut rng, n, receivers) {
            let count = rng.random_range(1..=width);
            let mut senders = index::sample(&mut rng, n, count).into_vec();
            senders.sort_unstable();
            let bytes = count as f64 * pareto.sample(&mut rng);
            records.push(ReceiverRecord { coflow_id: c as u64 + 1, receiver, bytes, senders });
        }
    }
    Ok(records)
}

pub fn synth_workload(
    config: &NetworkConfig,
    params: &SynthParams,
    weights: WeightModel,
    seed: u64,
) -> Result<Workload, WorkloadError> {
    let records = synth_receivers(config.n(), params, seed)?;
    let demands = expand_receivers(&records, config.n(), params.perturbation, seed)?;
    let w = sample_weights(weights, demands.len(), seed)?;
    let specs = demands
        .into_iter()
        .zip(w)
        .map(|((id, d), w)| CoflowSpec::new(id, w, d))
        .collect();
    Ok(Workload::new(config.clone(), specs)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    coflow_id: u64,
    weight: f64,
    src: usize,
    dst: usize,
    size: f64,
}

pub fn read_trace<R: Read>(reader: R, config: &NetworkConfig) -> Result<Workload, WorkloadError> {
    let n = config.n();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut coflows: Vec<(u64, f64, DemandMatrix)> = Vec::new();
    let mut slot: HashMap<u64, usize> = HashMap::new();
    for (k, row) in rdr.deserialize::<TraceRow>().enumerate() {
        // header is line 1
        let line = k + 2;
        let row = row.map_err(|e| WorkloadError::Malformed { line, message: e.to_string() })?;
        for port in [row.src, row.dst] {
            if port == 0 || port > n {
                return Err(WorkloadError::PortOutOfRange { line, port, n });
            }
        }
        if !(row.size.is_finite() && row.size >= 0.0) {
            return Err(WorkloadError::Malformed { line, message: format!("size must be non-negative, got {}", row.size) });
        }
        if !(row.weight.is_finite() && row.weight > 0.0) {
            return Err(WorkloadError::Malformed { line, message: format!("weight must be positive, got {}", row.weight) });
        }
        let idx = match slot.get(&row.coflow_id) {
            Some(&i) => {
                if coflows[i].1 != row.weight {
                    return Err(WorkloadError::InconsistentWeight {
                        line,
                        coflow: row.coflow_id,
                        expected: coflows[i].1,
                        found: row.weight,
                    });
                }
                i
            }
            None => {
                slot.insert(row.coflow_id, coflows.len());
                coflows.push((row.coflow_id, row.weight, DemandMatrix::zeros(n)?));
                coflows.len() - 1
            }
        };
        if row.size > 0.0 {
            coflows[idx].2.add_in_place(row.src - 1, row.dst - 1, row.size)?;
        }
    }
    let mut specs = Vec::with_capacity(coflows.len());
    for (id, w, d) in coflows {
        if d.is_zero() {
            return Err(WorkloadError::EmptyCoflow { coflow: id });
        }
        specs.push(CoflowSpec::new(id, w, d));
    }
    Ok(Workload::new(config.clone(), specs)?)
}

pub fn load_trace(path: impl AsRef<Path>, config: &NetworkConfig) -> Result<Workload, WorkloadError> {
    read_trace(std::fs::File::open(path)?, config)
}

pub fn write_trace<W: Write>(workload: &Workload, writer: W) -> Result<(), WorkloadError> {
    let mut wtr = csv::Writer::from_writer(writer);
    for c in workload.coflows() {
        for f in c.demand.flows() {
            wtr.serialize(TraceRow {
                coflow_id: c.id,
                weight: c.weight,
                src: f.ingress + 1,
                dst: f.egress + 1,
                size: f.size,
            })
            .map_err(std::io::Error::from)?;
        }
    }
    wtr.flush()?;
    Ok(())
}
