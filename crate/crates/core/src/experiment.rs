//! Experiment runner behind the `coflow-sim` binary: JSON config, sweeps,
//! CSV/JSON reports, schedule files, verification and oracle batches.
//!
//! A config fully determines a run:
//!
//! ```json
//! {
//!   "mode": "ocs", "n": 16, "rates": [10, 20, 30], "delta": 8,
//!   "workload": {"kind": "synthetic", "coflows": 100},
//!   "weights": {"model": "uniform", "lo": 1, "hi": 10},
//!   "algorithms": ["ours", "rho", "rand"],
//!   "seeds": [1, 2, 3],
//!   "sweep": {"axis": "delta", "values": [2, 4, 6, 8, 10, 12]},
//!   "output_dir": "out"
//! }
//! ```
//!
//! `seeds` also accepts `{"start": 0, "count": 20}`. Workload kinds are
//! `synthetic` ([`SynthParams`] fields), `trace` (`path`, relative to the
//! config file) and `tiny` (`max_flows`, `max_coflows`).

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{self, BaselineError, BaselineKind};
use crate::bounds::{self, AuditScope, BoundAudit, BoundsError};
use crate::metrics::{self, MetricsError, PERCENTILE_METHOD};
use crate::model::{
    verify_schedule, CircuitEvent, DemandMatrix, FabricMode, FlowAssignment, ModelError, NetworkConfig,
    Schedule, Workload,
};
use crate::oracle::{self, OracleError};
use crate::rng::RNG_ALGORITHM;
use crate::scheduler::{self, SchedulerError, SchedulerOutput};
use crate::workload::{self, SynthParams, WeightModel, WorkloadError};

pub const THREADS_ENV: &str = "COFLOW_SIM_THREADS";

pub const CSV_COLUMNS: [&str; 17] = [
    "algorithm",
    "seed",
    "mode",
    "K",
    "N",
    "M",
    "delta",
    "total_weighted_cct",
    "norm_w",
    "p95_cct",
    "p99_cct",
    "gamma_w",
    "psi",
    "lemma2_max_slack",
    "lemma3_max_slack",
    "theorem_bound_ratio",
    "runtime_ms",
];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config {path}: {message}")]
    Config { path: String, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("schedule file: {0}")]
    ScheduleFile(String),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ours,
    #[serde(alias = "rho-assign")]
    Rho,
    #[serde(alias = "rand-assign")]
    Rand,
}

impl Algorithm {
    pub fn baseline(self) -> Option<BaselineKind> {
        match self {
            Algorithm::Ours => None,
            Algorithm::Rho => Some(BaselineKind::RhoAssign),
            Algorithm::Rand => Some(BaselineKind::RandAssign),
        }
    }

    fn scope(self) -> AuditScope {
        match self {
            Algorithm::Ours => AuditScope::MainAlgorithm,
            _ => AuditScope::Baseline,
        }
    }
}

impl From<BaselineKind> for Algorithm {
    fn from(kind: BaselineKind) -> Self {
        match kind {
            BaselineKind::RhoAssign => Algorithm::Rho,
            BaselineKind::RandAssign => Algorithm::Rand,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Ours => "ours",
            Algorithm::Rho => "rho",
            Algorithm::Rand => "rand",
        })
    }
}

impl FromStr for Algorithm {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("ours") {
            return Ok(Algorithm::Ours);
        }
        s.parse::<BaselineKind>()
            .map(Algorithm::from)
            .map_err(|_| ExperimentError::Invalid(format!("unknown algorithm `{s}` (expected ours, rho or rand)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WorkloadSource {
    Synthetic(SynthParams),
    Trace { path: PathBuf },
    Tiny {
        #[serde(default = "default_tiny_flows")]
        max_flows: usize,
        #[serde(default = "default_tiny_coflows")]
        max_coflows: usize,
    },
}

fn default_tiny_flows() -> usize {
    oracle::DEFAULT_MAX_FLOWS
}

fn default_tiny_coflows() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    Range { start: u64, count: u64 },
}

impl Seeds {
    pub fn expand(&self) -> Vec<u64> {
        match self {
            Seeds::List(v) => v.clone(),
            Seeds::Range { start, count } => (*start..start + count).collect(),
        }
    }
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds::List(vec![0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Delta,
    N,
    M,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_mode")]
    pub mode: FabricMode,
    pub n: usize,
    pub rates: Vec<f64>,
    #[serde(default)]
    pub delta: f64,
    pub workload: WorkloadSource,
    #[serde(default)]
    pub weights: WeightModel,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub write_schedules: bool,
}

fn default_mode() -> FabricMode {
    FabricMode::Ocs
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Ours, Algorithm::Rho, Algorithm::Rand]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for ExperimentConfig {
    /// N=16, M=100, rates [10, 20, 30], delta 8, all three algorithms.
    fn default() -> Self {
        ExperimentConfig {
            mode: FabricMode::Ocs,
            n: 16,
            rates: vec![10.0, 20.0, 30.0],
            delta: 8.0,
            workload: WorkloadSource::Synthetic(SynthParams::default()),
            weights: WeightModel::default(),
            algorithms: default_algorithms(),
            seeds: Seeds::default(),
            sweep: None,
            output_dir: default_output_dir(),
            write_schedules: false,
        }
    }
}

/// One point of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub index: usize,
    pub network: NetworkConfig,
    /// Requested coflow count for synthetic workloads.
    pub coflows: Option<usize>,
}

impl ExperimentConfig {
    /// Parses and validates; errors name the offending field and position.
    pub fn from_json(text: &str, origin: &str) -> Result<Self, ExperimentError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            ExperimentError::Config {
                path: origin.to_string(),
                message: format!("field `{field}`: {}", e.into_inner()),
            }
        })?;
        config.points().map_err(|e| ExperimentError::Config {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        Ok(config)
    }

    /// Reads a config file. A relative trace path is resolved against the
    /// config's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut config = Self::from_json(&text, &path.display().to_string())?;
        if let WorkloadSource::Trace { path: trace } = &mut config.workload {
            if trace.is_relative() {
                if let Some(dir) = path.parent() {
                    *trace = dir.join(&*trace);
                }
            }
        }
        Ok(config)
    }

    pub fn network(&self) -> Result<NetworkConfig, ModelError> {
        NetworkConfig::new(self.mode, self.n, self.rates.clone(), self.delta)
    }

    pub fn points(&self) -> Result<Vec<SweepPoint>, ExperimentError> {
        self.weights.validate()?;
        if self.algorithms.is_empty() {
            return Err(ExperimentError::Invalid("field `algorithms`: empty list".into()));
        }
        if self.seeds.expand().is_empty() {
            return Err(ExperimentError::Invalid("field `seeds`: no seeds".into()));
        }
        let base_m = match &self.workload {
            WorkloadSource::Synthetic(p) => Some(p.coflows),
            _ => None,
        };
        let Some(sweep) = &self.sweep else {
            return Ok(vec![SweepPoint { index: 0, network: self.network()?, coflows: base_m }]);
        };
        if sweep.values.is_empty() {
            return Err(ExperimentError::Invalid("field `sweep.values`: empty list".into()));
        }
        let integral = |v: f64, what: &str| -> Result<usize, ExperimentError> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(ExperimentError::Invalid(format!(
                    "field `sweep.values`: {what} must be a positive integer, got {v}"
                )))
            }
        };
        sweep
            .values
            .iter()
            .enumerate()
            .map(|(index, &v)| {
                let (network, coflows) = match sweep.axis {
                    SweepAxis::Delta => (NetworkConfig::new(self.mode, self.n, self.rates.clone(), v)?, base_m),
                    SweepAxis::N => {
                        if matches!(self.workload, WorkloadSource::Trace { .. }) {
                            return Err(ExperimentError::Invalid(
                                "field `sweep.axis`: n cannot be swept over a trace".into(),
                            ));
                        }
                        (NetworkConfig::new(self.mode, integral(v, "N")?, self.rates.clone(), self.delta)?, base_m)
                    }
                    SweepAxis::M => {
                        if base_m.is_none() {
                            return Err(ExperimentError::Invalid(
                                "field `sweep.axis`: m can only be swept for synthetic workloads".into(),
                            ));
                        }
                        (self.network()?, Some(integral(v, "M")?))
                    }
                };
                Ok(SweepPoint { index, network, coflows })
            })
            .collect()
    }
}

/// Builds the workload of one sweep point and seed. `trace` is the parsed
/// trace for trace-backed configs.
pub fn build_workload(
    config: &ExperimentConfig,
    point: &SweepPoint,
    seed: u64,
    trace: Option<&Workload>,
) -> Result<Workload, ExperimentError> {
    Ok(match &config.workload {
        WorkloadSource::Synthetic(p) => {
            let params = SynthParams { coflows: point.coflows.unwrap_or(p.coflows), ..p.clone() };
            workload::synth_workload(&point.network, &params, config.weights, seed)?
        }
        WorkloadSource::Trace { path } => match trace {
            Some(w) => w.with_config(point.network.clone())?,
            None => workload::load_trace(path, &point.network)?,
        },
        WorkloadSource::Tiny { max_flows, max_coflows } => {
            oracle::tiny_workload_on(&point.network, seed, *max_flows, *max_coflows)?
        }
    })
}

pub fn run_algorithm(algorithm: Algorithm, workload: &Workload, seed: u64) -> Result<SchedulerOutput, ExperimentError> {
    Ok(match algorithm.baseline() {
        None if workload.config().mode() == FabricMode::Eps => scheduler::run_eps(workload)?,
        None => scheduler::run(workload)?,
        Some(kind) => baselines::run_baseline(kind, workload, Some(seed))?,
    })
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub mode: FabricMode,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub delta: f64,
    pub total_weighted_cct: f64,
    pub norm_w: f64,
    pub p95_cct: f64,
    pub p99_cct: f64,
    pub gamma_w: f64,
    pub psi: usize,
    pub lemma2_max_slack: Option<f64>,
    pub lemma3_max_slack: f64,
    pub theorem_bound_ratio: f64,
    pub runtime_ms: f64,
    #[serde(skip)]
    pub point: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub point: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub all_checks_passed: bool,
    pub audit: BoundAudit,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportMetadata {
    pub generated_at_unix: u64,
    pub crate_version: &'static str,
    pub rng: &'static str,
    pub percentile_method: &'static str,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub metadata: ReportMetadata,
    pub points: Vec<SweepPoint>,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub report: Report,
}

struct Job<'a> {
    point: &'a SweepPoint,
    seed: u64,
}

struct JobResult {
    rows: Vec<ResultRow>,
    records: Vec<RunRecord>,
    schedules: Vec<(Algorithm, SchedulerOutput)>,
    workload: Workload,
}

fn run_job(config: &ExperimentConfig, job: &Job<'_>, trace: Option<&Workload>) -> Result<JobResult, ExperimentError> {
    let workload = build_workload(config, job.point, job.seed, trace)?;
    let mut algorithms = config.algorithms.clone();
    algorithms.sort_unstable();
    algorithms.dedup();
    // the main algorithm always runs: it is the NormW reference
    let mut outputs = Vec::with_capacity(algorithms.len() + 1);
    let clock = Instant::now();
    let ours = run_algorithm(Algorithm::Ours, &workload, job.seed)?;
    let ours_ms = clock.elapsed().as_secs_f64() * 1e3;
    let reference = ours.total_weighted_cct();
    outputs.push((Algorithm::Ours, ours, ours_ms));
    for &alg in algorithms.iter().filter(|a| **a != Algorithm::Ours) {
        let clock = Instant::now();
        let out = run_algorithm(alg, &workload, job.seed)?;
        outputs.push((alg, out, clock.elapsed().as_secs_f64() * 1e3));
    }
    if !algorithms.contains(&Algorithm::Ours) {
        outputs.remove(0);
    }

    let config_net = workload.config();
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut schedules = Vec::new();
    for (alg, out, ms) in outputs {
        let ccts = out.schedule.completion_times()?;
        let audit = &out.audit;
        rows.push(ResultRow {
            algorithm: alg,
            seed: job.seed,
            mode: config_net.mode(),
            k: config_net.num_cores(),
            n: config_net.n(),
            m: workload.len(),
            delta: config_net.delta(),
            total_weighted_cct: out.total_weighted_cct(),
            norm_w: metrics::norm_w(out.total_weighted_cct(), reference)?,
            p95_cct: metrics::tail_cct(&ccts, 95.0)?,
            p99_cct: metrics::tail_cct(&ccts, 99.0)?,
            gamma_w: audit.gamma_w,
            psi: audit.psi,
            lemma2_max_slack: audit.checks.assignment_prefix.map(|c| c.excess),
            lemma3_max_slack: audit.checks.scheduling_prefix.excess,
            theorem_bound_ratio: audit.theorem_bound_ratio(),
            runtime_ms: ms,
            point: job.point.index,
        });
        records.push(RunRecord {
            point: job.point.index,
            seed: job.seed,
            algorithm: alg,
            all_checks_passed: audit.checks.all_passed(),
            audit: out.audit.clone(),
        });
        if config.write_schedules {
            schedules.push((alg, out));
        }
    }
    Ok(JobResult { rows, records, schedules, workload })
}

/// Builds a rayon pool honouring `COFLOW_SIM_THREADS` (unset or 0: one
/// thread per CPU).
pub fn thread_pool() -> Result<rayon::ThreadPool, ExperimentError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| ExperimentError::Invalid(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ExperimentError::Invalid(e.to_string()))
}

fn load_shared_trace(config: &ExperimentConfig, points: &[SweepPoint]) -> Result<Option<Workload>, ExperimentError> {
    match &config.workload {
        WorkloadSource::Trace { path } => Ok(Some(workload::load_trace(path, &points[0].network)?)),
        _ => Ok(None),
    }
}

/// Runs every (sweep point, seed, algorithm) combination and writes
/// `results.csv` and `report.json` (plus schedules and workloads when
/// `write_schedules` is set) into the output directory.
pub fn cmd_run(config: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    let points = config.points()?;
    let seeds = config.seeds.expand();
    let trace = load_shared_trace(config, &points)?;
    let jobs: Vec<Job<'_>> = points
        .iter()
        .flat_map(|point| seeds.iter().map(move |&seed| Job { point, seed }))
        .collect();
    let results: Vec<JobResult> = jobs
        .par_iter()
        .map(|job| run_job(config, job, trace.as_ref()))
        .collect::<Result<_, _>>()?;

    let out_dir = &config.output_dir;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut rows: Vec<ResultRow> = Vec::new();
    let mut runs = Vec::new();
    for (job, result) in jobs.iter().zip(results) {
        if config.write_schedules {
            let tag = format!("p{}_s{}", job.point.index, job.seed);
            let wdir = out_dir.join("workloads");
            let sdir = out_dir.join("schedules");
            fs::create_dir_all(&wdir).map_err(io_err(&wdir))?;
            fs::create_dir_all(&sdir).map_err(io_err(&sdir))?;
            let wpath = wdir.join(format!("{tag}.csv"));
            workload::write_trace(&result.workload, fs::File::create(&wpath).map_err(io_err(&wpath))?)?;
            for (alg, out) in &result.schedules {
                let spath = sdir.join(format!("{tag}_{alg}.json"));
                let file = ScheduleFile::new(&result.workload, *alg, &out.order, &out.schedule);
                write_json(&spath, &file)?;
            }
        }
        rows.extend(result.rows);
        runs.extend(result.records);
    }
    rows.sort_by_key(|r| (r.point, r.seed, r.algorithm));
    runs.sort_by_key(|r| (r.point, r.seed, r.algorithm));

    let csv_path = out_dir.join("results.csv");
    write_results_csv(&csv_path, &rows)?;
    let report = Report {
        metadata: ReportMetadata {
            generated_at_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            crate_version: env!("CARGO_PKG_VERSION"),
            rng: RNG_ALGORITHM,
            percentile_method: PERCENTILE_METHOD,
            config: config.clone(),
        },
        points,
        runs,
    };
    write_json(&out_dir.join("report.json"), &report)?;
    Ok(RunOutput { rows, report })
}

pub fn write_results_csv(path: &Path, rows: &[ResultRow]) -> Result<(), ExperimentError> {
    let mut wtr = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        wtr.write_record(CSV_COLUMNS)?;
    }
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush().map_err(io_err(path))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let mut file = std::io::BufWriter::new(fs::File::create(path).map_err(io_err(path))?);
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n").map_err(io_err(path))?;
    file.flush().map_err(io_err(path))?;
    Ok(())
}

/// One circuit in a schedule file; cores and ports are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub coflow_id: u64,
    pub core: usize,
    pub ingress: usize,
    pub egress: usize,
    pub establish: f64,
    pub start: f64,
    pub finish: f64,
    pub size: f64,
}

/// Self-describing schedule: the fabric, the algorithm that produced it,
/// the coflow execution order (by id) and every circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub network: NetworkConfig,
    pub algorithm: Algorithm,
    pub order: Vec<u64>,
    pub events: Vec<EventRecord>,
}

impl ScheduleFile {
    pub fn new(workload: &Workload, algorithm: Algorithm, order: &[usize], schedule: &Schedule) -> Self {
        let ids: Vec<u64> = workload.coflows().iter().map(|c| c.id).collect();
        ScheduleFile {
            network: workload.config().clone(),
            algorithm,
            order: order.iter().map(|&m| ids[m]).collect(),
            events: schedule
                .events()
                .iter()
                .map(|e| EventRecord {
                    coflow_id: ids[e.coflow],
                    core: e.core + 1,
                    ingress: e.ingress + 1,
                    egress: e.egress + 1,
                    establish: e.establish,
                    start: e.start,
                    finish: e.finish,
                    size: e.size,
                })
                .collect(),
        }
    }

    /// Rebuilds the order, assignment and schedule against `workload`.
    pub fn resolve(&self, workload: &Workload) -> Result<(Vec<usize>, FlowAssignment, Schedule), ExperimentError> {
        let bad = |msg: String| ExperimentError::ScheduleFile(msg);
        let index: HashMap<u64, usize> = workload.coflows().iter().enumerate().map(|(m, c)| (c.id, m)).collect();
        let lookup = |id: u64| index.get(&id).copied().ok_or_else(|| bad(format!("coflow id {id} is not in the trace")));
        let order = self.order.iter().map(|&id| lookup(id)).collect::<Result<Vec<_>, _>>()?;
        let config = workload.config();
        let (n, k) = (config.n(), config.num_cores());
        let mut parts = vec![vec![DemandMatrix::zeros(n)?; k]; workload.len()];
        let mut events = Vec::with_capacity(self.events.len());
        for (idx, e) in self.events.iter().enumerate() {
            let m = lookup(e.coflow_id)?;
            if !(1..=k).contains(&e.core) || !(1..=n).contains(&e.ingress) || !(1..=n).contains(&e.egress) {
                return Err(bad(format!("event {idx}: core or port outside the fabric")));
            }
            let (core, i, j) = (e.core - 1, e.ingress - 1, e.egress - 1);
            parts[m][core] = parts[m][core].add_entry(i, j, e.size).map_err(|err| bad(format!("event {idx}: {err}")))?;
            events.push(CircuitEvent {
                coflow: m,
                core,
                ingress: i,
                egress: j,
                establish: e.establish,
                start: e.start,
                finish: e.finish,
                size: e.size,
            });
        }
        Ok((order, FlowAssignment::new(parts), Schedule::new(workload.len(), events)))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyOutcome {
    /// Feasibility problems, one line each.
    pub violations: Vec<String>,
    /// Failed bound audits, one line each.
    pub audit_failures: Vec<String>,
}

impl VerifyOutcome {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.audit_failures.is_empty()
    }
}

/// Verifies a schedule file against a trace: feasibility first, then every
/// bound audit that applies to the recorded algorithm.
pub fn cmd_verify(schedule_path: &Path, trace_path: &Path) -> Result<VerifyOutcome, ExperimentError> {
    let text = fs::read_to_string(schedule_path).map_err(io_err(schedule_path))?;
    let file: ScheduleFile = serde_json::from_str(&text)?;
    let workload = workload::load_trace(trace_path, &file.network)?;
    verify_file(&file, &workload)
}

pub fn verify_file(file: &ScheduleFile, workload: &Workload) -> Result<VerifyOutcome, ExperimentError> {
    let (order, assignment, schedule) = file.resolve(workload)?;
    let mut outcome = VerifyOutcome::default();
    let report = match verify_schedule(&schedule, &assignment, workload) {
        Ok(r) => r,
        Err(e) => {
            outcome.violations.push(format!("coverage violation: {e}"));
            return Ok(outcome);
        }
    };
    outcome.violations = report.violations.iter().map(ToString::to_string).collect();
    if !outcome.violations.is_empty() {
        return Ok(outcome);
    }
    let audit = bounds::audit(workload, &order, &assignment, &schedule, file.algorithm.scope())?;
    let c = &audit.checks;
    let named = [
        ("per-coflow lower bound", Some(c.global_lb)),
        ("assignment prefix bound", c.assignment_prefix),
        ("scheduling prefix bound", Some(c.scheduling_prefix)),
        ("weight-ratio bound", c.weight_ratio_bound),
        ("weight-concentration bound", c.concentration_bound),
        ("packet-switched prefix bound", c.eps_prefix),
        ("packet-switched weight-ratio bound", c.eps_weight_ratio_bound),
    ];
    for (name, check) in named {
        if let Some(check) = check.filter(|c| !c.passed()) {
            outcome.audit_failures.push(format!("audit failure: {name} exceeded by {}", check.excess));
        }
    }
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub seed: u64,
    pub flows: usize,
    pub algorithm_total: f64,
    pub oracle_total: f64,
    pub lb_total: f64,
    pub algorithm_over_oracle: f64,
    pub oracle_over_lb: f64,
}

/// Compares the main algorithm with the exhaustive oracle on every seed of
/// the base configuration and writes `oracle.csv`.
pub fn cmd_oracle(config: &ExperimentConfig) -> Result<Vec<OracleRow>, ExperimentError> {
    let points = config.points()?;
    let trace = load_shared_trace(config, &points)?;
    let point = &points[0];
    let rows: Vec<OracleRow> = config
        .seeds
        .expand()
        .par_iter()
        .map(|&seed| {
            let w = build_workload(config, point, seed, trace.as_ref())?;
            let c = oracle::compare(&w, oracle::DEFAULT_MAX_FLOWS)?;
            Ok(OracleRow {
                seed,
                flows: c.flows,
                algorithm_total: c.algorithm_total,
                oracle_total: c.oracle_total,
                lb_total: c.lb_total,
                algorithm_over_oracle: c.algorithm_over_oracle(),
                oracle_over_lb: c.oracle_over_lb(),
            })
        })
        .collect::<Result<_, ExperimentError>>()?;
    fs::create_dir_all(&config.output_dir).map_err(io_err(&config.output_dir))?;
    let mut wtr = csv::Writer::from_path(config.output_dir.join("oracle.csv"))?;
    for row in &rows {
        wtr.serialize(row)?;
    }
    wtr.flush().map_err(io_err(&config.output_dir))?;
    Ok(rows)
}

/// Writes the workload of the first sweep point for `seed` as a trace CSV.
pub fn cmd_gen_workload(config: &ExperimentConfig, seed: u64, path: &Path) -> Result<Workload, ExperimentError> {
    let points = config.points()?;
    let trace = load_shared_trace(config, &points)?;
    let w = build_workload(config, &points[0], seed, trace.as_ref())?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    workload::write_trace(&w, fs::File::create(path).map_err(io_err(path))?)?;
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, ExperimentError> {
        ExperimentConfig::from_json(text, "test.json")
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse(r#"{"n": 4, "rates": [1, 2], "delta": 1, "workload": {"kind": "synthetic", "coflows": 5}}"#)
            .unwrap();
        assert_eq!(c.mode, FabricMode::Ocs);
        assert_eq!(c.algorithms, default_algorithms());
        assert_eq!(c.weights, WeightModel::Uniform { lo: 1.0, hi: 10.0 });
        assert_eq!(c.seeds.expand(), vec![0]);
        match &c.workload {
            WorkloadSource::Synthetic(p) => {
                assert_eq!(p.coflows, 5);
                assert_eq!(p.pareto_shape, 1.2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_errors_name_the_field() {
        let e = parse(r#"{"n": 4, "rates": [1], "workload": {"kind": "synthetic"}, "algoritms": []}"#).unwrap_err();
        assert!(e.to_string().contains("algoritms"), "{e}");
        let e = parse(r#"{"n": 4, "rates": [1], "workload": {"kind": "synthetic", "coflows": -1}}"#).unwrap_err();
        assert!(e.to_string().contains("`workload`") && e.to_string().contains("line 1"), "{e}");
        let e = parse(r#"{"mode": "eps", "n": 4, "rates": [1], "delta": 2, "workload": {"kind": "tiny"}}"#)
            .unwrap_err();
        assert!(e.to_string().contains("EPS") || e.to_string().contains("delay"), "{e}");
        let e = parse(r#"{"n": 4, "rates": [1], "workload": {"kind": "trace", "path": "x.csv"}, "sweep": {"axis": "m", "values": [3]}}"#)
            .unwrap_err();
        assert!(e.to_string().contains("synthetic"), "{e}");
    }

    #[test]
    fn sweep_points() {
        let c = parse(
            r#"{"n": 16, "rates": [10, 20, 30], "delta": 8, "workload": {"kind": "synthetic"},
                "sweep": {"axis": "delta", "values": [2, 4, 6, 8, 10, 12]}}"#,
        )
        .unwrap();
        let p = c.points().unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(p[2].network.delta(), 6.0);
        let c = parse(r#"{"n": 16, "rates": [1], "workload": {"kind": "synthetic"}, "sweep": {"axis": "n", "values": [4.5]}}"#);
        assert!(c.is_err());
        let c = parse(
            r#"{"n": 16, "rates": [1], "workload": {"kind": "synthetic"}, "seeds": {"start": 5, "count": 3},
                "sweep": {"axis": "m", "values": [10, 20]}}"#,
        )
        .unwrap();
        assert_eq!(c.seeds.expand(), vec![5, 6, 7]);
        assert_eq!(c.points().unwrap()[1].coflows, Some(20));
    }

    #[test]
    fn algorithm_names() {
        assert_eq!("ours".parse::<Algorithm>().unwrap(), Algorithm::Ours);
        assert_eq!("RHO-ASSIGN".parse::<Algorithm>().unwrap(), Algorithm::Rho);
        assert_eq!("rand".parse::<Algorithm>().unwrap(), Algorithm::Rand);
        assert!("fifo".parse::<Algorithm>().is_err());
    }

    #[test]
    fn schedule_file_round_trip() {
        let cfg = NetworkConfig::ocs(4, vec![1.0, 3.0], 1.0).unwrap();
        let w = oracle::tiny_workload_on(&cfg, 9, 6, 3).unwrap();
        let out = scheduler::run(&w).unwrap();
        let file = ScheduleFile::new(&w, Algorithm::Ours, &out.order, &out.schedule);
        let back: ScheduleFile = serde_json::from_str(&serde_json::to_string(&file).unwrap()).unwrap();
        assert_eq!(back, file);
        let (order, assignment, schedule) = back.resolve(&w).unwrap();
        assert_eq!(order, out.order);
        assert_eq!(assignment, out.assignment);
        assert_eq!(schedule, out.schedule);
    }
}
