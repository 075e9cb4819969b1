//! End-to-end runs: paths, selection, allocation, metrics, failure sweeps
//! and the CSV distributions built from them.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::paths::{compute_path_set, PathAlgorithm, PathParams, PathSet, PathSetDoc};
use crate::select::{select, FlowEntryLimits, ProgramOptions, SelectionDoc, SelectionMethod, SelectionResult};
use crate::teopt::{allocate, optimal_mcf, Allocation, AllocationDoc, Phase};
use crate::topo::{Demand, EdgeId, Topology, TrafficMatrix};

/// Satisfied fraction counted as "fully served" in sweep summaries.
pub const SATISFIED_THRESHOLD: f64 = 0.9999;
/// Paths carrying more than this are counted as used.
pub const USED_PATH_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSpec {
    pub uniform: u64,
    /// Per-node overrides keyed by node name.
    #[serde(default)]
    pub per_node: BTreeMap<String, u64>,
}

impl LimitSpec {
    pub fn uniform(limit: u64) -> Self {
        LimitSpec { uniform: limit, per_node: BTreeMap::new() }
    }

    pub fn resolve(&self, t: &Topology) -> Result<FlowEntryLimits, HarnessError> {
        let mut limits = FlowEntryLimits::uniform(t.node_count(), self.uniform);
        for (name, &h) in &self.per_node {
            limits = limits.with_limit(t.node_id(name)?, h);
        }
        Ok(limits)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub algorithm: PathAlgorithm,
    pub params: PathParams,
    pub selection: SelectionMethod,
    pub limits: LimitSpec,
    /// Multiplies every link capacity; must lie in (0, 1].
    #[serde(default)]
    pub capacity_scale: Option<f64>,
    #[serde(default = "default_node_budget")]
    pub node_budget: usize,
}

fn default_node_budget() -> usize {
    ProgramOptions::default().node_budget
}

impl PipelineConfig {
    pub fn new(algorithm: PathAlgorithm, selection: SelectionMethod, limit: u64) -> Self {
        PipelineConfig {
            algorithm,
            params: PathParams::default(),
            selection,
            limits: LimitSpec::uniform(limit),
            capacity_scale: None,
            node_budget: default_node_budget(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if let Some(a) = self.capacity_scale {
            if !(a > 0.0 && a <= 1.0) {
                return Err(HarnessError::Config(format!("capacity scale must lie in (0, 1], got {a}")));
            }
        }
        if self.params.k == 0 {
            return Err(HarnessError::Config("k must be at least 1".into()));
        }
        Ok(())
    }

    fn effective_topology(&self, t: &Topology) -> Topology {
        match self.capacity_scale {
            Some(a) => t.with_capacity_scale(a),
            None => t.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub paths: Duration,
    pub select: Duration,
    pub allocate: Duration,
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    /// Topology the run used, after capacity scaling and any failure.
    pub topology: Topology,
    /// Every positive demand of the input matrix.
    pub demands: Vec<Demand>,
    /// Demands whose endpoints are disconnected.
    pub dropped: Vec<Demand>,
    /// Connected demands left without any selected path.
    pub unserved: Vec<Demand>,
    pub paths: PathSet,
    pub selection: SelectionResult,
    pub allocation: Allocation,
    pub timings: PhaseTimings,
}

impl PipelineResult {
    pub fn phase(&self) -> Phase {
        self.allocation.phase
    }

    pub fn total_demand(&self) -> f64 {
        self.demands.iter().map(|d| d.value).sum()
    }

    /// Positive demands that were handed to the allocator.
    pub fn routed_demands(&self) -> Vec<Demand> {
        self.demands.iter().filter(|d| !self.is_dropped(d) && !self.is_unserved(d)).copied().collect()
    }

    /// Positive demands with connected endpoints.
    pub fn connected_demands(&self) -> Vec<Demand> {
        self.demands.iter().filter(|d| !self.is_dropped(d)).copied().collect()
    }

    fn is_dropped(&self, d: &Demand) -> bool {
        self.dropped.iter().any(|x| x.src == d.src && x.dst == d.dst)
    }

    fn is_unserved(&self, d: &Demand) -> bool {
        self.unserved.iter().any(|x| x.src == d.src && x.dst == d.dst)
    }
}

/// Phases I through IV on one topology and matrix.
pub fn run_pipeline(t: &Topology, tm: &TrafficMatrix, cfg: &PipelineConfig) -> Result<PipelineResult, HarnessError> {
    cfg.validate()?;
    let topo = cfg.effective_topology(t);
    let limits = cfg.limits.resolve(&topo)?;
    let demands = tm.resolve(&topo)?;
    let pairs: Vec<_> = demands.iter().map(|d| (d.src, d.dst)).collect();

    let start = Instant::now();
    let mut paths = compute_path_set(&topo, cfg.algorithm, &pairs, &cfg.params)?;
    let dropped: Vec<Demand> =
        demands.iter().zip(&paths.groups).filter(|(_, g)| g.is_disconnected()).map(|(d, _)| *d).collect();
    paths.groups.retain(|g| !g.is_disconnected());
    for d in &dropped {
        log::warn!("demand {}->{} is disconnected and dropped", topo.node_name(d.src), topo.node_name(d.dst));
    }
    let t_paths = start.elapsed();

    let start = Instant::now();
    let selection = select(&topo, &paths, &limits, cfg.selection, &ProgramOptions { node_budget: cfg.node_budget })?;
    let t_select = start.elapsed();

    let start = Instant::now();
    let groups = selection.selected_groups(&paths);
    let unserved: Vec<Demand> = groups
        .iter()
        .filter(|g| g.paths.is_empty())
        .map(|g| *demands.iter().find(|d| d.src == g.src && d.dst == g.dst).expect("group has a demand"))
        .collect();
    let routed: Vec<Demand> = demands
        .iter()
        .filter(|d| groups.iter().any(|g| g.src == d.src && g.dst == d.dst && !g.paths.is_empty()))
        .copied()
        .collect();
    let allocation = allocate(&topo, &groups, &routed)?;
    let t_alloc = start.elapsed();
    log::debug!(
        "{} {}: phase {} z={:.6} paths {:?} select {:?} allocate {:?}",
        cfg.algorithm,
        cfg.selection,
        allocation.phase,
        allocation.z,
        t_paths,
        t_select,
        t_alloc
    );

    Ok(PipelineResult {
        topology: topo,
        demands,
        dropped,
        unserved,
        paths,
        selection,
        allocation,
        timings: PhaseTimings { paths: t_paths, select: t_select, allocate: t_alloc },
    })
}

/// Unrestricted optimum over the pairs the run could connect.
pub fn reference_zopt(r: &PipelineResult) -> Result<f64, HarnessError> {
    Ok(optimal_mcf(&r.topology, &r.connected_demands())?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub src: String,
    pub dst: String,
    pub used_paths: usize,
    /// Mean hop count over used paths; 0 when none is used.
    pub avg_used_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub phase: Phase,
    pub z_alg: f64,
    pub z_opt: f64,
    pub performance_ratio: Option<f64>,
    pub throughput_ratio: Option<f64>,
    pub total_demand: f64,
    pub throughput: f64,
    pub satisfied_fraction: f64,
    pub dropped_pairs: usize,
    pub unserved_pairs: usize,
    pub link_utilization: Vec<f64>,
    pub entry_usage: Vec<u64>,
    pub selected_paths: usize,
    pub path_utilization: f64,
    pub pairs: Vec<PairMetrics>,
}

impl MetricsReport {
    pub fn performance_ratio(&self) -> Result<f64, HarnessError> {
        self.performance_ratio.ok_or(HarnessError::Regime { metric: "performance_ratio", zopt: self.z_opt })
    }

    pub fn throughput_ratio(&self) -> Result<f64, HarnessError> {
        self.throughput_ratio.ok_or(HarnessError::Regime { metric: "throughput_ratio", zopt: self.z_opt })
    }

    pub fn total_entries(&self) -> u64 {
        self.entry_usage.iter().sum()
    }

    pub fn fully_satisfied(&self) -> bool {
        self.satisfied_fraction > SATISFIED_THRESHOLD
    }
}

/// Metrics of a run against the unrestricted optimum `zopt` for the same inputs.
///
/// The performance ratio exists only when `zopt <= 1` and the throughput
/// ratio only when `zopt > 1`.
pub fn compute_metrics(r: &PipelineResult, zopt: f64) -> MetricsReport {
    let t = &r.topology;
    let a = &r.allocation;
    let total_demand = r.total_demand();
    let throughput = a.total_throughput();
    let connected: f64 = r.connected_demands().iter().map(|d| d.value).sum();
    let performance_ratio = (zopt > 0.0 && zopt <= 1.0).then(|| a.z / zopt);
    let throughput_ratio = (zopt > 1.0).then(|| throughput / (connected / zopt));

    let mut pairs = Vec::new();
    let mut selected = 0;
    let mut used_total = 0;
    for pair in &a.pairs {
        let used: Vec<_> = pair.paths.iter().filter(|p| p.bandwidth > USED_PATH_EPS).collect();
        selected += pair.paths.len();
        used_total += used.len();
        let avg = if used.is_empty() { 0.0 } else { used.iter().map(|p| p.path.hops() as f64).sum::<f64>() / used.len() as f64 };
        pairs.push(PairMetrics {
            src: t.node_name(pair.src).to_string(),
            dst: t.node_name(pair.dst).to_string(),
            used_paths: used.len(),
            avg_used_length: avg,
        });
    }

    MetricsReport {
        phase: a.phase,
        z_alg: a.z,
        z_opt: zopt,
        performance_ratio,
        throughput_ratio,
        total_demand,
        throughput,
        satisfied_fraction: if total_demand > 0.0 { throughput / total_demand } else { 1.0 },
        dropped_pairs: r.dropped.len(),
        unserved_pairs: r.unserved.len(),
        link_utilization: a.utilizations(t),
        entry_usage: r.selection.usage.clone(),
        selected_paths: selected,
        path_utilization: if selected == 0 { 0.0 } else { used_total as f64 / selected as f64 },
        pairs,
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub result: PipelineResult,
    pub metrics: MetricsReport,
}

/// `run_pipeline` plus the unrestricted optimum and metrics.
pub fn evaluate(t: &Topology, tm: &TrafficMatrix, cfg: &PipelineConfig) -> Result<RunReport, HarnessError> {
    let result = run_pipeline(t, tm, cfg)?;
    let zopt = reference_zopt(&result)?;
    let metrics = compute_metrics(&result, zopt);
    Ok(RunReport { result, metrics })
}

#[derive(Debug, Clone)]
pub struct FailureRun {
    pub edge: EdgeId,
    /// `u-v` of the failed edge.
    pub label: String,
    pub report: RunReport,
}

/// One full re-run per edge, each on the topology with that edge removed.
pub fn failure_sweep(t: &Topology, tm: &TrafficMatrix, cfg: &PipelineConfig) -> Result<Vec<FailureRun>, HarnessError> {
    (0..t.edge_count())
        .into_par_iter()
        .map(|e| {
            let edge = t.edge(e);
            let label = format!("{}-{}", t.node_name(edge.u), t.node_name(edge.v));
            let report = evaluate(&t.without_edge(e), tm, cfg)?;
            Ok(FailureRun { edge: e, label, report })
        })
        .collect()
}

pub const RUN_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRef {
    pub src: String,
    pub dst: String,
    pub demand: f64,
}

/// Serialized run. Wall-clock timings are left out so reruns are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDoc {
    pub schema_version: u32,
    pub topology: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failed_edge: Option<String>,
    pub config: PipelineConfig,
    pub metrics: MetricsReport,
    pub dropped: Vec<PairRef>,
    pub unserved: Vec<PairRef>,
    pub paths: PathSetDoc,
    pub selection: SelectionDoc,
    pub allocation: AllocationDoc,
}

impl RunDoc {
    pub fn new(report: &RunReport, cfg: &PipelineConfig, failed_edge: Option<String>) -> Self {
        let r = &report.result;
        let t = &r.topology;
        let refs = |ds: &[Demand]| {
            ds.iter()
                .map(|d| PairRef { src: t.node_name(d.src).to_string(), dst: t.node_name(d.dst).to_string(), demand: d.value })
                .collect()
        };
        RunDoc {
            schema_version: RUN_SCHEMA_VERSION,
            topology: t.name().to_string(),
            failed_edge,
            config: cfg.clone(),
            metrics: report.metrics.clone(),
            dropped: refs(&r.dropped),
            unserved: refs(&r.unserved),
            paths: r.paths.to_doc(t),
            selection: r.selection.to_doc(t, &r.paths),
            allocation: r.allocation.to_doc(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    /// `u-v` of the failed edge.
    pub edge: String,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDoc {
    pub schema_version: u32,
    pub topology: String,
    pub config: PipelineConfig,
    pub mean_satisfied: f64,
    /// Fraction of failures after which the matrix is still fully served.
    pub fully_satisfied: f64,
    pub runs: Vec<SweepEntry>,
}

impl SweepDoc {
    pub fn new(t: &Topology, cfg: &PipelineConfig, runs: &[FailureRun]) -> Self {
        let metrics: Vec<MetricsReport> = runs.iter().map(|r| r.report.metrics.clone()).collect();
        let summary = satisfaction_summary(std::slice::from_ref(&metrics));
        SweepDoc {
            schema_version: RUN_SCHEMA_VERSION,
            topology: t.name().to_string(),
            config: cfg.clone(),
            mean_satisfied: summary.mean_satisfied,
            fully_satisfied: summary.pooled,
            runs: runs.iter().zip(metrics).map(|(r, metrics)| SweepEntry { edge: r.label.clone(), metrics }).collect(),
        }
    }
}

/// Fully-served fractions over a grid of sweeps (`sweeps[tm][failure]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatisfactionSummary {
    /// Over every (matrix, failure) run.
    pub pooled: f64,
    /// Per matrix, over its failures.
    pub per_matrix: Vec<f64>,
    /// Per failed edge, over matrices.
    pub per_failure: Vec<f64>,
    pub mean_satisfied: f64,
}

pub fn satisfaction_summary(sweeps: &[Vec<MetricsReport>]) -> SatisfactionSummary {
    let frac = |it: &mut dyn Iterator<Item = &MetricsReport>| {
        let (mut hit, mut n) = (0usize, 0usize);
        for m in it {
            n += 1;
            hit += m.fully_satisfied() as usize;
        }
        if n == 0 { 0.0 } else { hit as f64 / n as f64 }
    };
    let edges = sweeps.iter().map(Vec::len).max().unwrap_or(0);
    let all: Vec<&MetricsReport> = sweeps.iter().flatten().collect();
    SatisfactionSummary {
        pooled: frac(&mut all.iter().copied()),
        per_matrix: sweeps.iter().map(|s| frac(&mut s.iter())).collect(),
        per_failure: (0..edges).map(|e| frac(&mut sweeps.iter().filter_map(|s| s.get(e)))).collect(),
        mean_satisfied: if all.is_empty() { 0.0 } else { all.iter().map(|m| m.satisfied_fraction).sum::<f64>() / all.len() as f64 },
    }
}

/// Empirical CDF: one row per distinct value, `y = P(X <= x)`.
pub fn empirical_cdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut rows: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in v.iter().enumerate() {
        let y = (i + 1) as f64 / n;
        match rows.last_mut() {
            Some(last) if last.0 == x => last.1 = y,
            _ => rows.push((x, y)),
        }
    }
    rows
}

/// Empirical CCDF: one row per distinct value, `y = P(X > x)`. For `x`
/// below the smallest value the CCDF is 1.
pub fn empirical_ccdf(values: &[f64]) -> Vec<(f64, f64)> {
    empirical_cdf(values).into_iter().map(|(x, y)| (x, 1.0 - y)).collect()
}

pub fn csv_rows(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("x,y\n");
    for (x, y) in rows {
        out.push_str(&format!("{x},{y}\n"));
    }
    out
}

/// Distributions pooled over `reports`, as `(name, rows)` in a fixed order.
pub fn distributions(reports: &[MetricsReport]) -> Vec<(&'static str, Vec<(f64, f64)>)> {
    let util: Vec<f64> = reports.iter().flat_map(|m| m.link_utilization.iter().copied()).collect();
    let entries: Vec<f64> = reports.iter().flat_map(|m| m.entry_usage.iter().map(|&q| q as f64)).collect();
    let lengths: Vec<f64> =
        reports.iter().flat_map(|m| m.pairs.iter().filter(|p| p.used_paths > 0).map(|p| p.avg_used_length)).collect();
    let counts: Vec<f64> = reports.iter().flat_map(|m| m.pairs.iter().map(|p| p.used_paths as f64)).collect();
    let path_util: Vec<f64> = reports.iter().map(|m| m.path_utilization).collect();
    vec![
        ("link_utilization_cdf", empirical_cdf(&util)),
        ("flow_entries_ccdf", empirical_ccdf(&entries)),
        ("path_length_ccdf", empirical_ccdf(&lengths)),
        ("path_count_ccdf", empirical_ccdf(&counts)),
        ("path_utilization_cdf", empirical_cdf(&path_util)),
    ]
}

/// [`distributions`] as `(file name, csv)`.
pub fn export_distributions(reports: &[MetricsReport]) -> Vec<(String, String)> {
    distributions(reports).into_iter().map(|(name, rows)| (format!("{name}.csv"), csv_rows(&rows))).collect()
}

/// Written next to every result bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub inputs: BTreeMap<String, String>,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
}
