//! `telab` command-line front end.
//!
//! Every failure prints one JSON line on stderr,
//! `{"error":"<kind>","exit":<code>,"message":"..."}`, and exits with the
//! code of its kind (see [`Failure`]). Log verbosity comes from `TELAB_LOG`.

use std::collections::BTreeMap;
use std::fs;
use std::io::ErrorKind;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use telab::error::{HarnessError, PathError, SelectError, TeError, TopoError, WorkloadError};
use telab::harness::{
    distributions, evaluate, export_distributions, failure_sweep, LimitSpec, Manifest, MetricsReport, PipelineConfig, RunDoc,
    SweepDoc,
};
use telab::paths::{all_pairs, compute_path_set, PathAlgorithm, PathParams, PathSet, PathSetDoc};
use telab::select::{select, ProgramOptions, SelectionDoc, SelectionMethod, SelectionResult};
use telab::teopt::{allocate, optimal_mcf};
use telab::topo::{bundled, parse_topology, parse_traffic_matrix, NodeId, Topology, TrafficMatrix};
use telab::workload::{gravity_tm, GravityConfig, MassScheme};

const LOG_ENV: &str = "TELAB_LOG";

#[derive(Debug, Parser)]
#[command(name = "telab", version, about = "Traffic-engineering experiments: paths, selection, allocation, sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute a path set. Output: path set JSON (schema_version, topology,
    /// algorithm, params, groups[{src, dst, disconnected, max_disjoint, paths}]).
    Paths(PathsArgs),
    /// Choose paths under flow-entry limits. Output: selection JSON
    /// (method, status, budget, floor, total_entries, usage, groups[{src, dst, chosen}]).
    Select(SelectArgs),
    /// Allocate bandwidth over selected paths (phase IV when Z > 1).
    /// Output: allocation JSON (phase, z, pairs[{paths[{nodes, bandwidth, weight}]}], links).
    Te(TeArgs),
    /// Unrestricted multicommodity-flow optimum. Output: {"z_opt": ...}.
    Mcf(McfArgs),
    /// Generate a gravity-model traffic matrix. Output: {"demands":[{src, dst, demand}]}.
    Tmgen(TmgenArgs),
    /// Full pipeline on one topology and matrix. Writes the run JSON to
    /// --out and a manifest next to it (`<stem>.manifest.json`).
    Run(RunArgs),
    /// Re-run the pipeline once per failed edge. Writes the sweep JSON to
    /// --out and a manifest next to it (`<stem>.manifest.json`).
    Sweep(RunArgs),
    /// Empirical CDF/CCDF tables from run or sweep files. CSV files have
    /// columns `x,y`; JSON writes `distributions.json`.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
struct TopoArg {
    /// Topology file (JSON or GraphML), or `bundled:gscale`.
    #[arg(long)]
    topo: String,
}

#[derive(Debug, Args)]
struct PathArgs {
    /// Path algorithm.
    #[arg(long, default_value = "custom")]
    alg: String,
    /// Paths per pair for ksp, edksp and vlb.
    #[arg(long)]
    k: Option<usize>,
    /// Seed for all randomized steps.
    #[arg(long)]
    seed: Option<u64>,
    /// Cap on equal-cost paths per pair for ecmp.
    #[arg(long)]
    ecmp_cap: Option<usize>,
}

impl PathArgs {
    fn apply(&self, params: &mut PathParams) {
        if let Some(k) = self.k {
            params.k = k;
        }
        if let Some(s) = self.seed {
            params.seed = s;
        }
        if let Some(c) = self.ecmp_cap {
            params.ecmp_cap = c;
        }
    }
}

#[derive(Debug, Args)]
struct LimitArgs {
    /// Flow entries per node.
    #[arg(long)]
    limit: Option<u64>,
    /// Per-node override `node=entries`; repeatable.
    #[arg(long = "node-limit", value_parser = parse_node_limit)]
    node_limits: Vec<(String, u64)>,
    /// Branch-and-bound node budget for `program`.
    #[arg(long)]
    node_budget: Option<usize>,
}

#[derive(Debug, Args)]
struct PathsArgs {
    #[command(flatten)]
    topo: TopoArg,
    #[command(flatten)]
    path: PathArgs,
    /// `all`, a comma list `src:dst,...`, or a JSON file of `[src, dst]` pairs.
    #[arg(long, default_value = "all")]
    pairs: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[command(flatten)]
    topo: TopoArg,
    /// Path set JSON from `paths`.
    #[arg(long)]
    paths: PathBuf,
    #[arg(long, default_value = "hardnop")]
    method: String,
    #[command(flatten)]
    limits: LimitArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TeArgs {
    #[command(flatten)]
    topo: TopoArg,
    #[arg(long)]
    paths: PathBuf,
    /// Selection JSON from `select`.
    #[arg(long)]
    selection: PathBuf,
    #[arg(long)]
    tm: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct McfArgs {
    #[command(flatten)]
    topo: TopoArg,
    #[arg(long)]
    tm: PathBuf,
    /// Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TmgenArgs {
    #[command(flatten)]
    topo: TopoArg,
    #[arg(long)]
    total: f64,
    /// `uniform-random` or `degree`.
    #[arg(long, default_value = "uniform-random")]
    scheme: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    topo: TopoArg,
    #[arg(long)]
    tm: PathBuf,
    /// Pipeline config JSON; flags given explicitly override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alg: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    ecmp_cap: Option<usize>,
    /// Selection method, `hardnop` or `program`.
    #[arg(long = "select")]
    method: Option<String>,
    #[command(flatten)]
    limits: LimitArgs,
    /// Multiplies all capacities; in (0, 1].
    #[arg(long)]
    capacity_scale: Option<f64>,
    /// Scales every demand before the run.
    #[arg(long)]
    demand_scale: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct ExportArgs {
    /// Run or sweep JSON; repeatable.
    #[arg(long = "input", required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Directory for the distribution files (created if missing).
    #[arg(long)]
    out_dir: PathBuf,
}

/// Error kinds and their exit codes.
#[derive(Debug)]
enum Failure {
    Usage(String),
    MissingInput(String),
    Schema(String),
    Compute(String),
    Output(String),
}

impl Failure {
    fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::MissingInput(_) => "missing-input",
            Failure::Schema(_) => "schema",
            Failure::Compute(_) => "compute",
            Failure::Output(_) => "output",
        }
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::MissingInput(_) => 3,
            Failure::Schema(_) => 4,
            Failure::Compute(_) => 5,
            Failure::Output(_) => 6,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::MissingInput(m) | Failure::Schema(m) | Failure::Compute(m) | Failure::Output(m) => m,
        }
    }

    fn line(&self) -> String {
        serde_json::json!({ "error": self.kind(), "exit": self.code(), "message": self.message() }).to_string()
    }
}

impl From<TopoError> for Failure {
    fn from(e: TopoError) -> Self {
        Failure::Schema(e.to_string())
    }
}

impl From<PathError> for Failure {
    fn from(e: PathError) -> Self {
        match e {
            PathError::Topo(t) => t.into(),
            PathError::UnknownAlgorithm(_) => Failure::Usage(e.to_string()),
            PathError::InvalidPathSet(_) | PathError::SameEndpoints(_) | PathError::UnknownNode(_) => Failure::Schema(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

impl From<SelectError> for Failure {
    fn from(e: SelectError) -> Self {
        match e {
            SelectError::UnknownMethod(_) => Failure::Usage(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

impl From<TeError> for Failure {
    fn from(e: TeError) -> Self {
        match e {
            TeError::Topo(t) => t.into(),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

impl From<WorkloadError> for Failure {
    fn from(e: WorkloadError) -> Self {
        match e {
            WorkloadError::Topo(t) => t.into(),
            WorkloadError::InvalidTotal(_) => Failure::Usage(e.to_string()),
            WorkloadError::TooFewNodes(_) => Failure::Compute(e.to_string()),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Topo(t) => t.into(),
            HarnessError::Paths(p) => p.into(),
            HarnessError::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

fn parse_node_limit(s: &str) -> Result<(String, u64), String> {
    let (node, h) = s.split_once('=').ok_or_else(|| format!("expected node=entries, got {s:?}"))?;
    let h = h.parse().map_err(|_| format!("invalid entry count in {s:?}"))?;
    Ok((node.to_string(), h))
}

fn read_input(path: &FsPath) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        ErrorKind::NotFound => Failure::MissingInput(format!("{}: not found", path.display())),
        _ => Failure::MissingInput(format!("{}: {e}", path.display())),
    })
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &FsPath, text: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::Schema(format!("{}: {e}", path.display())))
}

fn load_topology(spec: &str) -> Result<(Topology, String), Failure> {
    match spec.strip_prefix("bundled:") {
        Some("gscale") => Ok((bundled::gscale(), bundled::GSCALE_JSON.to_string())),
        Some(other) => Err(Failure::Usage(format!("unknown bundled topology {other:?}"))),
        None => {
            let path = FsPath::new(spec);
            let text = read_input(path)?;
            let t = parse_topology(&text).map_err(|e| Failure::Schema(format!("{}: {e}", path.display())))?;
            Ok((t, text))
        }
    }
}

fn load_tm(path: &FsPath) -> Result<(TrafficMatrix, String), Failure> {
    let text = read_input(path)?;
    let tm = parse_traffic_matrix(&text).map_err(|e| Failure::Schema(format!("{}: {e}", path.display())))?;
    Ok((tm, text))
}

fn load_paths(t: &Topology, path: &FsPath) -> Result<PathSet, Failure> {
    let doc: PathSetDoc = parse_json(path, &read_input(path)?)?;
    PathSet::from_doc(t, &doc).map_err(|e| Failure::Schema(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn write_output(path: &FsPath, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Output(format!("{}: {e}", path.display())))
}

fn digest(text: &str) -> String {
    let hash = Sha256::digest(text.as_bytes());
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

fn manifest_path(out: &FsPath) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "result".into());
    out.with_file_name(format!("{stem}.manifest.json"))
}

fn parse_pairs(t: &Topology, spec: &str) -> Result<Vec<(NodeId, NodeId)>, Failure> {
    if spec == "all" {
        return Ok(all_pairs(t));
    }
    let named: Vec<(String, String)> = if spec.ends_with(".json") {
        let path = FsPath::new(spec);
        parse_json(path, &read_input(path)?)?
    } else {
        spec.split(',')
            .map(|p| {
                p.split_once(':')
                    .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                    .ok_or_else(|| Failure::Usage(format!("pair {p:?} is not src:dst")))
            })
            .collect::<Result<_, _>>()?
    };
    named.iter().map(|(a, b)| Ok((t.node_id(a)?, t.node_id(b)?))).collect()
}

fn limit_spec(args: &LimitArgs, base: Option<LimitSpec>) -> LimitSpec {
    let mut spec = base.unwrap_or_else(|| LimitSpec::uniform(u64::MAX));
    if let Some(h) = args.limit {
        spec.uniform = h;
    }
    spec.per_node.extend(args.node_limits.iter().cloned());
    spec
}

fn cmd_paths(a: &PathsArgs) -> Result<(), Failure> {
    let (t, _) = load_topology(&a.topo.topo)?;
    let alg: PathAlgorithm = a.path.alg.parse()?;
    let mut params = PathParams::default();
    a.path.apply(&mut params);
    let pairs = parse_pairs(&t, &a.pairs)?;
    let ps = compute_path_set(&t, alg, &pairs, &params)?;
    write_output(&a.out, &to_json(&ps.to_doc(&t)))
}

fn cmd_select(a: &SelectArgs) -> Result<(), Failure> {
    let (t, _) = load_topology(&a.topo.topo)?;
    let ps = load_paths(&t, &a.paths)?;
    let method: SelectionMethod = a.method.parse()?;
    let limits = limit_spec(&a.limits, None).resolve(&t)?;
    let opts = ProgramOptions { node_budget: a.limits.node_budget.unwrap_or(ProgramOptions::default().node_budget) };
    let r = select(&t, &ps, &limits, method, &opts)?;
    write_output(&a.out, &to_json(&r.to_doc(&t, &ps)))
}

fn cmd_te(a: &TeArgs) -> Result<(), Failure> {
    let (t, _) = load_topology(&a.topo.topo)?;
    let ps = load_paths(&t, &a.paths)?;
    let doc: SelectionDoc = parse_json(&a.selection, &read_input(&a.selection)?)?;
    let sel = SelectionResult::from_doc(&t, &ps, &doc).map_err(|e| Failure::Schema(format!("{}: {e}", a.selection.display())))?;
    let (tm, _) = load_tm(&a.tm)?;
    let demands = tm.resolve(&t)?;
    let alloc = allocate(&t, &sel.selected_groups(&ps), &demands)?;
    write_output(&a.out, &to_json(&alloc.to_doc(&t)))
}

fn cmd_mcf(a: &McfArgs) -> Result<(), Failure> {
    let (t, _) = load_topology(&a.topo.topo)?;
    let (tm, _) = load_tm(&a.tm)?;
    let z = optimal_mcf(&t, &tm.resolve(&t)?)?;
    let text = to_json(&serde_json::json!({ "z_opt": z }));
    match &a.out {
        Some(out) => write_output(out, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_tmgen(a: &TmgenArgs) -> Result<(), Failure> {
    let (t, _) = load_topology(&a.topo.topo)?;
    let scheme: MassScheme = a.scheme.parse().map_err(Failure::Usage)?;
    let tm = gravity_tm(&t, &GravityConfig { total_demand: a.total, seed: a.seed, scheme })?;
    write_output(&a.out, &to_json(&tm.to_doc()))
}

struct Prepared {
    topology: Topology,
    tm: TrafficMatrix,
    config: PipelineConfig,
    inputs: BTreeMap<String, String>,
}

fn prepare_run(a: &RunArgs) -> Result<Prepared, Failure> {
    let mut inputs = BTreeMap::new();
    let (topology, topo_text) = load_topology(&a.topo.topo)?;
    inputs.insert("topology".to_string(), format!("{} {}", a.topo.topo, digest(&topo_text)));
    let (mut tm, tm_text) = load_tm(&a.tm)?;
    inputs.insert("traffic_matrix".to_string(), format!("{} {}", a.tm.display(), digest(&tm_text)));
    if let Some(f) = a.demand_scale {
        if !(f.is_finite() && f > 0.0) {
            return Err(Failure::Usage(format!("demand scale must be positive, got {f}")));
        }
        tm = tm.scaled(f);
    }

    let mut config = match &a.config {
        Some(path) => {
            let text = read_input(path)?;
            inputs.insert("config".to_string(), format!("{} {}", path.display(), digest(&text)));
            parse_json::<PipelineConfig>(path, &text)?
        }
        None => PipelineConfig::new(PathAlgorithm::Custom, SelectionMethod::Hardnop, u64::MAX),
    };
    if let Some(alg) = &a.alg {
        config.algorithm = alg.parse()?;
    }
    PathArgs { alg: String::new(), k: a.k, seed: a.seed, ecmp_cap: a.ecmp_cap }.apply(&mut config.params);
    if let Some(m) = &a.method {
        config.selection = m.parse()?;
    }
    config.limits = limit_spec(&a.limits, Some(config.limits.clone()));
    if let Some(b) = a.limits.node_budget {
        config.node_budget = b;
    }
    if a.capacity_scale.is_some() {
        config.capacity_scale = a.capacity_scale;
    }
    config.validate()?;
    Ok(Prepared { topology, tm, config, inputs })
}

fn write_with_manifest(command: &str, out: &FsPath, body: &str, p: &Prepared, extra: serde_json::Value) -> Result<(), Failure> {
    let mpath = manifest_path(out);
    let mut config = serde_json::to_value(&p.config).expect("serializable");
    if let (Some(obj), serde_json::Value::Object(more)) = (config.as_object_mut(), extra) {
        obj.extend(more);
    }
    let manifest = Manifest {
        tool: "telab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        inputs: p.inputs.clone(),
        config,
        outputs: vec![out.display().to_string(), mpath.display().to_string()],
    };
    write_output(out, body)?;
    write_output(&mpath, &to_json(&manifest))
}

fn cmd_run(a: &RunArgs) -> Result<(), Failure> {
    let p = prepare_run(a)?;
    let report = evaluate(&p.topology, &p.tm, &p.config)?;
    let t = &report.result.timings;
    log::info!("phase I {:?}, phase II {:?}, allocation {:?}", t.paths, t.select, t.allocate);
    let doc = RunDoc::new(&report, &p.config, None);
    write_with_manifest("run", &a.out, &to_json(&doc), &p, serde_json::json!({ "demand_scale": a.demand_scale }))
}

fn cmd_sweep(a: &RunArgs) -> Result<(), Failure> {
    let p = prepare_run(a)?;
    let runs = failure_sweep(&p.topology, &p.tm, &p.config)?;
    let doc = SweepDoc::new(&p.topology, &p.config, &runs);
    log::info!("{} failures, mean satisfied {:.6}", doc.runs.len(), doc.mean_satisfied);
    write_with_manifest("sweep", &a.out, &to_json(&doc), &p, serde_json::json!({ "demand_scale": a.demand_scale }))
}

fn load_reports(path: &FsPath) -> Result<Vec<MetricsReport>, Failure> {
    let text = read_input(path)?;
    let value: serde_json::Value = parse_json(path, &text)?;
    if value.get("runs").is_some() {
        let doc: SweepDoc = parse_json(path, &text)?;
        Ok(doc.runs.into_iter().map(|r| r.metrics).collect())
    } else {
        let doc: RunDoc = parse_json(path, &text)?;
        Ok(vec![doc.metrics])
    }
}

fn cmd_export(a: &ExportArgs) -> Result<(), Failure> {
    let mut reports = Vec::new();
    for path in &a.inputs {
        reports.extend(load_reports(path)?);
    }
    fs::create_dir_all(&a.out_dir).map_err(|e| Failure::Output(format!("{}: {e}", a.out_dir.display())))?;
    match a.format {
        Format::Csv => {
            for (name, csv) in export_distributions(&reports) {
                write_output(&a.out_dir.join(name), &csv)?;
            }
            Ok(())
        }
        Format::Json => {
            let all: BTreeMap<&str, Vec<(f64, f64)>> = distributions(&reports).into_iter().collect();
            write_output(&a.out_dir.join("distributions.json"), &to_json(&all))
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Paths(a) => cmd_paths(a),
        Command::Select(a) => cmd_select(a),
        Command::Te(a) => cmd_te(a),
        Command::Mcf(a) => cmd_mcf(a),
        Command::Tmgen(a) => cmd_tmgen(a),
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Export(a) => cmd_export(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ").to_string();
            let f = Failure::Usage(first);
            eprintln!("{}", f.line());
            return ExitCode::from(f.code());
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.line());
            ExitCode::from(f.code())
        }
    }
}
