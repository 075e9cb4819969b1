//! Phase II: choose which computed paths get installed under per-switch
//! flow-entry limits.
//!
//! Every node a selected path touches (endpoints included) spends one flow
//! entry. `hardnop` searches the largest uniform per-pair budget `K` that
//! fits and keeps the `min(K, X)` shortest paths of each pair. `program`
//! solves two 0-1 programs: first the largest floor `F` on paths per pair,
//! then the most paths overall subject to that floor.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::SelectError;
use crate::lp::{solve_binary_ilp_with, BranchOptions, LinearProgram, Relation, Sense, Status, Var};
use crate::paths::{Path, PathGroup, PathSet};
use crate::topo::{NodeId, Topology};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowEntryLimits {
    per_node: Vec<u64>,
}

impl FlowEntryLimits {
    pub fn uniform(nodes: usize, limit: u64) -> Self {
        FlowEntryLimits { per_node: vec![limit; nodes] }
    }

    pub fn from_vec(per_node: Vec<u64>) -> Self {
        FlowEntryLimits { per_node }
    }

    pub fn with_limit(mut self, node: NodeId, limit: u64) -> Self {
        self.per_node[node] = limit;
        self
    }

    pub fn limit(&self, node: NodeId) -> u64 {
        self.per_node[node]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.per_node
    }
}

/// Flow entries consumed per node by the given paths.
pub fn entry_usage<'a>(t: &Topology, paths: impl IntoIterator<Item = &'a Path>) -> Result<Vec<u64>, SelectError> {
    let mut usage = vec![0u64; t.node_count()];
    for p in paths {
        for &v in p.nodes() {
            *usage.get_mut(v).ok_or(SelectError::UnknownNode(v))? += 1;
        }
    }
    Ok(usage)
}

fn within(usage: &[u64], limits: &FlowEntryLimits) -> bool {
    usage.iter().zip(limits.as_slice()).all(|(q, h)| q <= h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMethod {
    Hardnop,
    Program,
}

impl SelectionMethod {
    pub fn name(self) -> &'static str {
        match self {
            SelectionMethod::Hardnop => "hardnop",
            SelectionMethod::Program => "program",
        }
    }
}

impl fmt::Display for SelectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SelectionMethod {
    type Err = SelectError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hardnop" => Ok(SelectionMethod::Hardnop),
            "program" => Ok(SelectionMethod::Program),
            _ => Err(SelectError::UnknownMethod(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionStatus {
    Optimal,
    /// The 0-1 program hit its node budget; the selection is the best found.
    BudgetExceeded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub method: SelectionMethod,
    /// `chosen[g][j]`: path `j` of group `g` is installed.
    pub chosen: Vec<Vec<bool>>,
    pub nop: Vec<usize>,
    /// Path budget K (hardnop).
    pub budget: Option<usize>,
    /// Max-min floor F (program).
    pub floor: Option<usize>,
    pub usage: Vec<u64>,
    pub status: SelectionStatus,
}

impl SelectionResult {
    fn from_chosen(
        t: &Topology,
        ps: &PathSet,
        method: SelectionMethod,
        chosen: Vec<Vec<bool>>,
    ) -> Result<SelectionResult, SelectError> {
        let usage = entry_usage(
            t,
            ps.groups.iter().zip(&chosen).flat_map(|(g, c)| g.paths.iter().zip(c).filter(|(_, &on)| on).map(|(p, _)| p)),
        )?;
        let nop = chosen.iter().map(|c| c.iter().filter(|&&on| on).count()).collect();
        Ok(SelectionResult { method, chosen, nop, budget: None, floor: None, usage, status: SelectionStatus::Optimal })
    }

    /// Groups restricted to their chosen paths, in path-set order.
    pub fn selected_groups(&self, ps: &PathSet) -> Vec<PathGroup> {
        ps.groups
            .iter()
            .zip(&self.chosen)
            .map(|(g, c)| PathGroup {
                paths: g.paths.iter().zip(c).filter(|(_, &on)| on).map(|(p, _)| p.clone()).collect(),
                ..g.clone()
            })
            .collect()
    }

    pub fn total_entries(&self) -> u64 {
        self.usage.iter().sum()
    }

    /// Smallest path count over groups that had at least one candidate path.
    pub fn min_nop(&self, ps: &PathSet) -> Option<usize> {
        self.nop.iter().zip(&ps.groups).filter(|(_, g)| !g.paths.is_empty()).map(|(&n, _)| n).min()
    }

    pub fn to_doc(&self, t: &Topology, ps: &PathSet) -> SelectionDoc {
        SelectionDoc {
            schema_version: SELECTION_SCHEMA_VERSION,
            method: self.method,
            status: self.status,
            budget: self.budget,
            floor: self.floor,
            total_entries: self.total_entries(),
            usage: t.nodes().iter().cloned().zip(self.usage.iter().copied()).map(|(node, entries)| NodeUsage { node, entries }).collect(),
            groups: ps
                .groups
                .iter()
                .zip(&self.chosen)
                .map(|(g, c)| SelectedGroupDoc {
                    src: t.node_name(g.src).to_string(),
                    dst: t.node_name(g.dst).to_string(),
                    chosen: c.iter().enumerate().filter(|(_, &on)| on).map(|(j, _)| j).collect(),
                })
                .collect(),
        }
    }

    pub fn from_doc(t: &Topology, ps: &PathSet, doc: &SelectionDoc) -> Result<SelectionResult, SelectError> {
        if doc.groups.len() != ps.groups.len() {
            return Err(SelectError::Solver { stage: "import", status: "selection does not match path set".into() });
        }
        let mut chosen = Vec::with_capacity(ps.groups.len());
        for (g, d) in ps.groups.iter().zip(&doc.groups) {
            if t.node_name(g.src) != d.src || t.node_name(g.dst) != d.dst {
                return Err(SelectError::Solver { stage: "import", status: format!("pair {}->{} out of order", d.src, d.dst) });
            }
            let mut c = vec![false; g.paths.len()];
            for &j in &d.chosen {
                *c.get_mut(j).ok_or(SelectError::Solver { stage: "import", status: format!("path index {j} out of range") })? = true;
            }
            chosen.push(c);
        }
        let mut r = Self::from_chosen(t, ps, doc.method, chosen)?;
        r.budget = doc.budget;
        r.floor = doc.floor;
        r.status = doc.status;
        Ok(r)
    }
}

pub const SELECTION_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionDoc {
    pub schema_version: u32,
    pub method: SelectionMethod,
    pub status: SelectionStatus,
    pub budget: Option<usize>,
    pub floor: Option<usize>,
    pub total_entries: u64,
    pub usage: Vec<NodeUsage>,
    pub groups: Vec<SelectedGroupDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeUsage {
    pub node: String,
    pub entries: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedGroupDoc {
    pub src: String,
    pub dst: String,
    /// Indices into the path set group's path list.
    pub chosen: Vec<usize>,
}

/// Largest K such that the first `min(K, X)` paths of every group fit the limits.
///
/// Round `i` adds only the `i`-th path of each group to the running usage
/// vector and stops at the first round that overflows.
pub fn hardnop_budget(t: &Topology, ps: &PathSet, limits: &FlowEntryLimits) -> Result<usize, SelectError> {
    let mut usage = vec![0u64; t.node_count()];
    let longest = ps.groups.iter().map(|g| g.paths.len()).max().unwrap_or(0);
    for round in 0..longest {
        for g in &ps.groups {
            if let Some(p) = g.paths.get(round) {
                for &v in p.nodes() {
                    *usage.get_mut(v).ok_or(SelectError::UnknownNode(v))? += 1;
                }
            }
        }
        if !within(&usage, limits) {
            return Ok(round);
        }
    }
    Ok(longest)
}

/// The first `min(K, X)` paths of each group (groups must be length-sorted).
pub fn select_hardnop(t: &Topology, ps: &PathSet, limits: &FlowEntryLimits) -> Result<SelectionResult, SelectError> {
    let k = hardnop_budget(t, ps, limits)?;
    if k == 0 && ps.groups.iter().any(|g| !g.paths.is_empty()) {
        return Err(SelectError::NoFeasibleSelection);
    }
    let chosen = ps.groups.iter().map(|g| (0..g.paths.len()).map(|j| j < k).collect()).collect();
    let mut r = SelectionResult::from_chosen(t, ps, SelectionMethod::Hardnop, chosen)?;
    r.budget = Some(k);
    Ok(r)
}

#[derive(Debug, Clone)]
pub struct ProgramOptions {
    pub node_budget: usize,
}

impl Default for ProgramOptions {
    fn default() -> Self {
        ProgramOptions { node_budget: BranchOptions::default().node_budget }
    }
}

struct IndicatorModel {
    lp: LinearProgram,
    indicators: Vec<Vec<Var>>,
}

/// Binary indicators per path plus per-node entry rows.
fn indicator_model(t: &Topology, ps: &PathSet, limits: &FlowEntryLimits, sense: Sense) -> IndicatorModel {
    let mut lp = LinearProgram::new(sense);
    let mut by_node: Vec<Vec<(Var, f64)>> = vec![Vec::new(); t.node_count()];
    let indicators: Vec<Vec<Var>> = ps
        .groups
        .iter()
        .enumerate()
        .map(|(gi, g)| {
            g.paths
                .iter()
                .enumerate()
                .map(|(j, p)| {
                    let a = lp.add_binary(format!("a_{gi}_{j}"));
                    for &v in p.nodes() {
                        by_node[v].push((a, 1.0));
                    }
                    a
                })
                .collect()
        })
        .collect();
    for (v, terms) in by_node.into_iter().enumerate() {
        if !terms.is_empty() {
            lp.add_named_constraint(format!("entries_{v}"), terms, Relation::Le, limits.limit(v) as f64);
        }
    }
    IndicatorModel { lp, indicators }
}

fn read_indicators(values: &[f64], indicators: &[Vec<Var>]) -> Vec<Vec<bool>> {
    indicators.iter().map(|g| g.iter().map(|v| values[v.0] > 0.5).collect()).collect()
}

fn point_for(num_vars: usize, indicators: &[Vec<Var>], chosen: &[Vec<bool>]) -> Vec<f64> {
    let mut x = vec![0.0; num_vars];
    for (g, c) in indicators.iter().zip(chosen) {
        for (v, &on) in g.iter().zip(c) {
            x[v.0] = if on { 1.0 } else { 0.0 };
        }
    }
    x
}

/// Two-step 0-1 selection: maximize the minimum paths per pair, then the
/// total number of paths with that minimum as a floor. Groups without any
/// candidate path take no part in the floor.
pub fn select_program(
    t: &Topology,
    ps: &PathSet,
    limits: &FlowEntryLimits,
    opts: &ProgramOptions,
) -> Result<SelectionResult, SelectError> {
    let active: Vec<usize> = (0..ps.groups.len()).filter(|&g| !ps.groups[g].paths.is_empty()).collect();
    let longest = ps.groups.iter().map(|g| g.paths.len()).max().unwrap_or(0);
    let mut status = SelectionStatus::Optimal;

    // hardnop's prefix selection is feasible for step 1 and seeds the search
    let k = hardnop_budget(t, ps, limits)?;
    let seed: Vec<Vec<bool>> = ps.groups.iter().map(|g| (0..g.paths.len()).map(|j| j < k).collect()).collect();
    let seed_floor = active.iter().map(|&g| ps.groups[g].paths.len().min(k)).min().unwrap_or(0);

    let mut step1 = indicator_model(t, ps, limits, Sense::Maximize);
    let floor_var = step1.lp.add_var("F", 0.0, longest as f64);
    step1.lp.set_objective(floor_var, 1.0);
    for &g in &active {
        let mut terms = vec![(floor_var, 1.0)];
        terms.extend(step1.indicators[g].iter().map(|&a| (a, -1.0)));
        step1.lp.add_named_constraint(format!("floor_{g}"), terms, Relation::Le, 0.0);
    }
    let mut start = point_for(step1.lp.num_vars(), &step1.indicators, &seed);
    start[floor_var.0] = seed_floor as f64;
    let sol = solve_binary_ilp_with(
        &step1.lp,
        &BranchOptions { node_budget: opts.node_budget, integral_objective: true, incumbent: Some(start) },
    );
    let floor = match sol.status {
        Status::Optimal => sol.objective.round() as usize,
        Status::BudgetExceeded if !sol.values.is_empty() => {
            status = SelectionStatus::BudgetExceeded;
            sol.objective.round() as usize
        }
        other => return Err(SelectError::Solver { stage: "max-min paths", status: other.to_string() }),
    };
    let step1_choice = read_indicators(&sol.values, &step1.indicators);

    let mut step2 = indicator_model(t, ps, limits, Sense::Maximize);
    for g in &step2.indicators {
        for &a in g {
            step2.lp.set_objective(a, 1.0);
        }
    }
    for &g in &active {
        let terms = step2.indicators[g].iter().map(|&a| (a, 1.0)).collect();
        step2.lp.add_named_constraint(format!("floor_{g}"), terms, Relation::Ge, floor as f64);
    }
    let start = point_for(step2.lp.num_vars(), &step2.indicators, &step1_choice);
    let sol = solve_binary_ilp_with(
        &step2.lp,
        &BranchOptions { node_budget: opts.node_budget, integral_objective: true, incumbent: Some(start) },
    );
    match sol.status {
        Status::Optimal => {}
        Status::BudgetExceeded if !sol.values.is_empty() => status = SelectionStatus::BudgetExceeded,
        other => return Err(SelectError::Solver { stage: "max-sum paths", status: other.to_string() }),
    }
    let chosen = read_indicators(&sol.values, &step2.indicators);
    let mut r = SelectionResult::from_chosen(t, ps, SelectionMethod::Program, chosen)?;
    debug_assert!(within(&r.usage, limits));
    r.floor = Some(floor);
    r.status = status;
    Ok(r)
}

pub fn select(
    t: &Topology,
    ps: &PathSet,
    limits: &FlowEntryLimits,
    method: SelectionMethod,
    opts: &ProgramOptions,
) -> Result<SelectionResult, SelectError> {
    match method {
        SelectionMethod::Hardnop => select_hardnop(t, ps, limits),
        SelectionMethod::Program => select_program(t, ps, limits, opts),
    }
}
