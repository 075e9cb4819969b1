//! Bandwidth allocation over selected paths.
//!
//! Phase III minimizes the maximum link utilization `Z` while meeting every
//! demand exactly (no capacity cap, so `Z` may exceed 1). When it does,
//! phase IV maximizes total throughput under link capacities while keeping
//! each pair at or above `d / Z`. [`optimal_mcf`] is the unrestricted
//! edge-based lower bound on `Z`.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::TeError;
use crate::lp::{solve_lp, LinearProgram, Relation, Sense, Status, Var};
use crate::paths::{Path, PathGroup};
use crate::topo::{Demand, LinkId, NodeId, Topology};

/// Phase IV runs only when phase III's utilization exceeds `1 + PHASE_IV_EPS`.
pub const PHASE_IV_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "III")]
    MinMaxUtilization,
    #[serde(rename = "IV")]
    FairThroughput,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::MinMaxUtilization => "III",
            Phase::FairThroughput => "IV",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathFlow {
    pub path: Path,
    pub bandwidth: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairAllocation {
    pub src: NodeId,
    pub dst: NodeId,
    pub demand: f64,
    pub paths: Vec<PathFlow>,
    /// Nothing was allocated; weights are uniform placeholders.
    pub zero_demand: bool,
}

impl PairAllocation {
    pub fn total(&self) -> f64 {
        self.paths.iter().map(|p| p.bandwidth).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub phase: Phase,
    pub pairs: Vec<PairAllocation>,
    /// Load per directed link.
    pub link_load: Vec<f64>,
    /// Max over links of load / capacity.
    pub z: f64,
}

impl Allocation {
    fn empty(t: &Topology) -> Self {
        Allocation { phase: Phase::MinMaxUtilization, pairs: Vec::new(), link_load: vec![0.0; t.link_count()], z: 0.0 }
    }

    pub fn total_throughput(&self) -> f64 {
        self.pairs.iter().map(PairAllocation::total).sum()
    }

    pub fn total_demand(&self) -> f64 {
        self.pairs.iter().map(|p| p.demand).sum()
    }

    pub fn pair(&self, src: NodeId, dst: NodeId) -> Option<&PairAllocation> {
        self.pairs.iter().find(|p| p.src == src && p.dst == dst)
    }

    /// Link loads rebuilt from the per-path bandwidths.
    pub fn recompute_loads(&self, t: &Topology) -> Vec<f64> {
        let mut load = vec![0.0; t.link_count()];
        for pair in &self.pairs {
            for pf in &pair.paths {
                for l in pf.path.links(t) {
                    load[l] += pf.bandwidth;
                }
            }
        }
        load
    }

    pub fn utilizations(&self, t: &Topology) -> Vec<f64> {
        self.link_load.iter().enumerate().map(|(l, x)| x / t.link_capacity(l)).collect()
    }

    pub fn to_doc(&self, t: &Topology) -> AllocationDoc {
        AllocationDoc {
            phase: self.phase,
            z: self.z,
            total_demand: self.total_demand(),
            total_throughput: self.total_throughput(),
            pairs: self
                .pairs
                .iter()
                .map(|p| PairDoc {
                    src: t.node_name(p.src).to_string(),
                    dst: t.node_name(p.dst).to_string(),
                    demand: p.demand,
                    total: p.total(),
                    zero_demand: p.zero_demand,
                    paths: p
                        .paths
                        .iter()
                        .map(|f| PathFlowDoc { nodes: f.path.names(t), bandwidth: f.bandwidth, weight: f.weight })
                        .collect(),
                })
                .collect(),
            links: (0..t.link_count())
                .map(|l| LinkDoc {
                    link: t.link_label(l),
                    capacity: t.link_capacity(l),
                    load: self.link_load[l],
                    utilization: self.link_load[l] / t.link_capacity(l),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationDoc {
    pub phase: Phase,
    pub z: f64,
    pub total_demand: f64,
    pub total_throughput: f64,
    pub pairs: Vec<PairDoc>,
    pub links: Vec<LinkDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDoc {
    pub src: String,
    pub dst: String,
    pub demand: f64,
    pub total: f64,
    pub zero_demand: bool,
    pub paths: Vec<PathFlowDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFlowDoc {
    pub nodes: Vec<String>,
    pub bandwidth: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkDoc {
    pub link: String,
    pub capacity: f64,
    pub load: f64,
    pub utilization: f64,
}

/// Sets each path's weight to its share of the pair total. Pairs with a zero
/// total get uniform weights and the zero-demand marker.
pub fn normalize_weights(a: &mut Allocation) {
    for pair in &mut a.pairs {
        let total = pair.total();
        pair.zero_demand = total <= 0.0;
        let n = pair.paths.len() as f64;
        for pf in &mut pair.paths {
            pf.weight = if pair.zero_demand { 1.0 / n } else { pf.bandwidth / total };
        }
    }
}

struct PathModel<'a> {
    lp: LinearProgram,
    /// (demand, [(path, var)]) per demand.
    pairs: Vec<(Demand, Vec<(&'a Path, Var)>)>,
    /// Path variables crossing each link.
    by_link: Vec<Vec<Var>>,
}

fn path_model<'a>(t: &Topology, groups: &'a [PathGroup], demands: &[Demand], sense: Sense) -> Result<PathModel<'a>, TeError> {
    let lookup: HashMap<(NodeId, NodeId), &PathGroup> = groups.iter().map(|g| ((g.src, g.dst), g)).collect();
    let mut lp = LinearProgram::new(sense);
    let mut by_link = vec![Vec::new(); t.link_count()];
    let mut pairs = Vec::with_capacity(demands.len());
    for d in demands.iter().filter(|d| d.value > 0.0) {
        let group = lookup.get(&(d.src, d.dst)).filter(|g| !g.paths.is_empty()).ok_or_else(|| TeError::UnroutableDemand {
            src: t.node_name(d.src).to_string(),
            dst: t.node_name(d.dst).to_string(),
        })?;
        let vars = group
            .paths
            .iter()
            .enumerate()
            .map(|(j, p)| {
                let b = lp.add_var(format!("b_{}_{}_{j}", d.src, d.dst), 0.0, f64::INFINITY);
                for l in p.links(t) {
                    by_link[l].push(b);
                }
                (p, b)
            })
            .collect();
        pairs.push((*d, vars));
    }
    Ok(PathModel { lp, pairs, by_link })
}

fn finish(t: &Topology, model: &PathModel<'_>, values: &[f64], phase: Phase) -> Allocation {
    let pairs = model
        .pairs
        .iter()
        .map(|(d, vars)| PairAllocation {
            src: d.src,
            dst: d.dst,
            demand: d.value,
            paths: vars
                .iter()
                .map(|&(p, v)| PathFlow { path: p.clone(), bandwidth: values[v.0].max(0.0), weight: 0.0 })
                .collect(),
            zero_demand: false,
        })
        .collect();
    let mut a = Allocation { phase, pairs, link_load: Vec::new(), z: 0.0 };
    a.link_load = a.recompute_loads(t);
    a.z = max_utilization(t, &a.link_load);
    normalize_weights(&mut a);
    a
}

fn max_utilization(t: &Topology, load: &[f64]) -> f64 {
    load.iter().enumerate().map(|(l, x)| x / t.link_capacity(l)).fold(0.0, f64::max)
}

/// Phase III: meet every demand exactly over its selected paths while
/// minimizing the maximum link utilization.
pub fn min_max_utilization(t: &Topology, groups: &[PathGroup], demands: &[Demand]) -> Result<Allocation, TeError> {
    let mut m = path_model(t, groups, demands, Sense::Minimize)?;
    if m.pairs.is_empty() {
        return Ok(Allocation::empty(t));
    }
    let z = m.lp.add_var("Z", 0.0, f64::INFINITY);
    m.lp.set_objective(z, 1.0);
    for (d, vars) in &m.pairs {
        let terms = vars.iter().map(|&(_, v)| (v, 1.0)).collect();
        m.lp.add_named_constraint(format!("demand_{}_{}", d.src, d.dst), terms, Relation::Eq, d.value);
    }
    for (l, vars) in m.by_link.iter().enumerate() {
        if vars.is_empty() {
            continue;
        }
        let mut terms: Vec<(Var, f64)> = vars.iter().map(|&v| (v, 1.0)).collect();
        terms.push((z, -t.link_capacity(l)));
        m.lp.add_named_constraint(format!("util_{l}"), terms, Relation::Le, 0.0);
    }
    let sol = solve_lp(&m.lp);
    if sol.status != Status::Optimal {
        return Err(TeError::Solver { stage: "min-max utilization", status: sol.status.to_string() });
    }
    Ok(finish(t, &m, &sol.values, Phase::MinMaxUtilization))
}

/// Phase IV: maximize total throughput within link capacities, keeping every
/// pair between `d / z` and `d`.
pub fn max_throughput_fair(t: &Topology, groups: &[PathGroup], demands: &[Demand], z: f64) -> Result<Allocation, TeError> {
    if !(z > 1.0 + PHASE_IV_EPS) {
        return Err(TeError::ZNotAboveOne(z));
    }
    let mut m = path_model(t, groups, demands, Sense::Maximize)?;
    for (d, vars) in &m.pairs {
        let terms: Vec<(Var, f64)> = vars.iter().map(|&(_, v)| (v, 1.0)).collect();
        for &(_, v) in vars {
            m.lp.set_objective(v, 1.0);
        }
        m.lp.add_named_constraint(format!("floor_{}_{}", d.src, d.dst), terms.clone(), Relation::Ge, d.value / z);
        m.lp.add_named_constraint(format!("ceiling_{}_{}", d.src, d.dst), terms, Relation::Le, d.value);
    }
    for (l, vars) in m.by_link.iter().enumerate() {
        if !vars.is_empty() {
            let terms = vars.iter().map(|&v| (v, 1.0)).collect();
            m.lp.add_named_constraint(format!("cap_{l}"), terms, Relation::Le, t.link_capacity(l));
        }
    }
    let sol = solve_lp(&m.lp);
    match sol.status {
        Status::Optimal => Ok(finish(t, &m, &sol.values, Phase::FairThroughput)),
        Status::Infeasible => Err(TeError::InfeasibleFloor(z)),
        other => Err(TeError::Solver { stage: "fair throughput", status: other.to_string() }),
    }
}

/// Phase III, followed by phase IV when the utilization exceeds 1.
pub fn allocate(t: &Topology, groups: &[PathGroup], demands: &[Demand]) -> Result<Allocation, TeError> {
    let a = min_max_utilization(t, groups, demands)?;
    if a.z > 1.0 + PHASE_IV_EPS {
        max_throughput_fair(t, groups, demands, a.z)
    } else {
        Ok(a)
    }
}

/// Optimal multicommodity-flow utilization with no path or flow-entry limits.
///
/// Commodities sharing a source are merged into one flow per source, which
/// has the same optimum as one flow per pair and far fewer variables.
pub fn optimal_mcf(t: &Topology, demands: &[Demand]) -> Result<f64, TeError> {
    let demands: Vec<&Demand> = demands.iter().filter(|d| d.value > 0.0).collect();
    if demands.is_empty() {
        return Ok(0.0);
    }
    let mut sources: Vec<NodeId> = demands.iter().map(|d| d.src).collect();
    sources.sort_unstable();
    sources.dedup();
    let n = t.node_count();
    let mut lp = LinearProgram::new(Sense::Minimize);
    let z = lp.add_var("Z", 0.0, f64::INFINITY);
    lp.set_objective(z, 1.0);
    let mut on_link: Vec<Vec<(Var, f64)>> = vec![Vec::new(); t.link_count()];
    for &s in &sources {
        let reach = t.reachable_from(s);
        let mut sink = vec![0.0; n];
        for d in demands.iter().filter(|d| d.src == s) {
            if !reach[d.dst] {
                return Err(TeError::Disconnected {
                    src: t.node_name(d.src).to_string(),
                    dst: t.node_name(d.dst).to_string(),
                });
            }
            sink[d.dst] += d.value;
        }
        let mut balance: Vec<Vec<(Var, f64)>> = vec![Vec::new(); n];
        for l in 0..t.link_count() {
            let (a, b) = t.link_endpoints(l);
            if !reach[a] || b == s {
                continue;
            }
            let f = lp.add_var(format!("f_{s}_{l}"), 0.0, f64::INFINITY);
            on_link[l].push((f, 1.0));
            balance[b].push((f, 1.0));
            if a != s {
                balance[a].push((f, -1.0));
            }
        }
        for v in (0..n).filter(|&v| v != s && reach[v]) {
            let terms = std::mem::take(&mut balance[v]);
            lp.add_named_constraint(format!("conserve_{s}_{v}"), terms, Relation::Eq, sink[v]);
        }
    }
    for (l, mut terms) in on_link.into_iter().enumerate() {
        if !terms.is_empty() {
            terms.push((z, -t.link_capacity(l)));
            lp.add_named_constraint(format!("util_{l}"), terms, Relation::Le, 0.0);
        }
    }
    let sol = solve_lp(&lp);
    if sol.status != Status::Optimal {
        return Err(TeError::Solver { stage: "optimal mcf", status: sol.status.to_string() });
    }
    Ok(sol.objective.max(0.0))
}

/// Loads per directed link for a given set of per-path bandwidths.
pub fn link_loads<'a>(t: &Topology, flows: impl IntoIterator<Item = (&'a Path, f64)>) -> Vec<f64> {
    let mut load = vec![0.0; t.link_count()];
    for (p, b) in flows {
        for l in p.links(t) {
            load[l] += b;
        }
    }
    load
}

pub fn link_utilization(t: &Topology, load: &[f64], link: LinkId) -> f64 {
    load[link] / t.link_capacity(link)
}
