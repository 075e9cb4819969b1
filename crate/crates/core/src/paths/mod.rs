//! Phase I path-set computation.
//!
//! The default algorithm ([`custom_paths`]) finds a maximum-size group of
//! pairwise edge-disjoint paths from a unit-capacity max flow. Baselines are
//! k-shortest paths ([`yen_ksp`]), greedy edge-disjoint k-shortest
//! ([`edksp`]), equal-cost shortest paths ([`ecmp_paths`]) and Valiant load
//! balancing through random intermediates ([`vlb_paths`]).
//!
//! Ties are broken lexicographically on node-index sequences everywhere.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::PathError;
use crate::topo::{EdgeId, LinkId, NodeId, Topology};

mod maxflow;
mod shortest;
mod suurballe;

pub use maxflow::{construct_paths, custom_paths, dinic_max_flow, MaxFlowResult};
pub use shortest::{ecmp_paths, edksp, shortest_path, vlb_paths, yen_ksp};
pub use suurballe::suurballe_pair;

pub const DEFAULT_ECMP_CAP: usize = 32;
pub const DEFAULT_K: usize = 4;

/// A simple path, stored as node indices from source to destination.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    nodes: Vec<NodeId>,
    length: f64,
}

impl Path {
    /// Checks adjacency and simplicity, and computes the weighted length.
    pub fn new(t: &Topology, nodes: Vec<NodeId>) -> Result<Path, PathError> {
        if nodes.len() < 2 {
            return Err(PathError::InvalidPathSet(format!("path {nodes:?} has fewer than two nodes")));
        }
        let mut seen = vec![false; t.node_count()];
        for &n in &nodes {
            if n >= t.node_count() {
                return Err(PathError::UnknownNode(n));
            }
            if std::mem::replace(&mut seen[n], true) {
                return Err(PathError::InvalidPathSet(format!("path {nodes:?} repeats node {n}")));
            }
        }
        let mut length = 0.0;
        for w in nodes.windows(2) {
            let e = t
                .edge_between(w[0], w[1])
                .ok_or_else(|| PathError::InvalidPathSet(format!("no edge between {} and {}", w[0], w[1])))?;
            length += t.edge(e).weight;
        }
        Ok(Path { nodes, length })
    }

    pub(crate) fn from_trusted(t: &Topology, nodes: Vec<NodeId>) -> Path {
        let length = nodes
            .windows(2)
            .map(|w| t.edge(t.edge_between(w[0], w[1]).expect("consecutive nodes adjacent")).weight)
            .sum();
        Path { nodes, length }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn hops(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn src(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn dst(&self) -> NodeId {
        *self.nodes.last().expect("nonempty path")
    }

    pub fn edges<'a>(&'a self, t: &'a Topology) -> impl Iterator<Item = EdgeId> + 'a {
        self.nodes.windows(2).map(move |w| t.edge_between(w[0], w[1]).expect("path valid in topology"))
    }

    /// Directed links in travel order.
    pub fn links<'a>(&'a self, t: &'a Topology) -> impl Iterator<Item = LinkId> + 'a {
        self.nodes.windows(2).map(move |w| t.link_between(w[0], w[1]).expect("path valid in topology"))
    }

    pub fn names(&self, t: &Topology) -> Vec<String> {
        self.nodes.iter().map(|&n| t.node_name(n).to_string()).collect()
    }

    /// Ordering by (length, node sequence).
    pub fn cmp_by_length(&self, other: &Path) -> Ordering {
        self.length.total_cmp(&other.length).then_with(|| self.nodes.cmp(&other.nodes))
    }
}

/// Paths found for one ordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGroup {
    pub src: NodeId,
    pub dst: NodeId,
    pub paths: Vec<Path>,
    /// Maximum number of edge-disjoint paths between the pair, when the
    /// algorithm computed it.
    pub max_disjoint: Option<usize>,
}

impl PathGroup {
    pub fn empty(src: NodeId, dst: NodeId) -> Self {
        PathGroup { src, dst, paths: Vec::new(), max_disjoint: None }
    }

    pub fn is_disconnected(&self) -> bool {
        self.paths.is_empty()
    }

    /// Whether a shortest disjoint pair can be computed for this pair.
    pub fn supports_disjoint_pair(&self) -> Option<bool> {
        self.max_disjoint.map(|x| x >= 2)
    }

    pub fn sort_by_length(&mut self) {
        self.paths.sort_by(Path::cmp_by_length);
    }

    /// True when no two paths share an undirected edge.
    pub fn is_edge_disjoint(&self, t: &Topology) -> bool {
        let mut used = vec![false; t.edge_count()];
        self.paths.iter().all(|p| p.edges(t).all(|e| !std::mem::replace(&mut used[e], true)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathAlgorithm {
    Custom,
    Suurballe,
    Ksp,
    Edksp,
    Ecmp,
    Vlb,
}

impl PathAlgorithm {
    pub const ALL: [PathAlgorithm; 6] = [
        PathAlgorithm::Custom,
        PathAlgorithm::Suurballe,
        PathAlgorithm::Ksp,
        PathAlgorithm::Edksp,
        PathAlgorithm::Ecmp,
        PathAlgorithm::Vlb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PathAlgorithm::Custom => "custom",
            PathAlgorithm::Suurballe => "suurballe",
            PathAlgorithm::Ksp => "ksp",
            PathAlgorithm::Edksp => "edksp",
            PathAlgorithm::Ecmp => "ecmp",
            PathAlgorithm::Vlb => "vlb",
        }
    }
}

impl fmt::Display for PathAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PathAlgorithm {
    type Err = PathError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PathAlgorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| PathError::UnknownAlgorithm(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathParams {
    /// Path count for ksp, edksp and vlb.
    pub k: usize,
    pub seed: u64,
    pub ecmp_cap: usize,
}

impl Default for PathParams {
    fn default() -> Self {
        PathParams { k: DEFAULT_K, seed: 0, ecmp_cap: DEFAULT_ECMP_CAP }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub algorithm: PathAlgorithm,
    pub params: PathParams,
    pub groups: Vec<PathGroup>,
}

impl PathSet {
    pub fn group(&self, src: NodeId, dst: NodeId) -> Option<&PathGroup> {
        self.groups.iter().find(|g| g.src == src && g.dst == dst)
    }

    pub fn disconnected(&self) -> impl Iterator<Item = &PathGroup> {
        self.groups.iter().filter(|g| g.is_disconnected())
    }

    pub fn path_count(&self) -> usize {
        self.groups.iter().map(|g| g.paths.len()).sum()
    }

    pub fn to_doc(&self, t: &Topology) -> PathSetDoc {
        PathSetDoc {
            schema_version: PATHSET_SCHEMA_VERSION,
            topology: t.name().to_string(),
            algorithm: self.algorithm,
            params: self.params,
            groups: self
                .groups
                .iter()
                .map(|g| PathGroupDoc {
                    src: t.node_name(g.src).to_string(),
                    dst: t.node_name(g.dst).to_string(),
                    disconnected: g.is_disconnected(),
                    max_disjoint: g.max_disjoint,
                    paths: g.paths.iter().map(|p| p.names(t)).collect(),
                })
                .collect(),
        }
    }

    pub fn from_doc(t: &Topology, doc: &PathSetDoc) -> Result<PathSet, PathError> {
        if doc.schema_version != PATHSET_SCHEMA_VERSION {
            return Err(PathError::InvalidPathSet(format!("unsupported schema version {}", doc.schema_version)));
        }
        let mut groups = Vec::with_capacity(doc.groups.len());
        for g in &doc.groups {
            let src = t.node_id(&g.src)?;
            let dst = t.node_id(&g.dst)?;
            let mut paths = Vec::with_capacity(g.paths.len());
            for names in &g.paths {
                let nodes = names.iter().map(|n| t.node_id(n)).collect::<Result<Vec<_>, _>>()?;
                let p = Path::new(t, nodes)?;
                if p.src() != src || p.dst() != dst {
                    return Err(PathError::InvalidPathSet(format!("path {names:?} does not run {}->{}", g.src, g.dst)));
                }
                paths.push(p);
            }
            groups.push(PathGroup { src, dst, paths, max_disjoint: g.max_disjoint });
        }
        Ok(PathSet { algorithm: doc.algorithm, params: doc.params, groups })
    }
}

pub const PATHSET_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSetDoc {
    pub schema_version: u32,
    pub topology: String,
    pub algorithm: PathAlgorithm,
    pub params: PathParams,
    pub groups: Vec<PathGroupDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathGroupDoc {
    pub src: String,
    pub dst: String,
    pub disconnected: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_disjoint: Option<usize>,
    pub paths: Vec<Vec<String>>,
}

/// Every ordered pair of distinct nodes, in (src, dst) order.
pub fn all_pairs(t: &Topology) -> Vec<(NodeId, NodeId)> {
    let n = t.node_count();
    (0..n).flat_map(|s| (0..n).filter(move |&d| d != s).map(move |d| (s, d))).collect()
}

pub(crate) fn check_pair(t: &Topology, s: NodeId, dst: NodeId) -> Result<(), PathError> {
    for n in [s, dst] {
        if n >= t.node_count() {
            return Err(PathError::UnknownNode(n));
        }
    }
    if s == dst {
        return Err(PathError::SameEndpoints(s));
    }
    Ok(())
}

/// Per-pair generator seed derived from the run seed.
pub(crate) fn pair_seed(seed: u64, s: NodeId, dst: NodeId) -> u64 {
    let mut z = seed ^ ((s as u64) << 32 | dst as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn group_for(t: &Topology, alg: PathAlgorithm, s: NodeId, dst: NodeId, params: &PathParams) -> Result<PathGroup, PathError> {
    let mut group = match alg {
        PathAlgorithm::Custom => custom_paths(t, s, dst)?,
        PathAlgorithm::Suurballe => {
            let group = custom_paths(t, s, dst)?;
            if group.paths.len() == 2 {
                PathGroup { max_disjoint: group.max_disjoint, ..suurballe_pair(t, s, dst)? }
            } else {
                group
            }
        }
        PathAlgorithm::Ksp => yen_ksp(t, s, dst, params.k)?,
        PathAlgorithm::Edksp => edksp(t, s, dst, params.k)?,
        PathAlgorithm::Ecmp => ecmp_paths(t, s, dst, params.ecmp_cap)?,
        PathAlgorithm::Vlb => vlb_paths(t, s, dst, params.k, pair_seed(params.seed, s, dst))?,
    };
    group.sort_by_length();
    Ok(group)
}

/// One group per requested pair, each sorted by (length, node sequence).
/// Pairs are computed independently and in parallel.
pub fn compute_path_set(
    t: &Topology,
    alg: PathAlgorithm,
    pairs: &[(NodeId, NodeId)],
    params: &PathParams,
) -> Result<PathSet, PathError> {
    let mut seen = std::collections::HashSet::new();
    for &(s, d) in pairs {
        check_pair(t, s, d)?;
        if !seen.insert((s, d)) {
            return Err(PathError::InvalidPathSet(format!("pair ({s}, {d}) requested twice")));
        }
    }
    let groups = pairs
        .par_iter()
        .map(|&(s, d)| group_for(t, alg, s, d, params))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PathSet { algorithm: alg, params: *params, groups })
}
