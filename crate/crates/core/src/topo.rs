//! Network and demand data model.
//!
//! A [`Topology`] is an undirected capacitated simple graph with named nodes.
//! Every undirected edge is a full-duplex link: each direction carries its own
//! load against the edge capacity. Directed links are numbered `2 * edge`
//! (from `u` to `v`) and `2 * edge + 1` (from `v` to `u`).

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::TopoError;

pub type NodeId = usize;
pub type EdgeId = usize;
pub type LinkId = usize;

pub const DEFAULT_WEIGHT: f64 = 1.0;

/// On-disk form of a topology. Field order and naming match the JSON schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyDoc {
    pub name: String,
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub u: String,
    pub v: String,
    pub capacity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub capacity: f64,
    pub weight: f64,
}

impl Edge {
    /// The endpoint opposite to `x`.
    pub fn other(&self, x: NodeId) -> NodeId {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// One broken invariant found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateNode { node: String },
    SelfLoop { edge: usize, node: String },
    UnknownEndpoint { edge: usize, node: String },
    DuplicateEdge { edge: usize, u: String, v: String },
    NonPositiveCapacity { edge: usize, capacity: f64 },
    InvalidWeight { edge: usize, weight: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateNode { node } => write!(f, "node {node:?} declared more than once"),
            Violation::SelfLoop { edge, node } => write!(f, "edge #{edge} is a self-loop on {node:?}"),
            Violation::UnknownEndpoint { edge, node } => {
                write!(f, "edge #{edge} references undeclared node {node:?}")
            }
            Violation::DuplicateEdge { edge, u, v } => {
                write!(f, "edge #{edge} ({u}-{v}) duplicates an earlier edge")
            }
            Violation::NonPositiveCapacity { edge, capacity } => {
                write!(f, "edge #{edge} has non-positive capacity {capacity}")
            }
            Violation::InvalidWeight { edge, weight } => {
                write!(f, "edge #{edge} has invalid weight {weight}")
            }
        }
    }
}

/// Result of validating a topology document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Validation {
    pub violations: Vec<Violation>,
    /// Advisory remarks that do not make the document invalid (isolated nodes).
    pub notes: Vec<String>,
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every topology invariant and reports all violations, in document order.
pub fn validate(doc: &TopologyDoc) -> Validation {
    let mut out = Validation::default();
    let mut declared = HashSet::new();
    for node in &doc.nodes {
        if !declared.insert(node.as_str()) {
            out.violations.push(Violation::DuplicateNode { node: node.clone() });
        }
    }
    let mut seen_pairs = HashSet::new();
    let mut touched = HashSet::new();
    for (i, e) in doc.edges.iter().enumerate() {
        let mut endpoints_ok = true;
        for node in [&e.u, &e.v] {
            if !declared.contains(node.as_str()) {
                out.violations.push(Violation::UnknownEndpoint { edge: i, node: node.clone() });
                endpoints_ok = false;
            }
        }
        if e.u == e.v {
            out.violations.push(Violation::SelfLoop { edge: i, node: e.u.clone() });
        } else if endpoints_ok {
            let key = if e.u < e.v { (e.u.as_str(), e.v.as_str()) } else { (e.v.as_str(), e.u.as_str()) };
            if !seen_pairs.insert(key) {
                out.violations.push(Violation::DuplicateEdge { edge: i, u: e.u.clone(), v: e.v.clone() });
            }
        }
        touched.insert(e.u.as_str());
        touched.insert(e.v.as_str());
        if !(e.capacity > 0.0 && e.capacity.is_finite()) {
            out.violations.push(Violation::NonPositiveCapacity { edge: i, capacity: e.capacity });
        }
        if let Some(w) = e.weight {
            if !(w >= 0.0 && w.is_finite()) {
                out.violations.push(Violation::InvalidWeight { edge: i, weight: w });
            }
        }
    }
    for node in &doc.nodes {
        if !touched.contains(node.as_str()) {
            out.notes.push(format!("node {node:?} is isolated"));
        }
    }
    out
}

/// Undirected capacitated graph. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    name: String,
    nodes: Vec<String>,
    index: HashMap<String, NodeId>,
    edges: Vec<Edge>,
    // (neighbor, edge), sorted by neighbor
    adjacency: Vec<Vec<(NodeId, EdgeId)>>,
}

impl Topology {
    pub fn from_doc(doc: &TopologyDoc) -> Result<Self, TopoError> {
        if let Some(v) = validate(doc).violations.into_iter().next() {
            return Err(TopoError::Invalid(v));
        }
        let index: HashMap<String, NodeId> =
            doc.nodes.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let edges = doc
            .edges
            .iter()
            .map(|e| Edge {
                u: index[&e.u],
                v: index[&e.v],
                capacity: e.capacity,
                weight: e.weight.unwrap_or(DEFAULT_WEIGHT),
            })
            .collect();
        Ok(Self::assemble(doc.name.clone(), doc.nodes.clone(), index, edges))
    }

    fn assemble(name: String, nodes: Vec<String>, index: HashMap<String, NodeId>, edges: Vec<Edge>) -> Self {
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (id, e) in edges.iter().enumerate() {
            adjacency[e.u].push((e.v, id));
            adjacency[e.v].push((e.u, id));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Topology { name, nodes, index, edges, adjacency }
    }

    pub fn to_doc(&self) -> TopologyDoc {
        TopologyDoc {
            name: self.name.clone(),
            nodes: self.nodes.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDoc {
                    u: self.nodes[e.u].clone(),
                    v: self.nodes[e.v].clone(),
                    capacity: e.capacity,
                    weight: Some(e.weight),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("topology serializes")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn link_count(&self) -> usize {
        2 * self.edges.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        &self.nodes[id]
    }

    pub fn node_id(&self, name: &str) -> Result<NodeId, TopoError> {
        self.index.get(name).copied().ok_or_else(|| TopoError::UnknownNode(name.to_string()))
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    /// Neighbors of `node` with the connecting edge, ordered by neighbor id.
    pub fn neighbors(&self, node: NodeId) -> &[(NodeId, EdgeId)] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node].len()
    }

    pub fn edge_between(&self, a: NodeId, b: NodeId) -> Option<EdgeId> {
        let list = self.adjacency.get(a)?;
        list.binary_search_by_key(&b, |&(n, _)| n).ok().map(|i| list[i].1)
    }

    /// Directed link used when travelling `from -> to`.
    pub fn link_between(&self, from: NodeId, to: NodeId) -> Option<LinkId> {
        let e = self.edge_between(from, to)?;
        Some(if self.edges[e].u == from { 2 * e } else { 2 * e + 1 })
    }

    pub fn link_capacity(&self, link: LinkId) -> f64 {
        self.edges[link / 2].capacity
    }

    /// `(from, to)` of a directed link.
    pub fn link_endpoints(&self, link: LinkId) -> (NodeId, NodeId) {
        let e = &self.edges[link / 2];
        if link % 2 == 0 {
            (e.u, e.v)
        } else {
            (e.v, e.u)
        }
    }

    pub fn link_label(&self, link: LinkId) -> String {
        let (a, b) = self.link_endpoints(link);
        format!("{}->{}", self.nodes[a], self.nodes[b])
    }

    /// Copy of the topology with one edge removed. Node set is unchanged.
    pub fn without_edge(&self, id: EdgeId) -> Topology {
        let mut edges = self.edges.clone();
        edges.remove(id);
        Self::assemble(self.name.clone(), self.nodes.clone(), self.index.clone(), edges)
    }

    /// Copy with every capacity multiplied by `factor`.
    pub fn with_capacity_scale(&self, factor: f64) -> Topology {
        let edges = self.edges.iter().map(|e| Edge { capacity: e.capacity * factor, ..*e }).collect();
        Self::assemble(self.name.clone(), self.nodes.clone(), self.index.clone(), edges)
    }

    /// Nodes reachable from `src`, ignoring capacities.
    pub fn reachable_from(&self, src: NodeId) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![src];
        seen[src] = true;
        while let Some(u) = stack.pop() {
            for &(v, _) in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}

pub fn parse_topology(text: &str) -> Result<Topology, TopoError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('<') {
        return parse_graphml(text);
    }
    let doc: TopologyDoc = serde_json::from_str(text).map_err(|e| TopoError::Syntax(e.to_string()))?;
    Topology::from_doc(&doc)
}

/// Reads node ids, edge endpoints and an optional edge `capacity` key.
/// Capacity defaults to 1.0 and weight to 1.0.
pub fn parse_graphml(text: &str) -> Result<Topology, TopoError> {
    let xml = roxmltree::Document::parse(text).map_err(|e| TopoError::Syntax(e.to_string()))?;
    let root = xml.root_element();
    let mut capacity_key = None;
    let mut weight_key = None;
    for key in root.children().filter(|n| n.has_tag_name("key")) {
        let applies_to_edges = matches!(key.attribute("for"), Some("edge") | Some("all") | None);
        if !applies_to_edges {
            continue;
        }
        match key.attribute("attr.name") {
            Some("capacity") => capacity_key = key.attribute("id").map(str::to_string),
            Some("weight") => weight_key = key.attribute("id").map(str::to_string),
            _ => {}
        }
    }
    let graph = root
        .children()
        .find(|n| n.has_tag_name("graph"))
        .ok_or_else(|| TopoError::Syntax("graphml document has no <graph> element".into()))?;
    let name = graph.attribute("id").unwrap_or("graphml").to_string();
    let mut doc = TopologyDoc { name, nodes: Vec::new(), edges: Vec::new() };
    for el in graph.children().filter(|n| n.is_element()) {
        if el.has_tag_name("node") {
            let id = el.attribute("id").ok_or_else(|| TopoError::Syntax("<node> without id".into()))?;
            doc.nodes.push(id.to_string());
        } else if el.has_tag_name("edge") {
            let u = el.attribute("source").ok_or_else(|| TopoError::Syntax("<edge> without source".into()))?;
            let v = el.attribute("target").ok_or_else(|| TopoError::Syntax("<edge> without target".into()))?;
            let data = |key: &Option<String>| -> Result<Option<f64>, TopoError> {
                let Some(key) = key else { return Ok(None) };
                let Some(d) = el.children().find(|d| d.has_tag_name("data") && d.attribute("key") == Some(key)) else {
                    return Ok(None);
                };
                let raw = d.text().unwrap_or("").trim();
                raw.parse::<f64>()
                    .map(Some)
                    .map_err(|_| TopoError::Syntax(format!("edge {u}-{v}: bad numeric value {raw:?}")))
            };
            doc.edges.push(EdgeDoc {
                u: u.to_string(),
                v: v.to_string(),
                capacity: data(&capacity_key)?.unwrap_or(1.0),
                weight: data(&weight_key)?,
            });
        }
    }
    Topology::from_doc(&doc)
}

/// Symmetric directed graph with unit capacity on every arc; the max-flow view
/// of a topology.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitDigraph {
    node_count: usize,
    arcs: Vec<Arc>,
    outgoing: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arc {
    pub from: NodeId,
    pub to: NodeId,
    pub edge: EdgeId,
    /// Index of the opposite-direction arc of the same edge.
    pub twin: usize,
    /// True when the arc runs along the edge's declared `u -> v`.
    pub forward: bool,
}

impl Arc {
    pub fn capacity(&self) -> u32 {
        1
    }
}

impl UnitDigraph {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    /// Arc indices leaving `node`, ordered by head node.
    pub fn outgoing(&self, node: NodeId) -> &[usize] {
        &self.outgoing[node]
    }
}

/// Two unit arcs per undirected edge, ordered by (tail, head).
pub fn to_unit_digraph(t: &Topology) -> UnitDigraph {
    let mut arcs: Vec<Arc> = t
        .edges()
        .iter()
        .enumerate()
        .flat_map(|(id, e)| {
            [
                Arc { from: e.u, to: e.v, edge: id, twin: 0, forward: true },
                Arc { from: e.v, to: e.u, edge: id, twin: 0, forward: false },
            ]
        })
        .collect();
    arcs.sort_by_key(|a| (a.from, a.to));
    let mut position: HashMap<(NodeId, NodeId), usize> = HashMap::with_capacity(arcs.len());
    for (i, a) in arcs.iter().enumerate() {
        position.insert((a.from, a.to), i);
    }
    for i in 0..arcs.len() {
        arcs[i].twin = position[&(arcs[i].to, arcs[i].from)];
    }
    let mut outgoing = vec![Vec::new(); t.node_count()];
    for (i, a) in arcs.iter().enumerate() {
        outgoing[a.from].push(i);
    }
    UnitDigraph { node_count: t.node_count(), arcs, outgoing }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandDoc {
    pub src: String,
    pub dst: String,
    pub demand: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrafficMatrixDoc {
    pub demands: Vec<DemandDoc>,
}

/// Ordered-pair demand map. Entries keep their insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrafficMatrix {
    entries: Vec<DemandDoc>,
}

/// A positive demand resolved against a topology.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Demand {
    pub src: NodeId,
    pub dst: NodeId,
    pub value: f64,
}

impl TrafficMatrix {
    pub fn new(entries: Vec<DemandDoc>) -> Result<Self, TopoError> {
        let mut seen = HashSet::new();
        for d in &entries {
            if d.src == d.dst {
                return Err(TopoError::DiagonalDemand(d.src.clone()));
            }
            if !d.demand.is_finite() || d.demand < 0.0 {
                return Err(TopoError::InvalidDemand { src: d.src.clone(), dst: d.dst.clone(), value: d.demand });
            }
            if !seen.insert((d.src.as_str(), d.dst.as_str())) {
                return Err(TopoError::DuplicateDemand { src: d.src.clone(), dst: d.dst.clone() });
            }
        }
        Ok(TrafficMatrix { entries })
    }

    pub fn from_triples<S: Into<String>>(triples: impl IntoIterator<Item = (S, S, f64)>) -> Result<Self, TopoError> {
        Self::new(
            triples
                .into_iter()
                .map(|(s, t, d)| DemandDoc { src: s.into(), dst: t.into(), demand: d })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[DemandDoc] {
        &self.entries
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|d| d.demand).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.iter().all(|d| d.demand == 0.0)
    }

    pub fn get(&self, src: &str, dst: &str) -> f64 {
        self.entries.iter().find(|d| d.src == src && d.dst == dst).map_or(0.0, |d| d.demand)
    }

    /// Same pairs, every demand multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> TrafficMatrix {
        TrafficMatrix {
            entries: self.entries.iter().map(|d| DemandDoc { demand: d.demand * factor, ..d.clone() }).collect(),
        }
    }

    /// The nonzero demands as node ids, sorted by (src, dst).
    pub fn resolve(&self, t: &Topology) -> Result<Vec<Demand>, TopoError> {
        let mut out = Vec::new();
        for d in &self.entries {
            let src = t.node_id(&d.src)?;
            let dst = t.node_id(&d.dst)?;
            if d.demand > 0.0 {
                out.push(Demand { src, dst, value: d.demand });
            }
        }
        out.sort_by_key(|d| (d.src, d.dst));
        Ok(out)
    }

    pub fn to_doc(&self) -> TrafficMatrixDoc {
        TrafficMatrixDoc { demands: self.entries.clone() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("traffic matrix serializes")
    }
}

pub fn parse_traffic_matrix(text: &str) -> Result<TrafficMatrix, TopoError> {
    let doc: TrafficMatrixDoc = serde_json::from_str(text).map_err(|e| TopoError::Syntax(e.to_string()))?;
    TrafficMatrix::new(doc.demands)
}

/// Topologies shipped with the crate.
pub mod bundled {
    use super::{parse_topology, Topology};

    pub const GSCALE_JSON: &str = include_str!("../data/gscale.json");

    /// 12-node, 19-link inter-datacenter WAN.
    pub fn gscale() -> Topology {
        parse_topology(GSCALE_JSON).expect("bundled gscale.json is valid")
    }
}
