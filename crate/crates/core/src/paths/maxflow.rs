use std::collections::VecDeque;

use super::{check_pair, Path, PathGroup};
use crate::error::PathError;
use crate::topo::{to_unit_digraph, NodeId, Topology, UnitDigraph};

/// Unit max flow between two nodes of a [`UnitDigraph`].
#[derive(Debug, Clone, PartialEq)]
pub struct MaxFlowResult {
    pub value: usize,
    /// Flow on each digraph arc (0 or 1), indexed like `UnitDigraph::arcs`.
    pub arc_flow: Vec<u8>,
    /// Per undirected edge: flow(u->v) - flow(v->u) along the declared
    /// orientation. Opposite unit flows cancel.
    pub net_flow: Vec<i8>,
    /// Node sequences of the augmenting paths, in discovery order.
    pub augmenting_paths: Vec<Vec<NodeId>>,
}

impl MaxFlowResult {
    /// Builds a flow by sending one unit along each given walk, each step on
    /// its own directed arc. Used to reproduce flows whose augmenting paths
    /// cross an edge in both directions.
    pub fn from_augmenting_paths(t: &Topology, paths: &[Vec<NodeId>]) -> Result<MaxFlowResult, PathError> {
        let g = to_unit_digraph(t);
        let mut arc_flow = vec![0u8; g.arcs().len()];
        for p in paths {
            for w in p.windows(2) {
                let arc = g
                    .outgoing(w[0])
                    .iter()
                    .copied()
                    .find(|&a| g.arcs()[a].to == w[1])
                    .ok_or_else(|| PathError::InvalidPathSet(format!("no arc {} -> {}", w[0], w[1])))?;
                if arc_flow[arc] == 1 {
                    return Err(PathError::InconsistentFlow(w[0]));
                }
                arc_flow[arc] = 1;
            }
        }
        Ok(MaxFlowResult {
            value: paths.len(),
            net_flow: net_flow(&g, t.edge_count(), &arc_flow),
            arc_flow,
            augmenting_paths: paths.to_vec(),
        })
    }

    /// Net flow across edge `e` in the direction `from -> other end`.
    pub fn net_from(&self, t: &Topology, e: usize, from: NodeId) -> i8 {
        if t.edge(e).u == from {
            self.net_flow[e]
        } else {
            -self.net_flow[e]
        }
    }
}

fn net_flow(g: &UnitDigraph, edge_count: usize, arc_flow: &[u8]) -> Vec<i8> {
    let mut net = vec![0i8; edge_count];
    for (a, &f) in g.arcs().iter().zip(arc_flow) {
        if f == 1 {
            net[a.edge] += if a.forward { 1 } else { -1 };
        }
    }
    net
}

struct Residual {
    head: Vec<NodeId>,
    cap: Vec<u8>,
    adj: Vec<Vec<usize>>,
}

impl Residual {
    // residual edge 2i is arc i, 2i+1 its reverse
    fn new(g: &UnitDigraph) -> Self {
        let mut head = Vec::with_capacity(2 * g.arcs().len());
        let mut cap = Vec::with_capacity(2 * g.arcs().len());
        let mut adj = vec![Vec::new(); g.node_count()];
        for (i, a) in g.arcs().iter().enumerate() {
            head.push(a.to);
            cap.push(1);
            head.push(a.from);
            cap.push(0);
            adj[a.from].push(2 * i);
            adj[a.to].push(2 * i + 1);
        }
        Residual { head, cap, adj }
    }

    fn levels(&self, s: NodeId) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.adj.len()];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.head[e];
                if self.cap[e] > 0 && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        level
    }

    /// One augmenting path in the level graph, advancing `cursor` past dead ends.
    fn augment(&mut self, s: NodeId, t: NodeId, level: &[usize], cursor: &mut [usize]) -> Option<Vec<NodeId>> {
        let mut stack: Vec<usize> = Vec::new();
        let mut u = s;
        loop {
            if u == t {
                let mut nodes = vec![s];
                for &e in &stack {
                    self.cap[e] -= 1;
                    self.cap[e ^ 1] += 1;
                    nodes.push(self.head[e]);
                }
                return Some(nodes);
            }
            let mut advanced = false;
            while cursor[u] < self.adj[u].len() {
                let e = self.adj[u][cursor[u]];
                let v = self.head[e];
                if self.cap[e] > 0 && level[v] == level[u] + 1 {
                    stack.push(e);
                    u = v;
                    advanced = true;
                    break;
                }
                cursor[u] += 1;
            }
            if !advanced {
                // dead end: retreat and skip the edge that led here
                let e = stack.pop()?;
                u = self.head[e ^ 1];
                cursor[u] += 1;
            }
        }
    }
}

/// Dinic's blocking-flow max flow on a unit-capacity symmetric digraph.
pub fn dinic_max_flow(g: &UnitDigraph, s: NodeId, t: NodeId) -> Result<MaxFlowResult, PathError> {
    let n = g.node_count();
    for x in [s, t] {
        if x >= n {
            return Err(PathError::UnknownNode(x));
        }
    }
    if s == t {
        return Err(PathError::SameEndpoints(s));
    }
    let mut r = Residual::new(g);
    let mut augmenting_paths = Vec::new();
    loop {
        let level = r.levels(s);
        if level[t] == usize::MAX {
            break;
        }
        let mut cursor = vec![0usize; n];
        while let Some(p) = r.augment(s, t, &level, &mut cursor) {
            augmenting_paths.push(p);
        }
    }
    let arc_flow: Vec<u8> = (0..g.arcs().len()).map(|i| 1 - r.cap[2 * i]).collect();
    let edge_count = g.arcs().iter().map(|a| a.edge + 1).max().unwrap_or(0);
    Ok(MaxFlowResult {
        value: augmenting_paths.len(),
        net_flow: net_flow(g, edge_count, &arc_flow),
        arc_flow,
        augmenting_paths,
    })
}

/// Traces `r.value` edge-disjoint paths through the net flow.
///
/// Edges whose two directions cancelled carry no net flow and are never
/// used. From each node the walk takes the first unvisited edge with net
/// flow leaving it, in neighbor order; a walk that returns to a node already
/// on the current path drops the loop.
pub fn construct_paths(t: &Topology, r: &MaxFlowResult, s: NodeId, dst: NodeId) -> Result<PathGroup, PathError> {
    check_pair(t, s, dst)?;
    let n = t.node_count();
    let mut balance = vec![0i64; n];
    let mut out_edges: Vec<Vec<(NodeId, usize)>> = vec![Vec::new(); n];
    for u in 0..n {
        for &(v, e) in t.neighbors(u) {
            match r.net_from(t, e, u) {
                1 => {
                    out_edges[u].push((v, e));
                    balance[u] += 1;
                }
                -1 => balance[u] -= 1,
                0 => {}
                _ => return Err(PathError::InconsistentFlow(u)),
            }
        }
    }
    for (u, &b) in balance.iter().enumerate() {
        let expected = if u == s {
            r.value as i64
        } else if u == dst {
            -(r.value as i64)
        } else {
            0
        };
        if b != expected {
            return Err(PathError::InconsistentFlow(u));
        }
    }

    let mut visited = vec![false; t.edge_count()];
    let mut cursor = vec![0usize; n];
    let mut position = vec![usize::MAX; n];
    let mut paths = Vec::with_capacity(r.value);
    for _ in 0..r.value {
        let mut nodes = vec![s];
        position[s] = 0;
        let mut u = s;
        while u != dst {
            let next = loop {
                let Some(&(v, e)) = out_edges[u].get(cursor[u]) else {
                    return Err(PathError::InconsistentFlow(u));
                };
                cursor[u] += 1;
                if !visited[e] {
                    visited[e] = true;
                    break v;
                }
            };
            if position[next] != usize::MAX {
                for &dropped in &nodes[position[next] + 1..] {
                    position[dropped] = usize::MAX;
                }
                nodes.truncate(position[next] + 1);
            } else {
                position[next] = nodes.len();
                nodes.push(next);
            }
            u = next;
        }
        for &x in &nodes {
            position[x] = usize::MAX;
        }
        paths.push(Path::from_trusted(t, nodes));
    }
    Ok(PathGroup { src: s, dst, paths, max_disjoint: Some(r.value) })
}

/// Maximum number of pairwise edge-disjoint `s -> dst` paths, shortest first.
pub fn custom_paths(t: &Topology, s: NodeId, dst: NodeId) -> Result<PathGroup, PathError> {
    check_pair(t, s, dst)?;
    let flow = dinic_max_flow(&to_unit_digraph(t), s, dst)?;
    let mut group = construct_paths(t, &flow, s, dst)?;
    group.sort_by_length();
    Ok(group)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    fn ids(t: &Topology, names: &[&str]) -> Vec<NodeId> {
        names.iter().map(|n| t.node_id(n).unwrap()).collect()
    }

    #[test]
    fn flow_values() {
        let t = triangle();
        let g = to_unit_digraph(&t);
        assert_eq!(dinic_max_flow(&g, 0, 2).unwrap().value, 2);
        let p = path3();
        assert_eq!(dinic_max_flow(&to_unit_digraph(&p), 0, 2).unwrap().value, 1);
        let k = k4();
        let g = to_unit_digraph(&k);
        for s in 0..4 {
            for d in 0..4 {
                if s != d {
                    assert_eq!(dinic_max_flow(&g, s, d).unwrap().value, 3);
                }
            }
        }
    }

    #[test]
    fn flow_errors() {
        let g = to_unit_digraph(&triangle());
        assert_eq!(dinic_max_flow(&g, 1, 1), Err(PathError::SameEndpoints(1)));
        assert_eq!(dinic_max_flow(&g, 0, 7), Err(PathError::UnknownNode(7)));
    }

    #[test]
    fn triangle_reconstruction() {
        let t = triangle();
        let flow = dinic_max_flow(&to_unit_digraph(&t), 0, 2).unwrap();
        let mut group = construct_paths(&t, &flow, 0, 2).unwrap();
        group.sort_by_length();
        let seqs: Vec<Vec<NodeId>> = group.paths.iter().map(|p| p.nodes().to_vec()).collect();
        assert_eq!(seqs, vec![ids(&t, &["a", "c"]), ids(&t, &["a", "b", "c"])]);
    }

    #[test]
    fn zero_flow_gives_empty_group() {
        let t = graph("split", &["a", "b", "c"], &[("a", "b", 1.0)]);
        let flow = dinic_max_flow(&to_unit_digraph(&t), 0, 2).unwrap();
        assert_eq!(flow.value, 0);
        assert!(construct_paths(&t, &flow, 0, 2).unwrap().paths.is_empty());
    }

    fn counteract_fixture() -> Topology {
        graph(
            "counteract",
            &["1", "2", "3", "4", "5", "6"],
            &[
                ("1", "2", 1.0),
                ("1", "3", 1.0),
                ("2", "4", 1.0),
                ("3", "5", 1.0),
                ("4", "5", 1.0),
                ("4", "6", 1.0),
                ("5", "6", 1.0),
            ],
        )
    }

    #[test]
    fn counteracted_edge_is_not_used() {
        let t = counteract_fixture();
        let a = ids(&t, &["1", "2", "4", "5", "6"]);
        let b = ids(&t, &["1", "3", "5", "4", "6"]);
        let flow = MaxFlowResult::from_augmenting_paths(&t, &[a, b]).unwrap();
        let e45 = t.edge_between(t.node_id("4").unwrap(), t.node_id("5").unwrap()).unwrap();
        assert_eq!(flow.net_flow[e45], 0);
        assert_eq!(flow.arc_flow.iter().filter(|&&f| f == 1).count(), 8);

        let group = construct_paths(&t, &flow, 0, 5).unwrap();
        assert_eq!(group.paths.len(), 2);
        assert!(group.is_edge_disjoint(&t));
        assert!(group.paths.iter().all(|p| p.edges(&t).all(|e| e != e45)));
        let mut seqs: Vec<Vec<NodeId>> = group.paths.iter().map(|p| p.nodes().to_vec()).collect();
        seqs.sort();
        assert_eq!(seqs, vec![ids(&t, &["1", "2", "4", "6"]), ids(&t, &["1", "3", "5", "6"])]);
    }

    #[test]
    fn conservation_violation_detected() {
        let t = path3();
        let mut flow = dinic_max_flow(&to_unit_digraph(&t), 0, 2).unwrap();
        flow.net_flow[1] = 0;
        assert!(matches!(construct_paths(&t, &flow, 0, 2), Err(PathError::InconsistentFlow(_))));
    }

    #[test]
    fn custom_examples() {
        let t = triangle();
        let g = custom_paths(&t, 0, 2).unwrap();
        let lengths: Vec<f64> = g.paths.iter().map(Path::length).collect();
        assert_eq!(lengths, vec![1.0, 2.0]);

        let d = diamond_shared();
        let g = custom_paths(&d, d.node_id("s").unwrap(), d.node_id("t").unwrap()).unwrap();
        assert_eq!(g.paths.len(), 1);

        assert_eq!(custom_paths(&t, 1, 1), Err(PathError::SameEndpoints(1)));
    }

    #[test]
    fn flow_with_loop_through_source_is_spliced() {
        // a unit circulation around the triangle through s is dropped
        let t = graph("loop", &["s", "x", "y", "t"], &[("s", "x", 1.0), ("x", "y", 1.0), ("y", "s", 1.0), ("s", "t", 1.0)]);
        let walk = ids(&t, &["s", "x", "y", "s", "t"]);
        let g = to_unit_digraph(&t);
        let mut arc_flow = vec![0u8; g.arcs().len()];
        for w in walk.windows(2) {
            let a = g.outgoing(w[0]).iter().copied().find(|&a| g.arcs()[a].to == w[1]).unwrap();
            arc_flow[a] = 1;
        }
        let net = net_flow(&g, t.edge_count(), &arc_flow);
        let flow = MaxFlowResult { value: 1, arc_flow, net_flow: net, augmenting_paths: vec![walk] };
        let group = construct_paths(&t, &flow, 0, 3).unwrap();
        assert_eq!(group.paths[0].nodes(), &ids(&t, &["s", "t"])[..]);
    }
}
