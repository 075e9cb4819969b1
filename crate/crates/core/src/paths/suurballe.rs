use super::maxflow::{construct_paths, MaxFlowResult};
use super::shortest::shortest_path_avoiding;
use super::{check_pair, PathGroup};
use crate::error::PathError;
use crate::topo::{NodeId, Topology};

/// The pair of edge-disjoint `s -> dst` paths with minimum total weight.
///
/// The first shortest path is reversed in the residual graph with negated
/// weights, a second shortest path is found there (Bellman-Ford, since
/// reversed arcs are negative), and edges the two paths cross in opposite
/// directions cancel before the pair is traced out.
pub fn suurballe_pair(t: &Topology, s: NodeId, dst: NodeId) -> Result<PathGroup, PathError> {
    check_pair(t, s, dst)?;
    let none = || PathError::NoDisjointPair { src: s, dst };
    let first = shortest_path_avoiding(t, s, dst, &[], &[]).ok_or_else(none)?;

    // direction of the first path on each edge: +1 along u->v, -1 against, 0 unused
    let mut dir = vec![0i8; t.edge_count()];
    for w in first.nodes().windows(2) {
        let e = t.edge_between(w[0], w[1]).expect("adjacent");
        dir[e] = if t.edge(e).u == w[0] { 1 } else { -1 };
    }

    // residual arcs (from, to, cost, edge)
    let mut arcs = Vec::with_capacity(2 * t.edge_count());
    for (e, edge) in t.edges().iter().enumerate() {
        match dir[e] {
            0 => {
                arcs.push((edge.u, edge.v, edge.weight, e));
                arcs.push((edge.v, edge.u, edge.weight, e));
            }
            1 => arcs.push((edge.v, edge.u, -edge.weight, e)),
            _ => arcs.push((edge.u, edge.v, -edge.weight, e)),
        }
    }
    let n = t.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    dist[s] = 0.0;
    for _ in 1..n {
        let mut changed = false;
        for (i, &(a, b, c, _)) in arcs.iter().enumerate() {
            if dist[a].is_finite() && dist[a] + c < dist[b] - 1e-12 {
                dist[b] = dist[a] + c;
                pred[b] = Some(i);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if !dist[dst].is_finite() {
        return Err(none());
    }

    let mut net: Vec<i8> = dir.clone();
    let mut v = dst;
    let mut steps = 0;
    while v != s {
        let i = pred[v].ok_or_else(none)?;
        let (a, _, _, e) = arcs[i];
        net[e] += if t.edge(e).u == a { 1 } else { -1 };
        v = a;
        steps += 1;
        if steps > n {
            return Err(PathError::InconsistentFlow(v));
        }
    }
    let flow = MaxFlowResult { value: 2, arc_flow: Vec::new(), net_flow: net, augmenting_paths: Vec::new() };
    let mut group = construct_paths(t, &flow, s, dst)?;
    group.max_disjoint = None;
    group.sort_by_length();
    Ok(group)
}
