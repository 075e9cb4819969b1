use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_pair, Path, PathGroup};
use crate::error::PathError;
use crate::topo::{NodeId, Topology};

fn same_length(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

/// `(length, nodes)` label order with a tolerance on the length.
fn label_less(a: (f64, &[NodeId]), b: (f64, &[NodeId])) -> bool {
    if same_length(a.0, b.0) {
        a.1 < b.1
    } else {
        a.0 < b.0
    }
}

/// Shortest path by weight avoiding banned edges and nodes; among equally
/// short paths the lexicographically smallest node sequence wins.
pub(crate) fn shortest_path_avoiding(
    t: &Topology,
    s: NodeId,
    dst: NodeId,
    banned_edges: &[bool],
    banned_nodes: &[bool],
) -> Option<Path> {
    let n = t.node_count();
    if banned_nodes.get(s).copied().unwrap_or(false) || banned_nodes.get(dst).copied().unwrap_or(false) {
        return None;
    }
    let mut label: Vec<Option<(f64, Vec<NodeId>)>> = vec![None; n];
    let mut settled = vec![false; n];
    label[s] = Some((0.0, vec![s]));
    loop {
        let mut pick: Option<NodeId> = None;
        for v in 0..n {
            if settled[v] {
                continue;
            }
            if let Some((d, p)) = &label[v] {
                let better = match pick {
                    None => true,
                    Some(u) => {
                        let (du, pu) = label[u].as_ref().expect("picked node is labelled");
                        label_less((*d, p), (*du, pu))
                    }
                };
                if better {
                    pick = Some(v);
                }
            }
        }
        let u = pick?;
        settled[u] = true;
        if u == dst {
            let (_, nodes) = label[u].take().expect("labelled");
            return Some(Path::from_trusted(t, nodes));
        }
        let (du, pu) = label[u].clone().expect("labelled");
        for &(v, e) in t.neighbors(u) {
            if settled[v] || banned_edges.get(e).copied().unwrap_or(false) || banned_nodes.get(v).copied().unwrap_or(false) {
                continue;
            }
            let dv = du + t.edge(e).weight;
            let mut pv = pu.clone();
            pv.push(v);
            let replace = match &label[v] {
                None => true,
                Some((d, p)) => label_less((dv, &pv), (*d, p)),
            };
            if replace {
                label[v] = Some((dv, pv));
            }
        }
    }
}

/// Shortest path by weight with lexicographic tie-break.
pub fn shortest_path(t: &Topology, s: NodeId, dst: NodeId) -> Result<Option<Path>, PathError> {
    check_pair(t, s, dst)?;
    Ok(shortest_path_avoiding(t, s, dst, &[], &[]))
}

/// Yen's k shortest loopless paths, in (length, node sequence) order.
pub fn yen_ksp(t: &Topology, s: NodeId, dst: NodeId, k: usize) -> Result<PathGroup, PathError> {
    check_pair(t, s, dst)?;
    let mut found: Vec<Path> = Vec::new();
    let Some(first) = shortest_path_avoiding(t, s, dst, &[], &[]) else {
        return Ok(PathGroup::empty(s, dst));
    };
    found.push(first);
    let mut candidates: Vec<Path> = Vec::new();
    let mut banned_edges = vec![false; t.edge_count()];
    let mut banned_nodes = vec![false; t.node_count()];
    while found.len() < k {
        let prev = found.last().expect("nonempty").nodes().to_vec();
        for i in 0..prev.len() - 1 {
            let spur = prev[i];
            let root = &prev[..=i];
            banned_edges.iter_mut().for_each(|b| *b = false);
            banned_nodes.iter_mut().for_each(|b| *b = false);
            for p in &found {
                if p.nodes().len() > i + 1 && &p.nodes()[..=i] == root {
                    let e = t.edge_between(p.nodes()[i], p.nodes()[i + 1]).expect("adjacent");
                    banned_edges[e] = true;
                }
            }
            for &r in &root[..i] {
                banned_nodes[r] = true;
            }
            if let Some(spur_path) = shortest_path_avoiding(t, spur, dst, &banned_edges, &banned_nodes) {
                let mut nodes = root[..i].to_vec();
                nodes.extend_from_slice(spur_path.nodes());
                let total = Path::from_trusted(t, nodes);
                if !found.iter().any(|p| p.nodes() == total.nodes())
                    && !candidates.iter().any(|p| p.nodes() == total.nodes())
                {
                    candidates.push(total);
                }
            }
        }
        if candidates.is_empty() {
            break;
        }
        let best = (0..candidates.len())
            .min_by(|&a, &b| candidates[a].cmp_by_length(&candidates[b]))
            .expect("nonempty");
        found.push(candidates.swap_remove(best));
    }
    Ok(PathGroup { src: s, dst, paths: found, max_disjoint: None })
}

/// Greedy edge-disjoint k shortest paths: take the shortest path, delete its
/// edges, repeat.
pub fn edksp(t: &Topology, s: NodeId, dst: NodeId, k: usize) -> Result<PathGroup, PathError> {
    check_pair(t, s, dst)?;
    let mut banned = vec![false; t.edge_count()];
    let mut paths = Vec::new();
    while paths.len() < k {
        let Some(p) = shortest_path_avoiding(t, s, dst, &banned, &[]) else { break };
        for e in p.edges(t) {
            banned[e] = true;
        }
        paths.push(p);
    }
    Ok(PathGroup { src: s, dst, paths, max_disjoint: None })
}

fn hop_distances(t: &Topology, from: NodeId) -> Vec<usize> {
    let mut dist = vec![usize::MAX; t.node_count()];
    dist[from] = 0;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        for &(v, _) in t.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// All minimum-hop paths, lexicographically first `cap` of them.
pub fn ecmp_paths(t: &Topology, s: NodeId, dst: NodeId, cap: usize) -> Result<PathGroup, PathError> {
    check_pair(t, s, dst)?;
    let from_s = hop_distances(t, s);
    let to_dst = hop_distances(t, dst);
    let hops = from_s[dst];
    let mut paths = Vec::new();
    if hops == usize::MAX || cap == 0 {
        return Ok(PathGroup { src: s, dst, paths, max_disjoint: None });
    }
    // DFS over the shortest-path DAG with explicit neighbor cursors
    let mut nodes = vec![s];
    let mut cursors = vec![0usize];
    while let Some(&u) = nodes.last() {
        if u == dst {
            paths.push(Path::from_trusted(t, nodes.clone()));
            if paths.len() == cap {
                break;
            }
            nodes.pop();
            cursors.pop();
            continue;
        }
        let depth = nodes.len() - 1;
        let cursor = cursors.last_mut().expect("parallel stacks");
        let next = t.neighbors(u)[*cursor..]
            .iter()
            .position(|&(v, _)| from_s[v] == depth + 1 && to_dst[v] == hops - depth - 1);
        match next {
            Some(offset) => {
                let v = t.neighbors(u)[*cursor + offset].0;
                *cursor += offset + 1;
                nodes.push(v);
                cursors.push(0);
            }
            None => {
                nodes.pop();
                cursors.pop();
            }
        }
    }
    Ok(PathGroup { src: s, dst, paths, max_disjoint: None })
}

/// Removes cycles from a walk: on revisiting a node, everything after its
/// first occurrence is dropped.
pub(crate) fn shortcut(walk: &[NodeId]) -> Vec<NodeId> {
    let mut out: Vec<NodeId> = Vec::with_capacity(walk.len());
    for &x in walk {
        if let Some(pos) = out.iter().position(|&y| y == x) {
            out.truncate(pos + 1);
        } else {
            out.push(x);
        }
    }
    out
}

/// Valiant load balancing: up to `k` distinct paths `s -> r -> dst` through
/// intermediates `r` drawn uniformly without replacement. Concatenations
/// that revisit a node are shortcut to simple paths. With no usable
/// intermediate the plain shortest path is returned.
pub fn vlb_paths(t: &Topology, s: NodeId, dst: NodeId, k: usize, seed: u64) -> Result<PathGroup, PathError> {
    check_pair(t, s, dst)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut intermediates: Vec<NodeId> = (0..t.node_count()).filter(|&r| r != s && r != dst).collect();
    intermediates.shuffle(&mut rng);
    let mut paths: Vec<Path> = Vec::new();
    for r in intermediates {
        if paths.len() >= k {
            break;
        }
        let Some(first) = shortest_path_avoiding(t, s, r, &[], &[]) else { continue };
        let Some(second) = shortest_path_avoiding(t, r, dst, &[], &[]) else { continue };
        let mut walk = first.nodes().to_vec();
        walk.extend_from_slice(&second.nodes()[1..]);
        let nodes = shortcut(&walk);
        if !paths.iter().any(|p| p.nodes() == nodes.as_slice()) {
            paths.push(Path::from_trusted(t, nodes));
        }
    }
    if paths.is_empty() && k > 0 {
        if let Some(p) = shortest_path_avoiding(t, s, dst, &[], &[]) {
            paths.push(p);
        }
    }
    Ok(PathGroup { src: s, dst, paths, max_disjoint: None })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    fn seqs(g: &PathGroup) -> Vec<Vec<NodeId>> {
        g.paths.iter().map(|p| p.nodes().to_vec()).collect()
    }

    #[test]
    fn yen_triangle() {
        let t = triangle();
        assert_eq!(seqs(&yen_ksp(&t, 0, 2, 2).unwrap()), vec![vec![0, 2], vec![0, 1, 2]]);
        assert_eq!(seqs(&yen_ksp(&t, 0, 2, 1).unwrap()), vec![vec![0, 2]]);
        assert_eq!(yen_ksp(&t, 0, 2, 10).unwrap().paths.len(), 2);
        assert!(yen_ksp(&t, 2, 2, 1).is_err());
    }

    #[test]
    fn yen_enumerates_all_simple_paths_of_k4() {
        // K4 has 5 simple paths between any pair: 1 of 1 hop, 2 of 2, 2 of 3
        let t = k4();
        let g = yen_ksp(&t, 0, 3, 100).unwrap();
        let hops: Vec<usize> = g.paths.iter().map(Path::hops).collect();
        assert_eq!(hops, vec![1, 2, 2, 3, 3]);
    }

    #[test]
    fn edksp_examples() {
        let t = triangle();
        assert_eq!(edksp(&t, 0, 2, 3).unwrap().paths.len(), 2);
        assert_eq!(seqs(&edksp(&t, 0, 2, 1).unwrap()), vec![vec![0, 2]]);
        let trap = trap();
        let g = edksp(&trap, 0, 3, 2).unwrap();
        assert_eq!(g.paths.len(), 1);
        assert_eq!(g.paths[0].length(), 3.0);
    }

    #[test]
    fn ecmp_examples() {
        let sq = square();
        assert_eq!(ecmp_paths(&sq, 0, 3, 32).unwrap().paths.len(), 2);
        assert_eq!(seqs(&ecmp_paths(&triangle(), 0, 2, 32).unwrap()), vec![vec![0, 2]]);
        assert_eq!(ecmp_paths(&path3(), 0, 2, 32).unwrap().paths.len(), 1);
        assert_eq!(ecmp_paths(&sq, 0, 3, 1).unwrap().paths.len(), 1);
    }

    #[test]
    fn vlb_examples() {
        let t = triangle();
        let a = vlb_paths(&t, 0, 2, 2, 99).unwrap();
        let b = vlb_paths(&t, 0, 2, 2, 99).unwrap();
        assert_eq!(a, b);
        for p in &a.paths {
            assert!(p.nodes() == [0, 2] || p.nodes() == [0, 1, 2]);
        }
        let two = graph("pair", &["x", "y"], &[("x", "y", 1.0)]);
        assert_eq!(seqs(&vlb_paths(&two, 0, 1, 3, 1).unwrap()), vec![vec![0, 1]]);
    }

    #[test]
    fn shortcut_removes_loops() {
        assert_eq!(shortcut(&[0, 1, 2, 1, 3]), vec![0, 1, 3]);
        assert_eq!(shortcut(&[0, 1, 2, 3]), vec![0, 1, 2, 3]);
        assert_eq!(shortcut(&[0, 1, 0, 2]), vec![0, 2]);
    }

    #[test]
    fn lexicographic_tie_break() {
        let sq = square();
        // s-a-t and s-b-t tie; a has the smaller index
        let p = shortest_path(&sq, 0, 3).unwrap().unwrap();
        assert_eq!(p.nodes(), &[0, 1, 3]);
    }
}
