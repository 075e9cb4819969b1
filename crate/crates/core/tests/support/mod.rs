//! Independent reference implementations used by the integration and
//! acceptance tests. None of them calls into the algorithm under test.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use telab::lp::{solve_lp, LinearProgram, Relation, Sense, Status, Var};
use telab::paths::{compute_path_set, PathAlgorithm, PathParams, PathSet};
use telab::select::FlowEntryLimits;
use telab::topo::{Demand, EdgeDoc, NodeId, Topology, TopologyDoc};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn topology(name: &str, n: usize, edges: &[(usize, usize, f64)]) -> Topology {
    let doc = TopologyDoc {
        name: name.into(),
        nodes: (0..n).map(|i| format!("v{i}")).collect(),
        edges: edges
            .iter()
            .map(|&(u, v, c)| EdgeDoc { u: format!("v{u}"), v: format!("v{v}"), capacity: c, weight: None })
            .collect(),
    };
    Topology::from_doc(&doc).expect("valid generated topology")
}

fn connected(n: usize, edges: &[(usize, usize, f64)]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    for &(u, v, _) in edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        parent[a] = b;
    }
    let root = find(&mut parent, 0);
    (0..n).all(|x| find(&mut parent, x) == root)
}

/// G(n, p) conditioned on connectivity, capacities drawn from `caps`.
pub fn random_connected(r: &mut ChaCha8Rng, n: usize, p: f64, caps: &[f64]) -> Topology {
    loop {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if r.random_bool(p) {
                    edges.push((u, v, caps[r.random_range(0..caps.len())]));
                }
            }
        }
        if connected(n, &edges) {
            return topology("random", n, &edges);
        }
    }
}

/// Minimum s-t edge cut by enumerating every vertex bipartition.
pub fn brute_min_cut(t: &Topology, s: NodeId, dst: NodeId) -> usize {
    let n = t.node_count();
    let others: Vec<NodeId> = (0..n).filter(|&v| v != s && v != dst).collect();
    let mut best = usize::MAX;
    for mask in 0u64..(1 << others.len()) {
        let mut side = vec![false; n];
        side[s] = true;
        for (i, &v) in others.iter().enumerate() {
            side[v] = mask >> i & 1 == 1;
        }
        let cut = t.edges().iter().filter(|e| side[e.u] != side[e.v]).count();
        best = best.min(cut);
    }
    best
}

/// Dense Gaussian elimination with partial pivoting; `None` if singular.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for k in col..n {
                        a[row][k] -= f * a[col][k];
                    }
                    b[row] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// A bounded LP over `x >= 0`: rows `(coefs, relation, rhs)`.
#[derive(Debug, Clone)]
pub struct SmallLp {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Relation, f64)>,
}

impl SmallLp {
    pub fn to_program(&self) -> LinearProgram {
        let mut lp = LinearProgram::new(self.sense);
        let vars: Vec<Var> = (0..self.objective.len()).map(|i| lp.add_var(format!("x{i}"), 0.0, f64::INFINITY)).collect();
        for (v, &c) in vars.iter().zip(&self.objective) {
            lp.set_objective(*v, c);
        }
        for (coefs, rel, rhs) in &self.rows {
            lp.add_constraint(vars.iter().copied().zip(coefs.iter().copied()).collect(), *rel, *rhs);
        }
        lp
    }

    fn feasible(&self, x: &[f64]) -> bool {
        const TOL: f64 = 1e-7;
        x.iter().all(|&v| v >= -TOL)
            && self.rows.iter().all(|(a, rel, b)| {
                let lhs: f64 = a.iter().zip(x).map(|(a, x)| a * x).sum();
                match rel {
                    Relation::Le => lhs <= b + TOL,
                    Relation::Ge => lhs >= b - TOL,
                    Relation::Eq => (lhs - b).abs() <= TOL,
                }
            })
    }
}

/// Optimum of a bounded LP by enumerating every basic solution; `None` when infeasible.
pub fn vertex_enumeration(lp: &SmallLp) -> Option<f64> {
    let n = lp.objective.len();
    // candidate tight constraints: rows, then x_i = 0
    let mut tight: Vec<(Vec<f64>, f64)> = lp.rows.iter().map(|(a, _, b)| (a.clone(), *b)).collect();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        tight.push((e, 0.0));
    }
    let better = |a: f64, b: f64| match lp.sense {
        Sense::Maximize => a > b,
        Sense::Minimize => a < b,
    };
    let mut best: Option<f64> = None;
    for combo in combinations(tight.len(), n) {
        let a = combo.iter().map(|&i| tight[i].0.clone()).collect();
        let b = combo.iter().map(|&i| tight[i].1).collect();
        if let Some(x) = solve_square(a, b) {
            if lp.feasible(&x) {
                let z: f64 = lp.objective.iter().zip(&x).map(|(c, x)| c * x).sum();
                if best.is_none_or(|cur| better(z, cur)) {
                    best = Some(z);
                }
            }
        }
    }
    best
}

/// Random LP whose feasible region is bounded by a positive row.
pub fn random_lp(r: &mut ChaCha8Rng) -> SmallLp {
    let n = r.random_range(2..=4);
    let m = r.random_range(1..=4);
    let coef = |r: &mut ChaCha8Rng| (r.random_range(-4..=6) as f64) * 0.5;
    let mut rows = vec![((0..n).map(|_| r.random_range(1..=4) as f64).collect(), Relation::Le, r.random_range(4..=20) as f64)];
    for _ in 0..m {
        let a: Vec<f64> = (0..n).map(|_| coef(r)).collect();
        let rel = match r.random_range(0..6) {
            0 => Relation::Ge,
            1 => Relation::Eq,
            _ => Relation::Le,
        };
        rows.push((a, rel, r.random_range(-2..=12) as f64));
    }
    let sense = if r.random_bool(0.5) { Sense::Maximize } else { Sense::Minimize };
    SmallLp { sense, objective: (0..n).map(|_| coef(r)).collect(), rows }
}

/// Binary program `max/min c x` over integer rows; brute force over all assignments.
#[derive(Debug, Clone)]
pub struct SmallIlp {
    pub sense: Sense,
    pub objective: Vec<i64>,
    pub rows: Vec<(Vec<i64>, Relation, i64)>,
}

impl SmallIlp {
    pub fn to_program(&self) -> LinearProgram {
        let mut lp = LinearProgram::new(self.sense);
        let vars: Vec<Var> = (0..self.objective.len()).map(|i| lp.add_binary(format!("x{i}"))).collect();
        for (v, &c) in vars.iter().zip(&self.objective) {
            lp.set_objective(*v, c as f64);
        }
        for (coefs, rel, rhs) in &self.rows {
            lp.add_constraint(vars.iter().copied().zip(coefs.iter().map(|&c| c as f64)).collect(), *rel, *rhs as f64);
        }
        lp
    }
}

pub fn exhaustive_ilp(p: &SmallIlp) -> Option<i64> {
    let n = p.objective.len();
    let mut best: Option<i64> = None;
    for mask in 0u32..(1 << n) {
        let x = |i: usize| (mask >> i & 1) as i64;
        let ok = p.rows.iter().all(|(a, rel, b)| {
            let lhs: i64 = a.iter().enumerate().map(|(i, c)| c * x(i)).sum();
            match rel {
                Relation::Le => lhs <= *b,
                Relation::Ge => lhs >= *b,
                Relation::Eq => lhs == *b,
            }
        });
        if ok {
            let z: i64 = p.objective.iter().enumerate().map(|(i, c)| c * x(i)).sum();
            best = Some(match (best, p.sense) {
                (None, _) => z,
                (Some(b), Sense::Maximize) => b.max(z),
                (Some(b), Sense::Minimize) => b.min(z),
            });
        }
    }
    best
}

pub fn random_ilp(r: &mut ChaCha8Rng) -> SmallIlp {
    let n = r.random_range(3..=12);
    let m = r.random_range(1..=4);
    let rows = (0..m)
        .map(|_| {
            let a: Vec<i64> = (0..n).map(|_| r.random_range(-3..=6)).collect();
            let rel = match r.random_range(0..8) {
                0 => Relation::Ge,
                1 => Relation::Eq,
                _ => Relation::Le,
            };
            let b = r.random_range(-2..=(2 * n as i64));
            (a, rel, b)
        })
        .collect();
    let sense = if r.random_bool(0.5) { Sense::Maximize } else { Sense::Minimize };
    SmallIlp { sense, objective: (0..n).map(|_| r.random_range(-5..=9)).collect(), rows }
}

/// Flow entries per node for an explicit choice, recomputed from node lists.
pub fn usage_of(t: &Topology, ps: &PathSet, chosen: &[Vec<bool>]) -> Vec<u64> {
    let mut q = vec![0u64; t.node_count()];
    for (g, c) in ps.groups.iter().zip(chosen) {
        for (p, &on) in g.paths.iter().zip(c) {
            if on {
                for &v in p.nodes() {
                    q[v] += 1;
                }
            }
        }
    }
    q
}

pub fn fits(q: &[u64], limits: &FlowEntryLimits) -> bool {
    q.iter().zip(limits.as_slice()).all(|(a, b)| a <= b)
}

/// `(F, total)` of the best two-step selection, by enumerating every subset.
pub fn exhaustive_selection(t: &Topology, ps: &PathSet, limits: &FlowEntryLimits) -> (usize, usize) {
    let slots: Vec<(usize, usize)> =
        ps.groups.iter().enumerate().flat_map(|(g, grp)| (0..grp.paths.len()).map(move |j| (g, j))).collect();
    assert!(slots.len() <= 20, "too many indicators for enumeration");
    let mut best = (0usize, 0usize);
    for mask in 0u32..(1 << slots.len()) {
        let mut chosen: Vec<Vec<bool>> = ps.groups.iter().map(|g| vec![false; g.paths.len()]).collect();
        for (i, &(g, j)) in slots.iter().enumerate() {
            chosen[g][j] = mask >> i & 1 == 1;
        }
        if !fits(&usage_of(t, ps, &chosen), limits) {
            continue;
        }
        let floor = ps
            .groups
            .iter()
            .zip(&chosen)
            .filter(|(g, _)| !g.paths.is_empty())
            .map(|(_, c)| c.iter().filter(|&&x| x).count())
            .min()
            .unwrap_or(0);
        let total = mask.count_ones() as usize;
        if (floor, total) > best {
            best = (floor, total);
        }
    }
    best
}

/// Per-commodity edge formulation of the min-max utilization multicommodity flow.
pub fn per_commodity_mcf(t: &Topology, demands: &[Demand]) -> Option<f64> {
    let mut lp = LinearProgram::new(Sense::Minimize);
    let z = lp.add_var("Z", 0.0, f64::INFINITY);
    lp.set_objective(z, 1.0);
    let mut on_link: Vec<Vec<(Var, f64)>> = vec![Vec::new(); t.link_count()];
    for (k, d) in demands.iter().enumerate() {
        let mut net: Vec<Vec<(Var, f64)>> = vec![Vec::new(); t.node_count()];
        for l in 0..t.link_count() {
            let (a, b) = t.link_endpoints(l);
            let f = lp.add_var(format!("f{k}_{l}"), 0.0, f64::INFINITY);
            on_link[l].push((f, 1.0));
            net[a].push((f, 1.0));
            net[b].push((f, -1.0));
        }
        for (v, terms) in net.into_iter().enumerate() {
            let rhs = if v == d.src {
                d.value
            } else if v == d.dst {
                -d.value
            } else {
                0.0
            };
            lp.add_constraint(terms, Relation::Eq, rhs);
        }
    }
    for (l, mut terms) in on_link.into_iter().enumerate() {
        terms.push((z, -t.link_capacity(l)));
        lp.add_constraint(terms, Relation::Le, 0.0);
    }
    let sol = solve_lp(&lp);
    (sol.status == Status::Optimal).then_some(sol.objective)
}

/// Prefix selection: the first `k` paths of every group.
pub fn prefix(ps: &PathSet, k: usize) -> Vec<Vec<bool>> {
    ps.groups.iter().map(|g| (0..g.paths.len()).map(|j| j < k).collect()).collect()
}

/// Small random selection instance with at most 12 candidate paths.
pub fn random_selection_instance(r: &mut ChaCha8Rng) -> (Topology, PathSet, FlowEntryLimits) {
    loop {
        let n = r.random_range(4..=6);
        let t = random_connected(r, n, 0.55, &[1.0]);
        let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|s| (0..n).filter(move |&d| d != s).map(move |d| (s, d))).collect();
        pairs.shuffle(r);
        pairs.truncate(r.random_range(2..=3));
        let alg = [PathAlgorithm::Custom, PathAlgorithm::Ksp, PathAlgorithm::Edksp][r.random_range(0..3)];
        let params = PathParams { k: r.random_range(2..=4), ..PathParams::default() };
        let ps = compute_path_set(&t, alg, &pairs, &params).unwrap();
        if ps.path_count() > 12 {
            continue;
        }
        let full = usage_of(&t, &ps, &prefix(&ps, usize::MAX));
        let limits = FlowEntryLimits::from_vec(full.iter().map(|&q| r.random_range(0..=q.max(1))).collect());
        return (t, ps, limits);
    }
}
