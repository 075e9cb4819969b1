use super::{LinearProgram, Relation, Sense, Solution, Status, FEASIBILITY_TOL};

/// Pivot elements smaller than this are treated as zero.
const PIVOT_TOL: f64 = 1e-9;
/// Reduced costs must be below `-PRICE_TOL` to enter the basis.
const PRICE_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;

/// `x_j = offset + sum(sign * y_col)` over the standard-form columns of `x_j`.
struct VarMap {
    offset: f64,
    cols: Vec<(usize, f64)>,
}

struct Row {
    coefs: Vec<(usize, f64)>,
    relation: Relation,
    rhs: f64,
    /// -1 when the row was negated to make its right-hand side nonnegative.
    flip: f64,
    user: Option<usize>,
}

struct Tableau {
    rows: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    barred: Vec<bool>,
}

enum Outcome {
    Optimal,
    Unbounded,
    Limit,
}

impl Tableau {
    fn cols(&self) -> usize {
        self.width - 1
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.data[i * self.width + self.width - 1]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.data[r * w + c];
        for x in &mut self.data[r * w..(r + 1) * w] {
            *x /= p;
        }
        self.data[r * w + c] = 1.0;
        let pivot_row: Vec<f64> = self.data[r * w..(r + 1) * w].to_vec();
        for i in 0..=self.rows {
            if i == r {
                continue;
            }
            let factor = self.data[i * w + c];
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.data[i * w..(i + 1) * w];
            for (x, &pr) in row.iter_mut().zip(&pivot_row) {
                if pr != 0.0 {
                    *x -= factor * pr;
                }
            }
            row[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Primal simplex on the current objective row (row `rows`).
    fn run(&mut self, max_iter: usize, iters: &mut usize) -> Outcome {
        let m = self.rows;
        let mut streak = 0;
        let mut bland = false;
        loop {
            if *iters >= max_iter {
                return Outcome::Limit;
            }
            let obj = self.row(m);
            let mut enter = None;
            let mut best = -PRICE_TOL;
            for j in 0..self.cols() {
                if self.barred[j] {
                    continue;
                }
                let d = obj[j];
                if d < -PRICE_TOL {
                    if bland {
                        enter = Some(j);
                        break;
                    }
                    if d < best {
                        best = d;
                        enter = Some(j);
                    }
                }
            }
            let Some(c) = enter else { return Outcome::Optimal };

            let mut leave: Option<usize> = None;
            let mut min_ratio = f64::INFINITY;
            for i in 0..m {
                let a = self.get(i, c);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                match leave {
                    None => {
                        leave = Some(i);
                        min_ratio = ratio;
                    }
                    Some(l) => {
                        let tie = 1e-12 * (1.0 + min_ratio.abs());
                        if ratio < min_ratio - tie {
                            leave = Some(i);
                            min_ratio = ratio;
                        } else if ratio <= min_ratio + tie {
                            let better = if bland {
                                self.basis[i] < self.basis[l]
                            } else {
                                a > self.get(l, c)
                            };
                            if better {
                                leave = Some(i);
                                min_ratio = min_ratio.min(ratio);
                            }
                        }
                    }
                }
            }
            let Some(r) = leave else { return Outcome::Unbounded };
            if min_ratio <= 1e-12 {
                streak += 1;
                if streak > DEGENERATE_STREAK {
                    bland = true;
                }
            } else {
                streak = 0;
                bland = false;
            }
            self.pivot(r, c);
            *iters += 1;
        }
    }

    /// Replace the objective row with reduced costs for `costs`.
    fn set_objective(&mut self, costs: &[f64]) {
        let m = self.rows;
        let w = self.width;
        let mut obj = vec![0.0; w];
        obj[..costs.len()].copy_from_slice(costs);
        for i in 0..m {
            let cb = costs.get(self.basis[i]).copied().unwrap_or(0.0);
            if cb == 0.0 {
                continue;
            }
            for (o, &x) in obj.iter_mut().zip(self.row(i)) {
                *o -= cb * x;
            }
        }
        self.data[m * w..(m + 1) * w].copy_from_slice(&obj);
    }
}

/// Solves `p` to optimality with a two-phase dense simplex.
///
/// Pricing is Dantzig's rule, falling back to Bland's rule after a run of
/// degenerate pivots; the fallback is dropped again on the next strict
/// improvement. The basic solution is re-solved against the original
/// columns at the end to shed accumulated round-off.
pub fn solve_lp(p: &LinearProgram) -> Solution {
    p.check_well_formed();
    let sign = if p.sense == Sense::Maximize { -1.0 } else { 1.0 };

    let mut maps = Vec::with_capacity(p.num_vars());
    let mut ncols = 0usize;
    let mut bound_rows = Vec::new();
    for v in &p.variables {
        if v.lower > v.upper + FEASIBILITY_TOL {
            return Solution::without_point(Status::Infeasible);
        }
        let map = if v.lower.is_finite() {
            if v.upper.is_finite() && v.upper - v.lower <= 0.0 {
                VarMap { offset: v.lower, cols: Vec::new() }
            } else {
                let c = ncols;
                ncols += 1;
                if v.upper.is_finite() {
                    bound_rows.push((c, v.upper - v.lower));
                }
                VarMap { offset: v.lower, cols: vec![(c, 1.0)] }
            }
        } else if v.upper.is_finite() {
            let c = ncols;
            ncols += 1;
            VarMap { offset: v.upper, cols: vec![(c, -1.0)] }
        } else {
            let c = ncols;
            ncols += 2;
            VarMap { offset: 0.0, cols: vec![(c, 1.0), (c + 1, -1.0)] }
        };
        maps.push(map);
    }
    let n_struct = ncols;

    let mut costs = vec![0.0; n_struct];
    let mut obj_const = 0.0;
    for (j, map) in maps.iter().enumerate() {
        let c = sign * p.objective[j];
        obj_const += c * map.offset;
        for &(col, s) in &map.cols {
            costs[col] += c * s;
        }
    }

    let mut rows: Vec<Row> = Vec::new();
    for (k, con) in p.constraints.iter().enumerate() {
        let mut dense: Vec<(usize, f64)> = Vec::new();
        let mut rhs = con.rhs;
        for &(v, a) in &con.terms {
            let map = &maps[v.0];
            rhs -= a * map.offset;
            for &(col, s) in &map.cols {
                dense.push((col, a * s));
            }
        }
        dense.sort_by_key(|t| t.0);
        let mut coefs: Vec<(usize, f64)> = Vec::with_capacity(dense.len());
        for (col, a) in dense {
            match coefs.last_mut() {
                Some(last) if last.0 == col => last.1 += a,
                _ => coefs.push((col, a)),
            }
        }
        coefs.retain(|t| t.1 != 0.0);
        if coefs.is_empty() {
            let tol = FEASIBILITY_TOL * (1.0 + con.rhs.abs());
            let ok = match con.relation {
                Relation::Le => 0.0 <= rhs + tol,
                Relation::Ge => 0.0 >= rhs - tol,
                Relation::Eq => rhs.abs() <= tol,
            };
            if !ok {
                return Solution::without_point(Status::Infeasible);
            }
            continue;
        }
        rows.push(Row { coefs, relation: con.relation, rhs, flip: 1.0, user: Some(k) });
    }
    for (col, ub) in bound_rows {
        rows.push(Row { coefs: vec![(col, 1.0)], relation: Relation::Le, rhs: ub, flip: 1.0, user: None });
    }
    for row in &mut rows {
        if row.rhs < 0.0 {
            row.rhs = -row.rhs;
            row.flip = -1.0;
            for c in &mut row.coefs {
                c.1 = -c.1;
            }
            row.relation = match row.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.relation != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.relation != Relation::Le).count();
    let cols = n_struct + n_slack + n_art;
    let width = cols + 1;
    let mut data = vec![0.0; (m + 1) * width];
    let mut basis = vec![0usize; m];
    let mut identity = vec![0usize; m];
    let mut barred = vec![false; cols];
    let mut next_slack = n_struct;
    let mut next_art = n_struct + n_slack;
    for (i, row) in rows.iter().enumerate() {
        let base = i * width;
        for &(c, a) in &row.coefs {
            data[base + c] = a;
        }
        data[base + cols] = row.rhs;
        match row.relation {
            Relation::Le => {
                data[base + next_slack] = 1.0;
                basis[i] = next_slack;
                identity[i] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                data[base + next_slack] = -1.0;
                next_slack += 1;
                data[base + next_art] = 1.0;
                basis[i] = next_art;
                identity[i] = next_art;
                next_art += 1;
            }
            Relation::Eq => {
                data[base + next_art] = 1.0;
                basis[i] = next_art;
                identity[i] = next_art;
                next_art += 1;
            }
        }
    }
    let original: Vec<f64> = data[..m * width].to_vec();
    let is_artificial = |j: usize| j >= n_struct + n_slack;

    let mut t = Tableau { rows: m, width, data, basis, barred: barred.clone() };
    let max_iter = 20_000 + 50 * (m + cols);
    let mut iters = 0;

    if n_art > 0 {
        let mut phase1 = vec![0.0; cols];
        for c in phase1.iter_mut().skip(n_struct + n_slack) {
            *c = 1.0;
        }
        t.set_objective(&phase1);
        match t.run(max_iter, &mut iters) {
            Outcome::Optimal => {}
            Outcome::Limit => return Solution { iterations: iters, ..Solution::without_point(Status::IterationLimit) },
            Outcome::Unbounded => unreachable!("phase one objective is bounded below by zero"),
        }
        let infeasibility = -t.rhs(m);
        let scale = 1.0 + rows.iter().map(|r| r.rhs).fold(0.0, f64::max);
        if infeasibility > FEASIBILITY_TOL * scale {
            return Solution { iterations: iters, ..Solution::without_point(Status::Infeasible) };
        }
        for i in 0..m {
            if !is_artificial(t.basis[i]) {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..n_struct + n_slack {
                let a = t.get(i, j).abs();
                if a > PIVOT_TOL && best.is_none_or(|(_, b)| a > b) {
                    best = Some((j, a));
                }
            }
            if let Some((j, _)) = best {
                t.pivot(i, j);
            }
        }
        for (j, b) in barred.iter_mut().enumerate() {
            *b = is_artificial(j);
        }
        t.barred = barred;
    }

    let mut phase2 = vec![0.0; cols];
    phase2[..n_struct].copy_from_slice(&costs);
    t.set_objective(&phase2);
    match t.run(max_iter, &mut iters) {
        Outcome::Optimal => {}
        Outcome::Unbounded => return Solution { iterations: iters, ..Solution::without_point(Status::Unbounded) },
        Outcome::Limit => return Solution { iterations: iters, ..Solution::without_point(Status::IterationLimit) },
    }

    let mut y = vec![0.0; cols];
    for i in 0..m {
        y[t.basis[i]] = t.rhs(i);
    }
    if m > 0 && m <= 1500 {
        let rhs: Vec<f64> = rows.iter().map(|r| r.rhs).collect();
        if let Some(z) = resolve_basic(&original, width, m, &t.basis, &rhs) {
            let drift = (0..m).map(|i| (z[i] - y[t.basis[i]]).abs()).fold(0.0, f64::max);
            let min_z = z.iter().copied().fold(f64::INFINITY, f64::min);
            if drift <= 1e-6 * (1.0 + rhs.iter().copied().fold(0.0, f64::max)) && min_z >= -FEASIBILITY_TOL {
                for i in 0..m {
                    y[t.basis[i]] = z[i].max(0.0);
                }
            }
        }
    }

    let values: Vec<f64> = maps
        .iter()
        .zip(&p.variables)
        .map(|(map, var)| {
            let x = map.offset + map.cols.iter().map(|&(c, s)| s * y[c]).sum::<f64>();
            x.clamp(var.lower, var.upper)
        })
        .collect();

    let obj_row = t.row(m);
    let mut duals = vec![0.0; p.constraints.len()];
    let mut dual_obj = obj_const;
    for (i, row) in rows.iter().enumerate() {
        let yi = -obj_row[identity[i]];
        dual_obj += yi * row.rhs;
        if let Some(k) = row.user {
            duals[k] = sign * row.flip * yi;
        }
    }

    Solution {
        status: Status::Optimal,
        objective: p.objective_value(&values),
        values,
        duals,
        dual_bound: Some(sign * dual_obj),
        iterations: iters,
        nodes: 0,
    }
}

/// Solves `B z = rhs` where `B` holds the basis columns of the original rows.
fn resolve_basic(original: &[f64], width: usize, m: usize, basis: &[usize], rhs: &[f64]) -> Option<Vec<f64>> {
    let mut a = vec![0.0; m * (m + 1)];
    for i in 0..m {
        for (k, &col) in basis.iter().enumerate() {
            a[i * (m + 1) + k] = original[i * width + col];
        }
        a[i * (m + 1) + m] = rhs[i];
    }
    let w = m + 1;
    for k in 0..m {
        let (p, pv) = (k..m)
            .map(|i| (i, a[i * w + k].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))?;
        if pv < 1e-12 {
            return None;
        }
        if p != k {
            for j in 0..w {
                a.swap(p * w + j, k * w + j);
            }
        }
        let piv = a[k * w + k];
        for i in k + 1..m {
            let f = a[i * w + k] / piv;
            if f == 0.0 {
                continue;
            }
            for j in k..w {
                a[i * w + j] -= f * a[k * w + j];
            }
        }
    }
    let mut z = vec![0.0; m];
    for k in (0..m).rev() {
        let mut s = a[k * w + m];
        for j in k + 1..m {
            s -= a[k * w + j] * z[j];
        }
        z[k] = s / a[k * w + k];
    }
    Some(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::Var;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-6 * (1.0 + b.abs())
    }

    #[test]
    fn single_bounded_variable() {
        let mut p = LinearProgram::new(Sense::Maximize);
        let x = p.add_var("x", 0.0, f64::INFINITY);
        p.set_objective(x, 1.0);
        p.add_constraint(vec![(x, 1.0)], Relation::Le, 3.0);
        let s = solve_lp(&p);
        assert_eq!(s.status, Status::Optimal);
        assert!(close(s.objective, 3.0));
        assert!(close(s.duals[0], 1.0));
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut p = LinearProgram::new(Sense::Minimize);
        let x = p.add_var("x", 0.0, f64::INFINITY);
        p.add_constraint(vec![(x, 1.0)], Relation::Ge, 1.0);
        p.add_constraint(vec![(x, 1.0)], Relation::Le, 0.0);
        assert_eq!(solve_lp(&p).status, Status::Infeasible);
    }

    #[test]
    fn two_dimensional_vertex() {
        let mut p = LinearProgram::new(Sense::Maximize);
        let x = p.add_var("x", 0.0, f64::INFINITY);
        let y = p.add_var("y", 0.0, f64::INFINITY);
        p.set_objective(x, 1.0);
        p.set_objective(y, 1.0);
        p.add_constraint(vec![(x, 1.0), (y, 2.0)], Relation::Le, 4.0);
        p.add_constraint(vec![(x, 3.0), (y, 1.0)], Relation::Le, 6.0);
        let s = solve_lp(&p);
        assert_eq!(s.status, Status::Optimal);
        assert!(close(s.value(x), 1.6) && close(s.value(y), 1.2), "{:?}", s.values);
        assert!(close(s.objective, 2.8));
        assert!(close(s.dual_bound.unwrap(), 2.8));
    }

    #[test]
    fn unbounded_detected() {
        let mut p = LinearProgram::new(Sense::Maximize);
        let x = p.add_var("x", 0.0, f64::INFINITY);
        let y = p.add_var("y", 0.0, f64::INFINITY);
        p.set_objective(x, 1.0);
        p.add_constraint(vec![(x, 1.0), (y, -1.0)], Relation::Le, 1.0);
        assert_eq!(solve_lp(&p).status, Status::Unbounded);
    }

    #[test]
    fn free_and_upper_bounded_variables() {
        // min x + y, x free with x >= -2 via row, y <= 5 with no lower bound, x + y >= -1.
        let mut p = LinearProgram::new(Sense::Minimize);
        let x = p.add_var("x", f64::NEG_INFINITY, f64::INFINITY);
        let y = p.add_var("y", f64::NEG_INFINITY, 5.0);
        p.set_objective(x, 1.0);
        p.set_objective(y, 2.0);
        p.add_constraint(vec![(x, 1.0)], Relation::Ge, -2.0);
        p.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Ge, -1.0);
        p.add_constraint(vec![(y, 1.0)], Relation::Ge, -3.0);
        let s = solve_lp(&p);
        assert_eq!(s.status, Status::Optimal);
        // y as small as allowed is worth more: y = -3, x = 2 -> 2 - 6 = -4
        assert!(close(s.objective, -4.0), "{:?}", s);
        assert!(close(s.value(x), 2.0) && close(s.value(y), -3.0));
    }

    #[test]
    fn equality_and_fixed_variables() {
        let mut p = LinearProgram::new(Sense::Minimize);
        let a = p.add_var("a", 0.0, f64::INFINITY);
        let b = p.add_var("b", 0.0, f64::INFINITY);
        let fixed = p.add_var("f", 2.0, 2.0);
        p.set_objective(a, 1.0);
        p.set_objective(b, 3.0);
        p.add_constraint(vec![(a, 1.0), (b, 1.0), (fixed, 1.0)], Relation::Eq, 5.0);
        p.add_constraint(vec![(a, 1.0)], Relation::Le, 1.0);
        let s = solve_lp(&p);
        assert_eq!(s.status, Status::Optimal);
        assert!(close(s.value(Var(0)), 1.0) && close(s.value(Var(1)), 2.0) && s.value(fixed) == 2.0);
        assert!(close(s.objective, 7.0));
    }

    #[test]
    fn redundant_equalities() {
        let mut p = LinearProgram::new(Sense::Maximize);
        let x = p.add_var("x", 0.0, 10.0);
        let y = p.add_var("y", 0.0, 10.0);
        p.set_objective(x, 2.0);
        p.set_objective(y, 1.0);
        p.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Eq, 4.0);
        p.add_constraint(vec![(x, 2.0), (y, 2.0)], Relation::Eq, 8.0);
        let s = solve_lp(&p);
        assert_eq!(s.status, Status::Optimal);
        assert!(close(s.objective, 8.0));
    }
}
