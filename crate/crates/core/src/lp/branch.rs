use log::debug;

use super::{solve_lp, LinearProgram, Sense, Solution, Status, FEASIBILITY_TOL, OPTIMALITY_TOL};

const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct BranchOptions {
    /// Maximum number of relaxations solved before giving up with the incumbent.
    pub node_budget: usize,
    /// The objective takes integer values at every integral point, so bounds
    /// can be rounded before pruning.
    pub integral_objective: bool,
    /// A known feasible point; ignored if it violates the program.
    pub incumbent: Option<Vec<f64>>,
}

impl Default for BranchOptions {
    fn default() -> Self {
        BranchOptions { node_budget: 1_000_000, integral_objective: false, incumbent: None }
    }
}

/// Branch-and-bound with default options.
pub fn solve_binary_ilp(p: &LinearProgram) -> Solution {
    solve_binary_ilp_with(p, &BranchOptions::default())
}

/// Depth-first branch-and-bound over the LP relaxation.
///
/// Branches on the most fractional binary (ties go to the lower index) and
/// explores the side nearer the relaxed value first.
pub fn solve_binary_ilp_with(p: &LinearProgram, opts: &BranchOptions) -> Solution {
    let maximize = p.sense == Sense::Maximize;
    // Objective in "larger is better" orientation.
    let gain = |obj: f64| if maximize { obj } else { -obj };
    let binaries: Vec<usize> = (0..p.num_vars()).filter(|&j| p.variables[j].binary).collect();

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    if let Some(start) = &opts.incumbent {
        let integral = binaries.iter().all(|&j| start[j] == 0.0 || start[j] == 1.0);
        if start.len() == p.num_vars() && integral && p.is_feasible(start, FEASIBILITY_TOL) {
            incumbent = Some((gain(p.objective_value(start)), start.clone()));
        }
    }

    let mut stack: Vec<Vec<(usize, f64)>> = vec![Vec::new()];
    let mut nodes = 0usize;
    let mut iterations = 0usize;
    let mut root_bound = None;
    let mut exhausted = true;
    let mut node_lp = p.clone();

    while let Some(fixes) = stack.pop() {
        if nodes >= opts.node_budget {
            exhausted = false;
            break;
        }
        nodes += 1;
        for &j in &binaries {
            node_lp.variables[j].lower = p.variables[j].lower;
            node_lp.variables[j].upper = p.variables[j].upper;
        }
        for &(j, val) in &fixes {
            node_lp.variables[j].lower = val;
            node_lp.variables[j].upper = val;
        }
        let relaxed = solve_lp(&node_lp);
        iterations += relaxed.iterations;
        match relaxed.status {
            Status::Optimal => {}
            Status::Infeasible => continue,
            Status::Unbounded if fixes.is_empty() => {
                return Solution { nodes, iterations, ..Solution::without_point(Status::Unbounded) };
            }
            // A bounded binary program cannot become unbounded deeper in the tree.
            Status::Unbounded | Status::BudgetExceeded | Status::IterationLimit => {
                exhausted = false;
                continue;
            }
        }
        let mut bound = gain(relaxed.objective);
        if root_bound.is_none() {
            root_bound = Some(relaxed.objective);
        }
        if opts.integral_objective {
            bound = (bound + OPTIMALITY_TOL).floor();
        }
        if let Some((best, _)) = &incumbent {
            let margin = if opts.integral_objective { 0.5 } else { OPTIMALITY_TOL * (1.0 + best.abs()) };
            if bound <= best + margin {
                continue;
            }
        }

        let mut branch_var: Option<(usize, f64)> = None;
        for &j in &binaries {
            let x = relaxed.values[j];
            let frac = (x - x.round()).abs();
            if frac > INTEGRALITY_TOL && branch_var.is_none_or(|(_, f)| frac > f + 1e-12) {
                branch_var = Some((j, frac));
            }
        }
        match branch_var {
            None => {
                let mut point = relaxed.values;
                for &j in &binaries {
                    point[j] = point[j].round();
                }
                let value = gain(p.objective_value(&point));
                if incumbent.as_ref().is_none_or(|(best, _)| value > *best) {
                    debug!("incumbent {value} at node {nodes}");
                    incumbent = Some((value, point));
                }
            }
            Some((j, _)) => {
                let up_first = relaxed.values[j] >= 0.5;
                let mut down = fixes.clone();
                down.push((j, 0.0));
                let mut up = fixes;
                up.push((j, 1.0));
                // stack: last pushed is explored first
                if up_first {
                    stack.push(down);
                    stack.push(up);
                } else {
                    stack.push(up);
                    stack.push(down);
                }
            }
        }
    }

    let status = if exhausted { Status::Optimal } else { Status::BudgetExceeded };
    match incumbent {
        Some((_, values)) => Solution {
            status,
            objective: p.objective_value(&values),
            values,
            duals: Vec::new(),
            dual_bound: root_bound,
            iterations,
            nodes,
        },
        None if exhausted => Solution { nodes, iterations, ..Solution::without_point(Status::Infeasible) },
        None => Solution { nodes, iterations, dual_bound: root_bound, ..Solution::without_point(status) },
    }
}
