//! Linear and 0-1 integer programming.
//!
//! Programs are built with [`LinearProgram`] and solved by a dense two-phase
//! simplex ([`solve_lp`]) or by depth-first branch-and-bound over the LP
//! relaxation ([`solve_binary_ilp`]). Sizes here are desk scale (a few
//! hundred rows), so a dense tableau is used throughout.

use std::fmt;

mod branch;
mod simplex;

pub use branch::{solve_binary_ilp, solve_binary_ilp_with, BranchOptions};
pub use simplex::solve_lp;

/// Primal feasibility tolerance.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Relative optimality tolerance.
pub const OPTIMALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub binary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: Option<String>,
    pub terms: Vec<(Var, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * values[v.0]).sum()
    }

    /// Amount by which `values` violate this row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub variables: Vec<Variable>,
    /// Dense objective coefficients, one per variable.
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram { sense, variables: Vec::new(), objective: Vec::new(), constraints: Vec::new() }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> Var {
        self.variables.push(Variable { name: name.into(), lower, upper, binary: false });
        self.objective.push(0.0);
        Var(self.variables.len() - 1)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Var {
        let v = self.add_var(name, 0.0, 1.0);
        self.variables[v.0].binary = true;
        v
    }

    pub fn set_objective(&mut self, var: Var, coef: f64) {
        self.objective[var.0] = coef;
    }

    pub fn add_constraint(&mut self, terms: Vec<(Var, f64)>, relation: Relation, rhs: f64) -> usize {
        self.constraints.push(Constraint { name: None, terms, relation, rhs });
        self.constraints.len() - 1
    }

    pub fn add_named_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(Var, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        let row = self.add_constraint(terms, relation, rhs);
        self.constraints[row].name = Some(name.into());
        row
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().zip(values).map(|(c, x)| c * x).sum()
    }

    /// Largest bound or row violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let bounds = self
            .variables
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0))
            .fold(0.0, f64::max);
        self.constraints.iter().map(|c| c.violation(values)).fold(bounds, f64::max)
    }

    /// Whether `values` satisfy rows and bounds within `tol`, scaled by row magnitude.
    pub fn is_feasible(&self, values: &[f64], tol: f64) -> bool {
        let bounds_ok = self
            .variables
            .iter()
            .zip(values)
            .all(|(v, &x)| x >= v.lower - tol * (1.0 + v.lower.abs()) && x <= v.upper + tol * (1.0 + v.upper.abs()));
        bounds_ok
            && self.constraints.iter().all(|c| {
                let scale = 1.0 + c.rhs.abs() + c.terms.iter().map(|t| t.1.abs()).fold(0.0, f64::max);
                c.violation(values) <= tol * scale
            })
    }

    pub(crate) fn check_well_formed(&self) {
        let n = self.variables.len();
        for c in &self.constraints {
            debug_assert!(c.rhs.is_finite(), "non-finite constant");
            for &(v, a) in &c.terms {
                debug_assert!(v.0 < n && a.is_finite(), "bad term {v:?} {a}");
            }
        }
    }
}

impl fmt::Display for LinearProgram {
    /// LP-file style dump for debugging; not a stable format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let term = |f: &mut fmt::Formatter<'_>, first: bool, a: f64, name: &str| -> fmt::Result {
            let sign = if a < 0.0 { "-" } else if first { "" } else { "+" };
            let mag = a.abs();
            if (mag - 1.0).abs() < f64::EPSILON {
                write!(f, " {sign} {name}")
            } else {
                write!(f, " {sign} {mag} {name}")
            }
        };
        writeln!(f, "{}", if self.sense == Sense::Maximize { "Maximize" } else { "Minimize" })?;
        write!(f, " obj:")?;
        let mut first = true;
        for (i, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                term(f, first, c, &self.variables[i].name)?;
                first = false;
            }
        }
        writeln!(f)?;
        writeln!(f, "Subject To")?;
        for (r, c) in self.constraints.iter().enumerate() {
            match &c.name {
                Some(n) => write!(f, " {n}:")?,
                None => write!(f, " c{r}:")?,
            }
            for (k, &(v, a)) in c.terms.iter().enumerate() {
                term(f, k == 0, a, &self.variables[v.0].name)?;
            }
            let rel = match c.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            writeln!(f, " {rel} {}", c.rhs)?;
        }
        writeln!(f, "Bounds")?;
        for v in &self.variables {
            writeln!(f, " {} <= {} <= {}", v.lower, v.name, v.upper)?;
        }
        let binaries: Vec<&str> = self.variables.iter().filter(|v| v.binary).map(|v| v.name.as_str()).collect();
        if !binaries.is_empty() {
            writeln!(f, "Binary")?;
            writeln!(f, " {}", binaries.join(" "))?;
        }
        writeln!(f, "End")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    /// Branch-and-bound ran out of nodes; `values` hold the incumbent, if any.
    BudgetExceeded,
    IterationLimit,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::BudgetExceeded => "budget-exceeded",
            Status::IterationLimit => "iteration-limit",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: Status,
    pub objective: f64,
    pub values: Vec<f64>,
    /// Shadow price of each constraint, d(objective)/d(rhs), when optimal.
    pub duals: Vec<f64>,
    /// Best bound proven on the objective (the dual objective for LPs,
    /// the root relaxation for branch-and-bound).
    pub dual_bound: Option<f64>,
    pub iterations: usize,
    pub nodes: usize,
}

impl Solution {
    pub(crate) fn without_point(status: Status) -> Self {
        Solution {
            status,
            objective: f64::NAN,
            values: Vec::new(),
            duals: Vec::new(),
            dual_bound: None,
            iterations: 0,
            nodes: 0,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn value(&self, v: Var) -> f64 {
        self.values[v.0]
    }
}
