use thiserror::Error;

use crate::topo::Violation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopoError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("invalid topology: {0}")]
    Invalid(Violation),
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("demand on diagonal pair ({0}, {0})")]
    DiagonalDemand(String),
    #[error("demand {src}->{dst} has invalid value {value}")]
    InvalidDemand { src: String, dst: String, value: f64 },
    #[error("demand {src}->{dst} listed more than once")]
    DuplicateDemand { src: String, dst: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("source and destination are the same node ({0})")]
    SameEndpoints(usize),
    #[error("node index {0} is out of range")]
    UnknownNode(usize),
    #[error("fewer than two edge-disjoint paths exist between {src} and {dst}")]
    NoDisjointPair { src: usize, dst: usize },
    #[error("flow violates conservation at node {0}")]
    InconsistentFlow(usize),
    #[error("unknown path algorithm {0:?}")]
    UnknownAlgorithm(String),
    #[error("invalid path set: {0}")]
    InvalidPathSet(String),
    #[error(transparent)]
    Topo(#[from] TopoError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectError {
    #[error("flow-entry limits admit no path for at least one pair (budget K = 0)")]
    NoFeasibleSelection,
    #[error("unknown selection method {0:?}")]
    UnknownMethod(String),
    #[error("path references node {0} outside the topology")]
    UnknownNode(usize),
    #[error("solver failed in {stage}: {status}")]
    Solver { stage: &'static str, status: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TeError {
    #[error("demand {src}->{dst} has no selected path")]
    UnroutableDemand { src: String, dst: String },
    #[error("demand {src}->{dst} is disconnected")]
    Disconnected { src: String, dst: String },
    #[error("fair re-allocation needs Z > 1, got {0}")]
    ZNotAboveOne(f64),
    #[error("fair re-allocation floor d/Z is infeasible for Z = {0}")]
    InfeasibleFloor(f64),
    #[error("solver failed in {stage}: {status}")]
    Solver { stage: &'static str, status: String },
    #[error(transparent)]
    Topo(#[from] TopoError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkloadError {
    #[error("gravity model needs at least two nodes, topology has {0}")]
    TooFewNodes(usize),
    #[error("total demand must be finite and positive, got {0}")]
    InvalidTotal(f64),
    #[error(transparent)]
    Topo(#[from] TopoError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("phase I: {0}")]
    Paths(#[from] PathError),
    #[error("phase II: {0}")]
    Select(#[from] SelectError),
    #[error("allocation: {0}")]
    Te(#[from] TeError),
    #[error(transparent)]
    Topo(#[from] TopoError),
    #[error("metric {metric} is undefined when Zopt = {zopt}")]
    Regime { metric: &'static str, zopt: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
}
