//! Traffic-engineering toolkit: maximum edge-disjoint path sets, flow-entry
//! budgeted path selection, min-max link utilization allocation with a
//! fairness-floored throughput fallback, and the experiment harness around them.

pub mod error;
pub mod harness;
pub mod lp;
pub mod paths;
pub mod select;
pub mod teopt;
pub mod topo;
pub mod workload;

pub use error::{HarnessError, PathError, SelectError, TeError, TopoError, WorkloadError};
pub use harness::{evaluate, failure_sweep, run_pipeline, MetricsReport, PipelineConfig, PipelineResult};
pub use paths::{compute_path_set, Path, PathAlgorithm, PathGroup, PathParams, PathSet};
pub use select::{FlowEntryLimits, SelectionMethod, SelectionResult};
pub use teopt::{Allocation, Phase};
pub use topo::{parse_topology, parse_traffic_matrix, Demand, Topology, TrafficMatrix};
