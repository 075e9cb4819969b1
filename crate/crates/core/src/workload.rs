//! Gravity-model traffic matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::WorkloadError;
use crate::topo::{DemandDoc, Topology, TrafficMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MassScheme {
    /// Masses drawn i.i.d. from the unit-rate exponential distribution.
    #[default]
    UniformRandom,
    /// Mass of a node is its degree.
    Degree,
}

impl std::str::FromStr for MassScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "uniform-random" | "random" | "uniform" => Ok(MassScheme::UniformRandom),
            "degree" | "degree-proportional" => Ok(MassScheme::Degree),
            _ => Err(format!("unknown mass scheme {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GravityConfig {
    pub total_demand: f64,
    pub seed: u64,
    #[serde(default)]
    pub scheme: MassScheme,
}

fn masses(t: &Topology, cfg: &GravityConfig) -> Vec<f64> {
    match cfg.scheme {
        MassScheme::Degree => (0..t.node_count()).map(|v| t.degree(v) as f64).collect(),
        MassScheme::UniformRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            (0..t.node_count()).map(|_| rng.sample::<f64, _>(Exp1)).collect()
        }
    }
}

/// Demand between every ordered pair proportional to the product of the
/// endpoint masses, normalized so the matrix sums to `total_demand`.
pub fn gravity_tm(t: &Topology, cfg: &GravityConfig) -> Result<TrafficMatrix, WorkloadError> {
    if t.node_count() < 2 {
        return Err(WorkloadError::TooFewNodes(t.node_count()));
    }
    if !(cfg.total_demand.is_finite() && cfg.total_demand > 0.0) {
        return Err(WorkloadError::InvalidTotal(cfg.total_demand));
    }
    let w = masses(t, cfg);
    let sum: f64 = w.iter().sum();
    let norm = sum * sum - w.iter().map(|x| x * x).sum::<f64>();
    let mut entries = Vec::new();
    for s in 0..w.len() {
        for d in (0..w.len()).filter(|&d| d != s) {
            // all-zero masses (e.g. an edgeless graph under the degree scheme) spread evenly
            let share = if norm > 0.0 { w[s] * w[d] / norm } else { 1.0 / (w.len() * (w.len() - 1)) as f64 };
            entries.push(DemandDoc {
                src: t.node_name(s).to_string(),
                dst: t.node_name(d).to_string(),
                demand: cfg.total_demand * share,
            });
        }
    }
    Ok(TrafficMatrix::new(entries)?)
}

/// `count` matrices with seeds `base_seed, base_seed + 1, ...`.
pub fn gravity_series(t: &Topology, total_demand: f64, scheme: MassScheme, base_seed: u64, count: usize) -> Result<Vec<TrafficMatrix>, WorkloadError> {
    (0..count as u64)
        .map(|i| gravity_tm(t, &GravityConfig { total_demand, seed: base_seed.wrapping_add(i), scheme }))
        .collect()
}
