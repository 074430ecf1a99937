//! Scenario generation and (de)serialization.

mod graphs;
mod io;
mod pss;
mod stream;

pub use graphs::{er_edges, gen_er, gen_waxman, waxman_edges, with_capacities};
pub use io::{
    load_topology, load_zoo, parse_edge_list, parse_graphml, write_edge_list, Topology, ZOO_BW, ZOO_CPU,
};
pub use pss::{gen_pss, PssConfig};
pub use stream::{gen_slice, gen_slice_stream, SliceSpec};

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::net::{NetError, NodeId, PhysicalNetwork, SliceRequest};

/// Bound on whole-graph resampling when a generated graph is disconnected.
pub const MAX_ATTEMPTS: usize = 100_000;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("no connected graph after {0} attempts")]
    GenerationFailure(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("topology is disconnected")]
    DisconnectedTopology,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange {
    pub min: u64,
    pub max: u64,
}

impl IntRange {
    pub const fn new(min: u64, max: u64) -> Self {
        Self { min, max }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.random_range(self.min..=self.max)
    }

    pub fn contains(&self, x: u64) -> bool {
        self.min <= x && x <= self.max
    }

    fn check(&self, what: &str) -> Result<(), ScenarioError> {
        if self.min > self.max {
            return Err(ScenarioError::InvalidConfig(format!("{what}: empty range {}..={}", self.min, self.max)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SubstrateSpec {
    Waxman { nodes: usize, alpha: f64, beta: f64 },
    ErdosRenyi { nodes: usize, p: f64 },
    /// GraphML or edge-list file.
    Topology { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub substrate: SubstrateSpec,
    pub cpu_capacity: IntRange,
    pub bw_capacity: IntRange,
    pub slices: SliceSpec,
    /// Poisson arrival rate per second.
    pub arrival_rate: f64,
    /// Rate of the exponential lifetime per second.
    pub departure_rate: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            substrate: SubstrateSpec::Waxman { nodes: 75, alpha: 0.5, beta: 0.2 },
            cpu_capacity: IntRange::new(50, 100),
            bw_capacity: IntRange::new(50, 100),
            slices: SliceSpec::default(),
            arrival_rate: 0.02,
            departure_rate: 0.005,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.cpu_capacity.check("cpu capacity")?;
        self.bw_capacity.check("bandwidth capacity")?;
        self.slices.validate()?;
        if !(self.arrival_rate > 0.0 && self.departure_rate > 0.0) {
            return Err(ScenarioError::InvalidConfig("arrival and departure rates must be positive".into()));
        }
        match &self.substrate {
            SubstrateSpec::Waxman { nodes, alpha, beta } => {
                if *nodes < 2 || !(*alpha >= 0.0 && *alpha <= 1.0) || !(*beta > 0.0) {
                    return Err(ScenarioError::InvalidConfig("waxman needs n >= 2, 0 <= alpha <= 1, beta > 0".into()));
                }
            }
            SubstrateSpec::ErdosRenyi { nodes, p } => {
                if *nodes < 2 || !(*p > 0.0 && *p <= 1.0) {
                    return Err(ScenarioError::InvalidConfig("erdos-renyi needs n >= 2 and 0 < p <= 1".into()));
                }
            }
            SubstrateSpec::Topology { .. } => {}
        }
        Ok(())
    }
}

/// A substrate plus the time-ordered slice requests it will receive.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub substrate: PhysicalNetwork,
    pub requests: Vec<SliceRequest>,
    /// Hosts (indexed by vnode) of a known perfect packing, one per request.
    pub certificate: Option<Vec<Vec<NodeId>>>,
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    cpu: u64,
}

#[derive(Serialize, Deserialize)]
struct EdgeRecord {
    u: NodeId,
    v: NodeId,
    bw: u64,
}

#[derive(Serialize, Deserialize)]
struct SubstrateRecord {
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
}

#[derive(Serialize, Deserialize)]
struct ScenarioRecord {
    substrate: SubstrateRecord,
    slices: Vec<SliceRequest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    certificate: Option<Vec<Vec<NodeId>>>,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut ids = BTreeSet::new();
        for pair in self.requests.windows(2) {
            if pair[1].t_arrive < pair[0].t_arrive {
                return Err(ScenarioError::InvalidScenario(format!("slice {} arrives out of order", pair[1].id)));
            }
        }
        for s in &self.requests {
            s.validate()?;
            if !ids.insert(s.id) {
                return Err(ScenarioError::InvalidScenario(format!("duplicate slice id {}", s.id)));
            }
        }
        if let Some(cert) = &self.certificate {
            if cert.len() != self.requests.len() {
                return Err(ScenarioError::InvalidScenario("certificate length mismatch".into()));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, ScenarioError> {
        let record = ScenarioRecord {
            substrate: SubstrateRecord {
                nodes: self.substrate.nodes().iter().map(|n| NodeRecord { cpu: n.cpu_capacity }).collect(),
                edges: self.substrate.edges().iter().map(|e| EdgeRecord { u: e.u, v: e.v, bw: e.bw_capacity }).collect(),
            },
            slices: self.requests.clone(),
            certificate: self.certificate.clone(),
        };
        Ok(serde_json::to_string_pretty(&record)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let record: ScenarioRecord = serde_json::from_str(text)?;
        let substrate = PhysicalNetwork::new(
            record.substrate.nodes.iter().map(|n| n.cpu).collect(),
            record.substrate.edges.iter().map(|e| (e.u, e.v, e.bw)),
        )?;
        let scenario = Scenario { substrate, requests: record.slices, certificate: record.certificate };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ScenarioError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Generates a substrate and a slice stream from `cfg`, seeded by `cfg.seed`.
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<Scenario, ScenarioError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let substrate = match &cfg.substrate {
        SubstrateSpec::Waxman { nodes, alpha, beta } => {
            gen_waxman(*nodes, *alpha, *beta, cfg.cpu_capacity, cfg.bw_capacity, MAX_ATTEMPTS, &mut rng)?
        }
        SubstrateSpec::ErdosRenyi { nodes, p } => {
            gen_er(*nodes, *p, cfg.cpu_capacity, cfg.bw_capacity, MAX_ATTEMPTS, &mut rng)?
        }
        SubstrateSpec::Topology { path } => {
            let topo = load_topology(path)?;
            if !topo.is_connected() {
                return Err(ScenarioError::DisconnectedTopology);
            }
            topo.into_network(cfg.cpu_capacity, cfg.bw_capacity, &mut rng)?
        }
    };
    let requests = gen_slice_stream(&cfg.slices, cfg.arrival_rate, cfg.departure_rate, &mut rng)?;
    Ok(Scenario { substrate, requests, certificate: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            substrate: SubstrateSpec::Waxman { nodes: 20, alpha: 0.5, beta: 0.2 },
            slices: SliceSpec { count: 30, ..SliceSpec::default() },
            seed: 4,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let sc = generate_scenario(&small()).unwrap();
        let json = sc.to_json().unwrap();
        let back = Scenario::from_json(&json).unwrap();
        assert_eq!(back.to_json().unwrap(), json);
        assert_eq!(back.requests, sc.requests);
        assert!(!json.contains("certificate"));
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let a = generate_scenario(&small()).unwrap().to_json().unwrap();
        let b = generate_scenario(&small()).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        let c = generate_scenario(&ScenarioConfig { seed: 5, ..small() }).unwrap().to_json().unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_configs_are_refused() {
        let mut cfg = small();
        cfg.arrival_rate = 0.0;
        assert!(matches!(generate_scenario(&cfg), Err(ScenarioError::InvalidConfig(_))));
        let mut cfg = small();
        cfg.cpu_capacity = IntRange::new(5, 1);
        assert!(cfg.validate().is_err());
        let mut cfg = small();
        cfg.substrate = SubstrateSpec::ErdosRenyi { nodes: 10, p: 0.0 };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn out_of_order_or_duplicate_requests_are_invalid() {
        let mut sc = generate_scenario(&small()).unwrap();
        sc.requests.swap(0, 1);
        assert!(sc.validate().is_err());
        let mut sc = generate_scenario(&small()).unwrap();
        sc.requests[1].id = sc.requests[0].id;
        assert!(sc.validate().is_err());
    }
}
