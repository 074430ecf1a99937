//! Virtual network embedding: substrate and slice models, the node-placement
//! MDP, greedy link placement, nested rollout searches with neighbourhood
//! refinement, a UCT baseline, scenario generators and an online simulator.

pub mod link;
pub mod mdp;
pub mod nepa;
pub mod net;
pub mod nrpa;
pub mod placement;
pub mod scalar;
pub mod scenario;
pub mod sim;
pub mod uct;

pub use link::{bfs_capacity_path, vlink, LinkMap, LinkRouter};
pub use mdp::{prune_candidates, CandidateTable, Embedding, MdpError, MdpState, RewardKind};
pub use nepa::{nepa_search, refine_embedding, RefineConfig};
pub use net::{GraphStats, NetError, PhysicalNetwork, SliceRequest};
pub use nrpa::{nrpa_search, Policy, SearchConfig, SearchStats, WeightInit};
pub use placement::{main_place, AlgoConfig, Algorithm, Placement};
pub use scalar::Real;
pub use scenario::{generate_scenario, Scenario, ScenarioConfig, ScenarioError};
pub use sim::{feasibility_oracle, run_scenario, SimulationReport};
pub use uct::{uct_search, UctConfig, UctStats};

pub type Embedding64 = Embedding<f64>;
pub type Embedding32 = Embedding<f32>;
pub type Policy64 = Policy<f64>;
pub type Policy32 = Policy<f32>;
