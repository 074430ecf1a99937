//! Per-arrival placement: prune, search, commit on success.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::mdp::{prune_candidates, Embedding, RewardKind};
use crate::nepa::RefineConfig;
use crate::net::{NetError, PhysicalNetwork, SliceRequest};
use crate::nrpa::{self, Policy, SearchConfig, SearchStats, WeightInit};
use crate::scalar::Real;
use crate::uct::{uct_search, UctConfig, UctStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Nepa,
    NepaW,
    Nrpa,
    NrpaW,
    Uct,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [Algorithm::Nepa, Algorithm::NepaW, Algorithm::Nrpa, Algorithm::NrpaW, Algorithm::Uct];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Nepa => "nepa",
            Algorithm::NepaW => "nepa-w",
            Algorithm::Nrpa => "nrpa",
            Algorithm::NrpaW => "nrpa-w",
            Algorithm::Uct => "uct",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}` (expected nepa, nepa-w, nrpa, nrpa-w or uct)"))
    }
}

/// Everything needed to place one slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgoConfig {
    pub algorithm: Algorithm,
    /// Iterations per level (N).
    pub iterations: usize,
    /// Search level (l).
    pub level: u32,
    pub refine: RefineConfig,
    pub reward: RewardKind,
    pub uct: UctConfig,
    /// Replaces the algorithm's own weight initialisation when set.
    #[serde(skip)]
    pub init_override: Option<WeightInit>,
}

impl AlgoConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        let iterations = match algorithm {
            Algorithm::Nrpa | Algorithm::NrpaW => 7,
            _ => 5,
        };
        Self {
            algorithm,
            iterations,
            level: 3,
            refine: RefineConfig::default(),
            reward: RewardKind::Rc,
            uct: UctConfig::default(),
            init_override: None,
        }
    }

    pub fn weight_init(&self) -> WeightInit {
        self.init_override.unwrap_or(match self.algorithm {
            Algorithm::NepaW | Algorithm::NrpaW => WeightInit::Zero,
            _ => WeightInit::Distance,
        })
    }

    pub fn search_config(&self) -> SearchConfig {
        let refine = matches!(self.algorithm, Algorithm::Nepa | Algorithm::NepaW).then_some(self.refine);
        SearchConfig { iterations: self.iterations, level: self.level, reward: self.reward, refine }
    }

    /// One-line description of every effective parameter.
    pub fn describe(&self) -> String {
        match self.algorithm {
            Algorithm::Uct => format!(
                "algo=uct budget={} c={:.4} reward={:?}",
                self.uct.budget, self.uct.exploration, self.reward
            ),
            Algorithm::Nepa | Algorithm::NepaW => format!(
                "algo={} N={} l={} l'={} K={} X={} init={:?} reward={:?}",
                self.algorithm,
                self.iterations,
                self.level,
                self.refine.level,
                self.refine.k,
                self.refine.x.map_or("|V^x|".to_string(), |x| x.to_string()),
                self.weight_init(),
                self.reward
            ),
            _ => format!(
                "algo={} N={} l={} init={:?} reward={:?}",
                self.algorithm,
                self.iterations,
                self.level,
                self.weight_init(),
                self.reward
            ),
        }
    }
}

/// Outcome of one placement attempt.
#[derive(Debug, Clone)]
pub struct Placement<F> {
    pub accepted: bool,
    pub embedding: Embedding<F>,
    pub search: SearchStats,
    pub uct: Option<UctStats>,
}

impl<F: Real> Placement<F> {
    fn rejected() -> Self {
        Self { accepted: false, embedding: Embedding::failure(Vec::new()), search: SearchStats::default(), uct: None }
    }
}

/// Searches an embedding for `slice` against the current residuals and
/// commits it when its reward is positive.
pub fn main_place<F: Real, R: Rng + ?Sized>(
    net: &mut PhysicalNetwork,
    slice: &SliceRequest,
    cfg: &AlgoConfig,
    rng: &mut R,
) -> Result<Placement<F>, NetError> {
    if slice.node_count() == 0 || slice.node_count() > net.node_count() {
        return Ok(Placement::rejected());
    }
    let table = prune_candidates(net, slice);
    if table.has_dead_vnode() {
        return Ok(Placement::rejected());
    }
    let mut out = match cfg.algorithm {
        Algorithm::Uct => {
            let uct = UctConfig { reward: cfg.reward, ..cfg.uct };
            let (embedding, stats) = uct_search::<F, R>(net, slice, &table, &uct, rng);
            Placement { accepted: false, embedding, search: SearchStats::default(), uct: Some(stats) }
        }
        _ => {
            let mut policy = Policy::new(cfg.weight_init());
            let mut stats = SearchStats::default();
            let embedding = nrpa::run(net, slice, &table, &cfg.search_config(), &mut policy, rng, &mut stats);
            Placement { accepted: false, embedding, search: stats, uct: None }
        }
    };
    if out.embedding.reward > F::zero() {
        net.commit_embedding(slice, &out.embedding.hosts, &out.embedding.link_map)?;
        out.accepted = true;
    }
    Ok(out)
}
