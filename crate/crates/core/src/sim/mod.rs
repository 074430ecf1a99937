//! Online event loop: arrivals are placed against current residuals,
//! departures free what their slice held.

mod batch;
mod oracle;

pub use batch::{run_batch, summarize, write_runs_csv, write_slices_csv, BatchJob, Interval, RunRow, Summary};
pub use oracle::{feasibility_oracle, Violation};

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::link::LinkMap;
use crate::mdp::{cost, revenue};
use crate::net::{NetError, NodeId, PhysicalNetwork, SliceId, SliceRequest};
use crate::placement::{main_place, AlgoConfig};
use crate::scalar::Real;
use crate::scenario::Scenario;

/// Outcome of one arrival.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceRecord {
    pub id: SliceId,
    pub accepted: bool,
    pub reward: f64,
    pub revenue: u64,
    /// Physical resources consumed; 0 when rejected.
    pub cost: u64,
    pub wall_ms: f64,
    /// Shortest-path searches spent on this slice.
    pub routing_attempts: u64,
    pub simulations: u64,
    pub hosts: Vec<NodeId>,
    pub link_map: LinkMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub accepted: usize,
    pub arrived: usize,
    pub acceptance_ratio: f64,
    /// Total revenue over total cost of accepted slices.
    pub rtc_sum: f64,
    /// Mean of per-slice revenue over cost among accepted slices.
    pub rtc_mean: f64,
    pub records: Vec<SliceRecord>,
    /// Slices still holding resources after the last arrival.
    pub live_at_end: usize,
    pub total_ms: f64,
}

impl SimulationReport {
    fn from_records(records: Vec<SliceRecord>, live_at_end: usize, total_ms: f64) -> Self {
        let arrived = records.len();
        let accepted: Vec<&SliceRecord> = records.iter().filter(|r| r.accepted).collect();
        let (rev, cst) = accepted.iter().fold((0u64, 0u64), |(r, c), s| (r + s.revenue, c + s.cost));
        let rtc_sum = if cst == 0 { 0.0 } else { rev as f64 / cst as f64 };
        let rtc_mean = if accepted.is_empty() {
            0.0
        } else {
            accepted.iter().map(|s| s.revenue as f64 / s.cost as f64).sum::<f64>() / accepted.len() as f64
        };
        Self {
            accepted: accepted.len(),
            arrived,
            acceptance_ratio: if arrived == 0 { 0.0 } else { accepted.len() as f64 / arrived as f64 },
            rtc_sum,
            rtc_mean,
            live_at_end,
            total_ms,
            records,
        }
    }

    pub fn mean_ms_per_slice(&self) -> f64 {
        if self.arrived == 0 {
            0.0
        } else {
            self.records.iter().map(|r| r.wall_ms).sum::<f64>() / self.arrived as f64
        }
    }

    pub fn record(&self, id: SliceId) -> Option<&SliceRecord> {
        self.records.iter().find(|r| r.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Departure {
    t: f64,
    id: SliceId,
}

impl Eq for Departure {}

impl Ord for Departure {
    // reversed so the max-heap pops the earliest departure
    fn cmp(&self, other: &Self) -> Ordering {
        other.t.total_cmp(&self.t).then(other.id.cmp(&self.id))
    }
}

impl PartialOrd for Departure {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Processes `requests` (sorted by arrival) on `net`. Departures at the same
/// timestamp as an arrival are handled first. Slices whose departure lies
/// after the last arrival stay committed in `net`.
pub fn run_on<F: Real, R: Rng + ?Sized>(
    net: &mut PhysicalNetwork,
    requests: &[SliceRequest],
    cfg: &AlgoConfig,
    rng: &mut R,
) -> Result<SimulationReport, NetError> {
    let start = Instant::now();
    let mut departures = BinaryHeap::new();
    let mut records = Vec::with_capacity(requests.len());
    for slice in requests {
        while departures.peek().is_some_and(|d: &Departure| d.t <= slice.t_arrive) {
            let d = departures.pop().expect("peeked");
            net.release_embedding(d.id)?;
        }
        let t0 = Instant::now();
        let placed = main_place::<F, R>(net, slice, cfg, rng)?;
        let wall_ms = t0.elapsed().as_secs_f64() * 1e3;
        let routing_attempts = placed.uct.as_ref().map_or(placed.search.bfs_calls, |u| u.routing_attempts);
        let simulations = placed.uct.as_ref().map_or(placed.search.simulations, |u| u.iterations);
        let mut rec = SliceRecord {
            id: slice.id,
            accepted: placed.accepted,
            reward: 0.0,
            revenue: revenue(slice),
            cost: 0,
            wall_ms,
            routing_attempts,
            simulations,
            hosts: Vec::new(),
            link_map: Vec::new(),
        };
        if placed.accepted {
            let emb = placed.embedding;
            rec.reward = emb.reward.as_f64();
            rec.cost = cost(slice, &emb.link_map).expect("accepted embeddings are complete");
            rec.hosts = emb.hosts;
            rec.link_map = emb.link_map;
            if slice.t_depart.is_finite() {
                departures.push(Departure { t: slice.t_depart, id: slice.id });
            }
        }
        log::debug!("slice {} accepted={} reward={:.4}", rec.id, rec.accepted, rec.reward);
        records.push(rec);
    }
    let live = net.live_slices().count();
    Ok(SimulationReport::from_records(records, live, start.elapsed().as_secs_f64() * 1e3))
}

/// Runs a whole scenario on a fresh copy of its substrate with an RNG seeded
/// from `seed` alone.
pub fn run_scenario<F: Real>(scenario: &Scenario, cfg: &AlgoConfig, seed: u64) -> Result<SimulationReport, NetError> {
    let mut net = scenario.substrate.pristine();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run_on::<F, _>(&mut net, &scenario.requests, cfg, &mut rng)
}
