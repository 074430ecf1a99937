use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::graphs::waxman_edges;
use super::{IntRange, ScenarioError, MAX_ATTEMPTS};
use crate::net::{SliceId, SliceRequest, VirtualEdge, VirtualNode};

/// Shape of generated slices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub count: usize,
    /// Number of virtual nodes.
    pub size: IntRange,
    pub cpu_demand: IntRange,
    pub bw_demand: IntRange,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for SliceSpec {
    fn default() -> Self {
        Self {
            count: 500,
            size: IntRange::new(7, 13),
            cpu_demand: IntRange::new(1, 50),
            bw_demand: IntRange::new(1, 50),
            alpha: 0.5,
            beta: 0.2,
        }
    }
}

impl SliceSpec {
    pub(crate) fn validate(&self) -> Result<(), ScenarioError> {
        self.size.check("slice size")?;
        self.cpu_demand.check("cpu demand")?;
        self.bw_demand.check("bandwidth demand")?;
        if self.size.min < 2 || self.cpu_demand.min == 0 || self.bw_demand.min == 0 {
            return Err(ScenarioError::InvalidConfig("slices need >= 2 nodes and positive demands".into()));
        }
        Ok(())
    }
}

/// One connected Waxman slice with the given times.
pub fn gen_slice<R: Rng + ?Sized>(
    id: SliceId,
    t_arrive: f64,
    t_depart: f64,
    spec: &SliceSpec,
    rng: &mut R,
) -> Result<SliceRequest, ScenarioError> {
    let n = spec.size.sample(rng) as usize;
    let edges = waxman_edges(n, spec.alpha, spec.beta, MAX_ATTEMPTS, rng)?;
    let vnodes = (0..n).map(|_| VirtualNode { cpu_demand: spec.cpu_demand.sample(rng) }).collect();
    let vedges = edges.iter().map(|&(a, b)| VirtualEdge { a, b, bw_demand: spec.bw_demand.sample(rng) }).collect();
    Ok(SliceRequest { id, t_arrive, t_depart, vnodes, vedges })
}

/// Poisson arrivals with exponential lifetimes.
pub fn gen_slice_stream<R: Rng + ?Sized>(
    spec: &SliceSpec,
    arrival_rate: f64,
    departure_rate: f64,
    rng: &mut R,
) -> Result<Vec<SliceRequest>, ScenarioError> {
    spec.validate()?;
    let gap = Exp::new(arrival_rate).map_err(|e| ScenarioError::InvalidConfig(e.to_string()))?;
    let life = Exp::new(departure_rate).map_err(|e| ScenarioError::InvalidConfig(e.to_string()))?;
    let mut t = 0.0;
    let mut out = Vec::with_capacity(spec.count);
    for id in 0..spec.count {
        t += gap.sample(rng);
        let lifetime: f64 = life.sample(rng);
        let depart = (t + lifetime).max(t.next_up());
        out.push(gen_slice(id as SliceId, t, depart, spec, rng)?);
    }
    Ok(out)
}
