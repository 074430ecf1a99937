use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graphs::connected;
use super::stream::{gen_slice, SliceSpec};
use super::{IntRange, Scenario, ScenarioError, MAX_ATTEMPTS};
use crate::net::{NodeId, PhysicalNetwork};

/// Perfectly solvable scenario parameters. Slice sizes run from `7 + index`
/// to `10 + index`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PssConfig {
    pub index: u64,
    pub slices: usize,
    pub reuse_prob: f64,
    pub cpu_demand: IntRange,
    pub bw_demand: IntRange,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for PssConfig {
    fn default() -> Self {
        Self {
            index: 0,
            slices: 100,
            reuse_prob: 0.93,
            cpu_demand: IntRange::new(1, 50),
            bw_demand: IntRange::new(1, 50),
            alpha: 0.5,
            beta: 0.2,
        }
    }
}

/// Builds the substrate from the slices themselves so that placing every
/// slice on its generating hosts uses every resource exactly.
///
/// Each virtual node reuses, with probability `reuse_prob`, a uniformly
/// chosen existing physical node not yet used by the same slice, and
/// otherwise opens a new one. Slices arrive one second apart and never
/// leave. The generating hosts are kept as the scenario certificate.
pub fn gen_pss<R: Rng + ?Sized>(cfg: &PssConfig, rng: &mut R) -> Result<Scenario, ScenarioError> {
    if !(0.0..1.0).contains(&cfg.reuse_prob) {
        return Err(ScenarioError::InvalidConfig("reuse probability must lie in [0, 1)".into()));
    }
    let spec = SliceSpec {
        count: cfg.slices,
        size: IntRange::new(7 + cfg.index, 10 + cfg.index),
        cpu_demand: cfg.cpu_demand,
        bw_demand: cfg.bw_demand,
        alpha: cfg.alpha,
        beta: cfg.beta,
    };
    spec.validate()?;
    for _ in 0..MAX_ATTEMPTS {
        let mut requests = Vec::with_capacity(cfg.slices);
        for id in 0..cfg.slices {
            requests.push(gen_slice(id as u64, id as f64, f64::INFINITY, &spec, rng)?);
        }
        let mut cpu: Vec<u64> = Vec::new();
        let mut bw: BTreeMap<(NodeId, NodeId), u64> = BTreeMap::new();
        let mut certificate = Vec::with_capacity(requests.len());
        for s in &requests {
            let mut hosts: Vec<NodeId> = Vec::with_capacity(s.node_count());
            for v in &s.vnodes {
                let eligible: Vec<NodeId> = (0..cpu.len()).filter(|j| !hosts.contains(j)).collect();
                let host = match eligible.choose(rng) {
                    Some(&j) if rng.random::<f64>() < cfg.reuse_prob => j,
                    _ => {
                        cpu.push(0);
                        cpu.len() - 1
                    }
                };
                cpu[host] += v.cpu_demand;
                hosts.push(host);
            }
            for e in &s.vedges {
                let (u, w) = (hosts[e.a], hosts[e.b]);
                *bw.entry((u.min(w), u.max(w))).or_default() += e.bw_demand;
            }
            certificate.push(hosts);
        }
        let edges: Vec<(NodeId, NodeId)> = bw.keys().copied().collect();
        if !connected(cpu.len(), &edges) {
            continue;
        }
        let substrate = PhysicalNetwork::new(cpu, bw.into_iter().map(|((u, v), c)| (u, v, c)))?;
        return Ok(Scenario { substrate, requests, certificate: Some(certificate) });
    }
    Err(ScenarioError::GenerationFailure(MAX_ATTEMPTS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn replay(sc: &Scenario) -> PhysicalNetwork {
        let mut net = sc.substrate.clone();
        for (s, hosts) in sc.requests.iter().zip(sc.certificate.as_ref().unwrap()) {
            let paths: Vec<Vec<usize>> = s
                .vedges
                .iter()
                .map(|e| vec![net.edge_between(hosts[e.a], hosts[e.b]).unwrap()])
                .collect();
            net.commit_embedding(s, hosts, &paths).unwrap();
        }
        net
    }

    #[test]
    fn certificate_replay_exhausts_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sc = gen_pss(&PssConfig { slices: 20, ..PssConfig::default() }, &mut rng).unwrap();
        let net = replay(&sc);
        assert!((0..net.node_count()).all(|j| net.residual_cpu(j) == 0));
        assert!((0..net.edge_count()).all(|e| net.residual_bw(e) == 0));
        assert!(sc.requests.iter().all(|s| s.t_depart.is_infinite()));
    }

    #[test]
    fn no_reuse_copies_a_single_slice() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sc = gen_pss(&PssConfig { slices: 1, reuse_prob: 0.0, ..PssConfig::default() }, &mut rng).unwrap();
        let s = &sc.requests[0];
        assert_eq!(sc.substrate.node_count(), s.node_count());
        assert_eq!(sc.substrate.edge_count(), s.edge_count());
        assert_eq!(sc.substrate.nodes().iter().map(|n| n.cpu_capacity).sum::<u64>(), s.total_cpu());
        assert_eq!(sc.substrate.edges().iter().map(|e| e.bw_capacity).sum::<u64>(), s.total_bw());
    }

    #[test]
    fn reuse_probability_is_checked() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(gen_pss(&PssConfig { reuse_prob: 1.0, ..PssConfig::default() }, &mut rng).is_err());
    }
}
