//! The deterministic node-placement MDP.
//!
//! A state is the pair (virtual nodes still to place, placement vector). The
//! placement vector has one entry per physical node: `0` when free, otherwise
//! the 1-based index of the virtual node of the current slice it hosts.
//! Virtual nodes are consumed in the fixed order of the [`CandidateTable`],
//! so every partial placement is reachable by exactly one action sequence.

use std::collections::VecDeque;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::net::{EdgeId, NodeId, PhysicalNetwork, SliceRequest, VNodeId};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MdpError {
    #[error("action {action} is not legal for virtual node {vnode}")]
    IllegalAction { action: NodeId, vnode: VNodeId },
    #[error("no virtual node left to place")]
    Terminal,
    #[error("embedding is incomplete")]
    IncompleteEmbedding,
}

/// Admissible hosts of every virtual node after pruning, plus the order in
/// which virtual nodes are placed (fewest candidates first, ties by id).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateTable {
    order: Vec<VNodeId>,
    candidates: Vec<Vec<NodeId>>,
    admissible: Vec<Vec<bool>>,
}

impl CandidateTable {
    pub fn order(&self) -> &[VNodeId] {
        &self.order
    }

    pub fn candidates(&self, vnode: VNodeId) -> &[NodeId] {
        &self.candidates[vnode]
    }

    #[inline]
    pub fn admits(&self, vnode: VNodeId, node: NodeId) -> bool {
        self.admissible[vnode][node]
    }

    /// True when some virtual node has no admissible host at all.
    pub fn has_dead_vnode(&self) -> bool {
        self.candidates.iter().any(|c| c.is_empty())
    }

    /// Position of `vnode` in the processing order.
    pub fn position(&self, vnode: VNodeId) -> usize {
        self.order.iter().position(|&v| v == vnode).expect("vnode in order")
    }

    /// Maps a (possibly partial) action sequence to hosts indexed by vnode.
    pub fn hosts_of(&self, seq: &[NodeId]) -> Vec<Option<NodeId>> {
        let mut hosts = vec![None; self.order.len()];
        for (&v, &a) in self.order.iter().zip(seq) {
            hosts[v] = Some(a);
        }
        hosts
    }

    /// Inverse of [`hosts_of`](Self::hosts_of) for a complete placement.
    pub fn seq_of(&self, hosts: &[NodeId]) -> Vec<NodeId> {
        self.order.iter().map(|&v| hosts[v]).collect()
    }
}

/// Builds the candidate table against the current residuals.
///
/// A pair (virtual node, physical node) survives when the physical node has
/// enough residual CPU, its best incident link can carry the largest adjacent
/// virtual link, and its incident residual bandwidth covers the sum of the
/// adjacent demands.
pub fn prune_candidates(net: &PhysicalNetwork, slice: &SliceRequest) -> CandidateTable {
    let n = net.node_count();
    let incident: Vec<(u64, u64)> = (0..n)
        .map(|j| {
            net.neighbors(j).iter().fold((0u64, 0u64), |(mx, sum), &(_, e)| {
                let r = net.residual_bw(e);
                (mx.max(r), sum + r)
            })
        })
        .collect();
    let mut demand = vec![(0u64, 0u64); slice.node_count()];
    for e in &slice.vedges {
        for v in [e.a, e.b] {
            demand[v].0 = demand[v].0.max(e.bw_demand);
            demand[v].1 += e.bw_demand;
        }
    }
    let mut candidates = Vec::with_capacity(slice.node_count());
    let mut admissible = Vec::with_capacity(slice.node_count());
    for (v, vn) in slice.vnodes.iter().enumerate() {
        let (max_d, sum_d) = demand[v];
        let mask: Vec<bool> = (0..n)
            .map(|j| {
                let (max_r, sum_r) = incident[j];
                net.residual_cpu(j) >= vn.cpu_demand && max_d <= max_r && sum_d <= sum_r
            })
            .collect();
        candidates.push((0..n).filter(|&j| mask[j]).collect::<Vec<_>>());
        admissible.push(mask);
    }
    let mut order: Vec<VNodeId> = (0..slice.node_count()).collect();
    order.sort_by_key(|&v| (candidates[v].len(), v));
    CandidateTable { order, candidates, admissible }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MdpState {
    pending: VecDeque<VNodeId>,
    placement: Vec<u32>,
}

impl MdpState {
    pub fn initial(table: &CandidateTable, physical_nodes: usize) -> Self {
        Self { pending: table.order().iter().copied().collect(), placement: vec![0; physical_nodes] }
    }

    /// Builds a state directly; `placement` uses 1-based vnode indices.
    pub fn from_parts(pending: Vec<VNodeId>, placement: Vec<u32>) -> Self {
        Self { pending: pending.into(), placement }
    }

    pub fn pending(&self) -> &VecDeque<VNodeId> {
        &self.pending
    }

    pub fn placement(&self) -> &[u32] {
        &self.placement
    }

    pub fn current(&self) -> Option<VNodeId> {
        self.pending.front().copied()
    }

    pub fn is_terminal(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn placed_count(&self) -> usize {
        self.placement.iter().filter(|&&x| x != 0).count()
    }

    /// Legal hosts for the current virtual node, ascending.
    pub fn legal_actions(&self, net: &PhysicalNetwork, slice: &SliceRequest, table: &CandidateTable) -> Vec<NodeId> {
        let mut out = Vec::new();
        self.legal_actions_into(net, slice, table, &mut out);
        out
    }

    pub fn legal_actions_into(
        &self,
        net: &PhysicalNetwork,
        slice: &SliceRequest,
        table: &CandidateTable,
        out: &mut Vec<NodeId>,
    ) {
        out.clear();
        let Some(v) = self.current() else { return };
        let demand = slice.vnodes[v].cpu_demand;
        out.extend(
            table
                .candidates(v)
                .iter()
                .copied()
                .filter(|&j| self.placement[j] == 0 && net.residual_cpu(j) >= demand),
        );
    }

    /// Places the current virtual node on `action` in place.
    pub fn apply(&mut self, action: NodeId) -> Result<VNodeId, MdpError> {
        let v = self.current().ok_or(MdpError::Terminal)?;
        if action >= self.placement.len() || self.placement[action] != 0 {
            return Err(MdpError::IllegalAction { action, vnode: v });
        }
        self.pending.pop_front();
        self.placement[action] = v as u32 + 1;
        Ok(v)
    }

    /// Pure transition.
    pub fn apply_action(&self, action: NodeId) -> Result<Self, MdpError> {
        let mut next = self.clone();
        next.apply(action)?;
        Ok(next)
    }
}

/// Which reward the searches maximise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardKind {
    /// Revenue over cost.
    #[default]
    Rc,
    /// Inverse of bandwidth used plus host-versus-virtual degree excess.
    Afbd,
}

/// Sum of all bandwidth and CPU demands.
pub fn revenue(slice: &SliceRequest) -> u64 {
    slice.total_bw() + slice.total_cpu()
}

/// Physical resources consumed: CPU demands plus each bandwidth demand
/// multiplied by the hop length of its path.
pub fn cost(slice: &SliceRequest, link_map: &[Vec<EdgeId>]) -> Result<u64, MdpError> {
    if link_map.len() != slice.edge_count() || link_map.iter().any(|p| p.is_empty()) {
        return Err(MdpError::IncompleteEmbedding);
    }
    let bw: u64 = slice.vedges.iter().zip(link_map).map(|(e, p)| e.bw_demand * p.len() as u64).sum();
    Ok(bw + slice.total_cpu())
}

/// Exact revenue-to-cost ratio of a complete embedding (zero cost maps to 0).
pub fn reward_ratio(slice: &SliceRequest, link_map: &[Vec<EdgeId>]) -> Result<Ratio<u64>, MdpError> {
    let c = cost(slice, link_map)?;
    if c == 0 {
        return Ok(Ratio::from_integer(0));
    }
    Ok(Ratio::new(revenue(slice), c))
}

/// Degree-based alternative reward. A non-positive denominator is clamped to
/// reward 1.
pub fn afbd_reward<F: Real>(
    net: &PhysicalNetwork,
    slice: &SliceRequest,
    hosts: &[NodeId],
    link_map: &[Vec<EdgeId>],
) -> Result<F, MdpError> {
    if hosts.len() != slice.node_count() || link_map.len() != slice.edge_count() {
        return Err(MdpError::IncompleteEmbedding);
    }
    let bw: i64 = slice.vedges.iter().zip(link_map).map(|(e, p)| (e.bw_demand * p.len() as u64) as i64).sum();
    let degree_excess: i64 =
        hosts.iter().enumerate().map(|(v, &h)| net.degree(h) as i64 - slice.degree(v) as i64).sum();
    let denom = bw + degree_excess;
    if denom <= 0 {
        return Ok(F::one());
    }
    Ok(F::one() / F::lit(denom as f64))
}

/// Reward of a complete embedding under `kind`.
pub fn score<F: Real>(
    kind: RewardKind,
    net: &PhysicalNetwork,
    slice: &SliceRequest,
    hosts: &[NodeId],
    link_map: &[Vec<EdgeId>],
) -> Result<F, MdpError> {
    match kind {
        RewardKind::Rc => {
            let r = reward_ratio(slice, link_map)?;
            Ok(F::from_ratio(*r.numer(), *r.denom()))
        }
        RewardKind::Afbd => afbd_reward(net, slice, hosts, link_map),
    }
}

/// A node placement with its link mapping and reward. Failed attempts keep
/// the partial action sequence, no hosts, no links and reward 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<F> {
    /// Hosts in processing order (the MDP action sequence).
    pub seq: Vec<NodeId>,
    /// Host of each virtual node, indexed by vnode; empty on failure.
    pub hosts: Vec<NodeId>,
    /// Physical path of each virtual edge, indexed by vedge; empty on failure.
    pub link_map: Vec<Vec<EdgeId>>,
    pub reward: F,
}

impl<F: Real> Embedding<F> {
    pub fn failure(seq: Vec<NodeId>) -> Self {
        Self { seq, hosts: Vec::new(), link_map: Vec::new(), reward: F::zero() }
    }

    pub fn is_success(&self) -> bool {
        self.reward > F::zero()
    }

    pub fn cost(&self, slice: &SliceRequest) -> Result<u64, MdpError> {
        cost(slice, &self.link_map)
    }

    /// Bandwidth consumed across all physical links.
    pub fn bandwidth_used(&self, slice: &SliceRequest) -> u64 {
        slice.vedges.iter().zip(&self.link_map).map(|(e, p)| e.bw_demand * p.len() as u64).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{VirtualEdge, VirtualNode};

    fn slice(cpu: &[u64], edges: &[(usize, usize, u64)]) -> SliceRequest {
        SliceRequest {
            id: 0,
            t_arrive: 0.0,
            t_depart: 1.0,
            vnodes: cpu.iter().map(|&c| VirtualNode { cpu_demand: c }).collect(),
            vedges: edges.iter().map(|&(a, b, bw)| VirtualEdge { a, b, bw_demand: bw }).collect(),
        }
    }

    /// Toy substrate: 1-based edges 1-4, 4-3, 2-3; CPU [12, 5, 20, 12].
    fn toy_net() -> PhysicalNetwork {
        PhysicalNetwork::new(vec![12, 5, 20, 12], vec![(0, 3, 100), (3, 2, 100), (1, 2, 100)]).unwrap()
    }

    fn toy_slice() -> SliceRequest {
        slice(&[10, 9, 14], &[(0, 1, 1), (0, 2, 2)])
    }

    #[test]
    fn initial_state_of_toy() {
        let net = toy_net();
        let s = toy_slice();
        let mut table = prune_candidates(&net, &s);
        // force identity order to mirror the figure
        table.order = vec![0, 1, 2];
        let st = MdpState::initial(&table, 4);
        assert_eq!(st.pending().iter().copied().collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(st.placement(), &[0, 0, 0, 0]);
        let mut table = prune_candidates(&net, &slice(&[], &[]));
        table.order.clear();
        assert!(MdpState::initial(&table, 4).is_terminal());
    }

    #[test]
    fn toy_transitions() {
        let st = MdpState::from_parts(vec![0, 1, 2], vec![0; 4]);
        let st = st.apply_action(0).unwrap();
        assert_eq!(st.placement(), &[1, 0, 0, 0]);
        assert_eq!(st.pending().iter().copied().collect::<Vec<_>>(), vec![1, 2]);
        let st = MdpState::from_parts(vec![2], vec![1, 0, 0, 2]);
        let done = st.apply_action(2).unwrap();
        assert_eq!(done.placement(), &[1, 0, 3, 2]);
        assert!(done.is_terminal());
        assert_eq!(st.apply_action(0), Err(MdpError::IllegalAction { action: 0, vnode: 2 }));
        assert_eq!(done.apply_action(1), Err(MdpError::Terminal));
    }

    #[test]
    fn legal_actions_filter_cpu_and_separation() {
        let net = PhysicalNetwork::new(vec![10, 20, 14, 5], vec![(0, 1, 9), (1, 2, 9), (2, 3, 9)]).unwrap();
        let s = slice(&[14], &[]);
        let table = prune_candidates(&net, &s);
        let st = MdpState::initial(&table, 4);
        assert_eq!(st.legal_actions(&net, &s, &table), vec![1, 2]);
        let taken = MdpState::from_parts(vec![0], vec![0, 5, 0, 0]);
        assert_eq!(taken.legal_actions(&net, &s, &table), vec![2]);
        let full = MdpState::from_parts(vec![0], vec![1, 2, 3, 4]);
        assert!(full.legal_actions(&net, &s, &table).is_empty());
    }

    #[test]
    fn toy_revenue_cost_reward() {
        let s = toy_slice();
        assert_eq!(revenue(&s), 36);
        // seq [1,4,3]: vedge (v1,v3) rides 1-4-3
        let links = vec![vec![0], vec![0, 1]];
        assert_eq!(cost(&s, &links).unwrap(), 38);
        assert_eq!(reward_ratio(&s, &links).unwrap(), Ratio::new(36, 38));
        let one_hop = vec![vec![0], vec![1]];
        assert_eq!(reward_ratio(&s, &one_hop).unwrap(), Ratio::from_integer(1));
        assert_eq!(revenue(&slice(&[], &[])), 0);
        assert_eq!(revenue(&slice(&[5], &[])), 5);
        assert_eq!(cost(&s, &[vec![0]]), Err(MdpError::IncompleteEmbedding));
    }

    #[test]
    fn afbd_formula() {
        // path 0-1-2: host degree 1,2,1 ; vnode degree 1,1 on hosts 0 and 1
        let net = PhysicalNetwork::new(vec![9; 3], vec![(0, 1, 9), (1, 2, 9)]).unwrap();
        let s = slice(&[1, 1], &[(0, 1, 5)]);
        let r: f64 = afbd_reward(&net, &s, &[0, 1], &[vec![0]]).unwrap();
        // bw 5, excess (1-1)+(2-1) = 1
        assert_eq!(r, 1.0 / 6.0);
        let r: f64 = afbd_reward(&net, &s, &[0, 2], &[vec![0, 1]]).unwrap();
        assert_eq!(r, 1.0 / 10.0);
        // star centre 0 with three leaves; vnode of degree 1 on the centre: excess +2
        let star = PhysicalNetwork::new(vec![9; 4], vec![(0, 1, 9), (0, 2, 9), (0, 3, 9)]).unwrap();
        let r: f64 = afbd_reward(&star, &s, &[0, 1], &[vec![0]]).unwrap();
        assert_eq!(r, 1.0 / 7.0);
    }

    #[test]
    fn afbd_clamps_degenerate_denominator() {
        // K4 slice on a 4-node path: bw 6, degree excess (1+2+2+1) - 4*3 = -6
        let net = PhysicalNetwork::new(vec![9; 4], vec![(0, 1, 9), (1, 2, 9), (2, 3, 9)]).unwrap();
        let s = slice(&[1; 4], &[(0, 1, 1), (0, 2, 1), (0, 3, 1), (1, 2, 1), (1, 3, 1), (2, 3, 1)]);
        let links = vec![vec![0]; 6];
        let r: f64 = afbd_reward(&net, &s, &[0, 1, 2, 3], &links).unwrap();
        assert_eq!(r, 1.0);
    }

    #[test]
    fn pruning_rules() {
        // node 0 incident residuals {40, 30}
        let net = PhysicalNetwork::new(vec![100; 3], vec![(0, 1, 40), (0, 2, 30)]).unwrap();
        let s = slice(&[1, 1], &[(0, 1, 50)]);
        let t = prune_candidates(&net, &s);
        assert!(!t.admits(0, 0));

        let isolated = slice(&[1], &[]);
        let t = prune_candidates(&net, &isolated);
        assert_eq!(t.candidates(0), &[0, 1, 2]);

        // incident residuals {40, 15}: max 30 <= 40 but sum 60 > 55
        let net = PhysicalNetwork::new(vec![100; 3], vec![(0, 1, 40), (0, 2, 15)]).unwrap();
        let s = slice(&[1, 1, 1], &[(0, 1, 30), (0, 2, 30)]);
        let t = prune_candidates(&net, &s);
        assert!(!t.admits(0, 0));
    }

    #[test]
    fn ordering_puts_scarce_vnodes_first() {
        // cpu capacities 30, 20, 10: vnode 1 (demand 25) fits one node,
        // vnode 0 (demand 15) fits two, vnode 2 (demand 5) fits three
        let net = PhysicalNetwork::new(vec![30, 20, 10], vec![(0, 1, 99), (1, 2, 99), (0, 2, 99)]).unwrap();
        let s = slice(&[15, 25, 5], &[]);
        let t = prune_candidates(&net, &s);
        assert_eq!(t.order(), &[1, 0, 2]);
        assert_eq!(t.hosts_of(&[0, 1]), vec![Some(1), Some(0), None]);
        assert_eq!(t.seq_of(&[1, 0, 2]), vec![0, 1, 2]);
    }
}
