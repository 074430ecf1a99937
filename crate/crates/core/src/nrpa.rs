//! Nested rollout policy adaptation over the node-placement MDP.
//!
//! The same recursion drives plain NRPA and the refined variant: passing a
//! [`RefineConfig`] whose level is never reached reproduces NRPA exactly.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::link::LinkRouter;
use crate::mdp::{score, CandidateTable, Embedding, MdpError, MdpState, RewardKind};
use crate::nepa::{refine, RefineConfig};
use crate::net::{DistanceMatrix, NodeId, PhysicalNetwork, SliceRequest};
use crate::scalar::Real;

/// Weights are kept inside this band so the softmax never overflows.
pub const WEIGHT_CLAMP: f64 = 100.0;

/// How a weight is filled the first time a (state, action) pair is seen.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightInit {
    /// Negative mean hop distance to the hosts already in use, or `1/|V|`
    /// on an empty placement.
    #[default]
    Distance,
    /// All weights start at zero.
    Zero,
    /// The distance initialisation multiplied by a constant.
    Scaled(f64),
}

/// Initial weight of `action` given the physical nodes already hosting a
/// virtual node of the slice.
pub fn weight_from_hosts<F: Real>(placed: &[NodeId], action: NodeId, dist: &DistanceMatrix) -> F {
    if placed.is_empty() {
        return F::one() / F::lit(dist.len() as f64);
    }
    let total: u64 = placed.iter().map(|&i| dist.get(i, action) as u64).sum();
    -(F::lit(total as f64) / F::lit(placed.len() as f64))
}

/// Initial weight of `action` in the state with the given placement vector.
pub fn weight_init<F: Real>(placement: &[u32], action: NodeId, dist: &DistanceMatrix) -> F {
    let placed: Vec<NodeId> = (0..placement.len()).filter(|&i| placement[i] != 0).collect();
    weight_from_hosts(&placed, action, dist)
}

impl WeightInit {
    pub fn weight<F: Real>(self, placed: &[NodeId], action: NodeId, dist: &DistanceMatrix) -> F {
        match self {
            WeightInit::Distance => weight_from_hosts(placed, action, dist),
            WeightInit::Zero => F::zero(),
            WeightInit::Scaled(s) => F::lit(s) * weight_from_hosts::<F>(placed, action, dist),
        }
    }
}

/// Lazily populated map from (state, action) to weight.
///
/// States are keyed by the action prefix that reaches them. With the fixed
/// virtual-node order this prefix and the placement vector determine each
/// other, so the key is a canonical encoding of the placement.
#[derive(Debug, Clone, Default)]
pub struct Policy<F> {
    init: WeightInit,
    weights: HashMap<Vec<NodeId>, Vec<(NodeId, F)>>,
}

impl<F: Real> Policy<F> {
    pub fn new(init: WeightInit) -> Self {
        Self { init, weights: HashMap::new() }
    }

    pub fn init_mode(&self) -> WeightInit {
        self.init
    }

    /// Number of states with at least one stored weight.
    pub fn state_count(&self) -> usize {
        self.weights.len()
    }

    pub fn get(&self, prefix: &[NodeId], action: NodeId) -> Option<F> {
        let row = self.weights.get(prefix)?;
        row.binary_search_by_key(&action, |&(a, _)| a).ok().map(|i| row[i].1)
    }

    pub fn set(&mut self, prefix: &[NodeId], action: NodeId, w: F) {
        let row = self.weights.entry(prefix.to_vec()).or_default();
        match row.binary_search_by_key(&action, |&(a, _)| a) {
            Ok(i) => row[i].1 = w,
            Err(i) => row.insert(i, (action, w)),
        }
    }

    /// Weights of `legal` in the state reached by `prefix`, filling missing
    /// entries from the initialisation rule.
    pub fn weights_into(&mut self, prefix: &[NodeId], legal: &[NodeId], dist: &DistanceMatrix, out: &mut Vec<F>) {
        out.clear();
        let init = self.init;
        let row = self.row_mut(prefix);
        for &a in legal {
            let w = match row.binary_search_by_key(&a, |&(x, _)| x) {
                Ok(i) => row[i].1,
                Err(i) => {
                    let w = init.weight(prefix, a, dist);
                    row.insert(i, (a, w));
                    w
                }
            };
            out.push(w);
        }
    }

    fn row_mut(&mut self, prefix: &[NodeId]) -> &mut Vec<(NodeId, F)> {
        if !self.weights.contains_key(prefix) {
            self.weights.insert(prefix.to_vec(), Vec::new());
        }
        self.weights.get_mut(prefix).expect("row inserted")
    }
}

/// Softmax probabilities of `weights`.
pub fn softmax<F: Real>(weights: &[F]) -> Vec<F> {
    let max = weights.iter().copied().fold(F::neg_infinity(), F::max);
    let exps: Vec<F> = weights.iter().map(|&w| (w - max).exp()).collect();
    let total: F = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Draws an index with probability proportional to `exp(weights[i])`.
pub fn gibbs_sample<F: Real, R: Rng + ?Sized>(weights: &[F], rng: &mut R) -> usize {
    assert!(!weights.is_empty(), "no legal action to sample");
    if weights.len() == 1 {
        return 0;
    }
    let max = weights.iter().copied().fold(F::neg_infinity(), F::max);
    let total: F = weights.iter().map(|&w| (w - max).exp()).sum();
    let u = F::lit(rng.random::<f64>()) * total;
    let mut acc = F::zero();
    for (i, &w) in weights.iter().enumerate() {
        acc = acc + (w - max).exp();
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Parameters of one nested search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Iterations per level (N).
    pub iterations: usize,
    /// Top search level (l).
    pub level: u32,
    pub reward: RewardKind,
    pub refine: Option<RefineConfig>,
}

impl SearchConfig {
    pub fn nrpa(iterations: usize, level: u32) -> Self {
        Self { iterations, level, reward: RewardKind::Rc, refine: None }
    }
}

/// Instrumentation gathered during one search.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchStats {
    pub simulations: u64,
    /// All adapt calls, at every level.
    pub adapts: u64,
    /// Adapt calls indexed by the level that issued them.
    pub adapts_by_level: Vec<u64>,
    pub bfs_calls: u64,
    pub refines: u64,
    /// Candidate moves evaluated inside refinement.
    pub refine_moves: u64,
    /// Every rollout in order as (sequence, reward), when tracing is on.
    pub trajectory: Option<Vec<(Vec<NodeId>, f64)>>,
}

impl SearchStats {
    pub fn traced() -> Self {
        Self { trajectory: Some(Vec::new()), ..Self::default() }
    }
}

/// Search-local view of one slice placement problem.
pub struct Searcher<'a> {
    pub net: &'a PhysicalNetwork,
    pub slice: &'a SliceRequest,
    pub table: &'a CandidateTable,
    pub router: LinkRouter,
    pub stats: SearchStats,
    initial: MdpState,
    legal: Vec<NodeId>,
}

impl<'a> Searcher<'a> {
    pub fn new(net: &'a PhysicalNetwork, slice: &'a SliceRequest, table: &'a CandidateTable) -> Self {
        Self {
            net,
            slice,
            table,
            router: LinkRouter::new(net),
            stats: SearchStats::default(),
            initial: MdpState::initial(table, net.node_count()),
            legal: Vec::new(),
        }
    }

    pub fn with_stats(mut self, stats: SearchStats) -> Self {
        self.stats = stats;
        self
    }

    /// Counters with the router's BFS tally folded in.
    pub fn finish(mut self) -> SearchStats {
        self.stats.bfs_calls = self.router.bfs_calls;
        self.stats
    }

    /// Scores a complete host assignment after greedy link placement.
    pub fn evaluate<F: Real>(&mut self, kind: RewardKind, seq: Vec<NodeId>) -> Embedding<F> {
        let hosts: Vec<NodeId> = self.table.hosts_of(&seq).into_iter().map(|h| h.expect("complete")).collect();
        match self.router.vlink(self.net, self.slice, &hosts) {
            Some(link_map) => {
                let reward = score(kind, self.net, self.slice, &hosts, &link_map).expect("complete embedding");
                Embedding { seq, hosts, link_map, reward }
            }
            None => Embedding::failure(seq),
        }
    }

    /// One policy-guided rollout from the initial state.
    pub fn simulate<F: Real, R: Rng + ?Sized>(
        &mut self,
        kind: RewardKind,
        policy: &mut Policy<F>,
        rng: &mut R,
    ) -> Embedding<F> {
        self.stats.simulations += 1;
        let mut state = self.initial.clone();
        let mut seq = Vec::with_capacity(self.slice.node_count());
        let mut weights = Vec::new();
        let mut legal = std::mem::take(&mut self.legal);
        let mut dead = false;
        while !state.is_terminal() {
            state.legal_actions_into(self.net, self.slice, self.table, &mut legal);
            if legal.is_empty() {
                dead = true;
                break;
            }
            policy.weights_into(&seq, &legal, self.net.distances(), &mut weights);
            let a = legal[gibbs_sample(&weights, rng)];
            state.apply(a).expect("sampled action is legal");
            seq.push(a);
        }
        self.legal = legal;
        let emb: Embedding<F> = if dead { Embedding::failure(seq) } else { self.evaluate(kind, seq) };
        if let Some(t) = self.stats.trajectory.as_mut() {
            t.push((emb.seq.clone(), emb.reward.as_f64()));
        }
        emb
    }

    /// Moves the policy toward `seq`: the chosen action gains 1 and every
    /// legal action loses its softmax probability under the old weights.
    pub fn adapt<F: Real>(&mut self, policy: &mut Policy<F>, seq: &[NodeId]) -> Result<(), MdpError> {
        self.stats.adapts += 1;
        let mut state = self.initial.clone();
        let mut legal = std::mem::take(&mut self.legal);
        let mut weights = Vec::new();
        let clamp = F::lit(WEIGHT_CLAMP);
        for (k, &a) in seq.iter().enumerate() {
            state.legal_actions_into(self.net, self.slice, self.table, &mut legal);
            let Some(chosen) = legal.iter().position(|&m| m == a) else {
                self.legal = legal;
                return Err(MdpError::IllegalAction { action: a, vnode: state.current().unwrap_or(usize::MAX) });
            };
            let prefix = &seq[..k];
            policy.weights_into(prefix, &legal, self.net.distances(), &mut weights);
            let probs = softmax(&weights);
            let row = policy.row_mut(prefix);
            for (i, &m) in legal.iter().enumerate() {
                let mut w = weights[i] - probs[i];
                if i == chosen {
                    w = w + F::one();
                }
                let w = w.max(-clamp).min(clamp);
                let slot = row.binary_search_by_key(&m, |&(x, _)| x).expect("weight initialised");
                row[slot].1 = w;
            }
            state.apply(a)?;
        }
        self.legal = legal;
        Ok(())
    }

    /// The nested search. `policy` is this level's own copy; children get
    /// clones so their adaptations never leak back.
    pub fn search<F: Real, R: Rng + ?Sized>(
        &mut self,
        cfg: &SearchConfig,
        level: u32,
        policy: &mut Policy<F>,
        rng: &mut R,
    ) -> Embedding<F> {
        if level == 0 {
            return self.simulate(cfg.reward, policy, rng);
        }
        if self.stats.adapts_by_level.len() <= level as usize {
            self.stats.adapts_by_level.resize(level as usize + 1, 0);
        }
        let mut best: Option<Embedding<F>> = None;
        for _ in 0..cfg.iterations {
            let result = if level == 1 {
                // rollouts only fill in deterministic initial weights
                self.search(cfg, 0, policy, rng)
            } else {
                let mut child = policy.clone();
                self.search(cfg, level - 1, &mut child, rng)
            };
            if best.as_ref().is_none_or(|b| b.reward <= result.reward) {
                best = Some(result);
            }
            let incumbent = best.as_mut().expect("incumbent set");
            if let Some(rc) = cfg.refine {
                if level == rc.level && incumbent.reward != F::zero() {
                    let refined = refine(self, cfg.reward, incumbent, &rc);
                    *incumbent = refined;
                }
            }
            let seq = incumbent.seq.clone();
            self.stats.adapts_by_level[level as usize] += 1;
            self.adapt(policy, &seq).expect("incumbent sequence replays");
        }
        best.expect("at least one iteration")
    }
}

/// Runs plain NRPA for one slice and returns the best embedding found.
pub fn nrpa_search<F: Real, R: Rng + ?Sized>(
    net: &PhysicalNetwork,
    slice: &SliceRequest,
    table: &CandidateTable,
    cfg: &SearchConfig,
    policy: &mut Policy<F>,
    rng: &mut R,
    stats: &mut SearchStats,
) -> Embedding<F> {
    let cfg = SearchConfig { refine: None, ..*cfg };
    run(net, slice, table, &cfg, policy, rng, stats)
}

pub(crate) fn run<F: Real, R: Rng + ?Sized>(
    net: &PhysicalNetwork,
    slice: &SliceRequest,
    table: &CandidateTable,
    cfg: &SearchConfig,
    policy: &mut Policy<F>,
    rng: &mut R,
    stats: &mut SearchStats,
) -> Embedding<F> {
    assert!(cfg.iterations >= 1, "N must be at least 1");
    let mut searcher = Searcher::new(net, slice, table).with_stats(std::mem::take(stats));
    let best = searcher.search(cfg, cfg.level, policy, rng);
    *stats = searcher.finish();
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::prune_candidates;
    use crate::net::{VirtualEdge, VirtualNode};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// 1-based edges {1-4, 3-4, 3-5, 3-2, 2-5, 4-2}.
    fn figure_net() -> PhysicalNetwork {
        let edges = [(1, 4), (3, 4), (3, 5), (3, 2), (2, 5), (4, 2)];
        PhysicalNetwork::new(vec![100; 5], edges.iter().map(|&(u, v)| (u - 1, v - 1, 100))).unwrap()
    }

    fn slice(cpu: &[u64], edges: &[(usize, usize, u64)]) -> SliceRequest {
        SliceRequest {
            id: 0,
            t_arrive: 0.0,
            t_depart: 1.0,
            vnodes: cpu.iter().map(|&c| VirtualNode { cpu_demand: c }).collect(),
            vedges: edges.iter().map(|&(a, b, bw)| VirtualEdge { a, b, bw_demand: bw }).collect(),
        }
    }

    #[test]
    fn distance_initialisation_matches_figure() {
        let net = figure_net();
        // vnode 1 on physical 3, vnode 2 on physical 5 (1-based)
        let placement = [0, 0, 1, 0, 2];
        let w = |a: usize| weight_init::<f64>(&placement, a - 1, net.distances());
        assert_eq!(w(4), -1.5);
        assert_eq!(w(2), -1.0);
        assert_eq!(w(1), -2.5);
        assert_eq!(weight_init::<f64>(&[0; 5], 0, net.distances()), 0.2);
        assert_eq!(weight_init::<f32>(&placement, 3, net.distances()), -1.5f32);
    }

    #[test]
    fn softmax_of_log_three() {
        let p = softmax(&[0.0, 3f64.ln()]);
        assert!((p[0] - 0.25).abs() < 1e-12);
        assert!((p[1] - 0.75).abs() < 1e-12);
        let p = softmax(&[2.0f64; 4]);
        assert!(p.iter().all(|&x| (x - 0.25).abs() < 1e-12));
    }

    #[test]
    fn gibbs_shift_invariance() {
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        let w = [0.3, -1.0, 2.0];
        let shifted: Vec<f64> = w.iter().map(|x| x + 7.0).collect();
        for _ in 0..200 {
            assert_eq!(gibbs_sample(&w, &mut a), gibbs_sample(&shifted, &mut b));
        }
    }

    #[test]
    fn gibbs_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = [0.0, 3f64.ln()];
        let hits = (0..10_000).filter(|_| gibbs_sample(&w, &mut rng) == 1).count();
        assert!((hits as f64 / 10_000.0 - 0.75).abs() < 0.02, "{hits}");
        assert_eq!(gibbs_sample(&[5.0], &mut rng), 0);
    }

    #[test]
    fn adapt_with_two_equal_actions() {
        let net = PhysicalNetwork::new(vec![10; 2], [(0, 1, 10)]).unwrap();
        let s = slice(&[1], &[]);
        let table = prune_candidates(&net, &s);
        let mut searcher = Searcher::new(&net, &s, &table);
        let mut policy = Policy::<f64>::new(WeightInit::Zero);
        searcher.adapt(&mut policy, &[1]).unwrap();
        assert_eq!(policy.get(&[], 1), Some(0.5));
        assert_eq!(policy.get(&[], 0), Some(-0.5));
        assert_eq!(searcher.stats.adapts, 1);
    }

    #[test]
    fn adapt_with_forced_moves_is_neutral() {
        let net = PhysicalNetwork::new(vec![10, 1], [(0, 1, 10)]).unwrap();
        let s = slice(&[5], &[]);
        let table = prune_candidates(&net, &s);
        let mut searcher = Searcher::new(&net, &s, &table);
        let mut policy = Policy::<f64>::new(WeightInit::Zero);
        searcher.adapt(&mut policy, &[0]).unwrap();
        assert_eq!(policy.get(&[], 0), Some(0.0));
        assert!(searcher.adapt(&mut policy, &[1]).is_err());
    }

    #[test]
    fn first_vnode_without_host_fails_immediately() {
        let net = PhysicalNetwork::new(vec![3; 3], [(0, 1, 10), (1, 2, 10)]).unwrap();
        let s = slice(&[5, 1], &[(0, 1, 1)]);
        let table = prune_candidates(&net, &s);
        let mut searcher = Searcher::new(&net, &s, &table);
        let mut policy = Policy::<f64>::new(WeightInit::Distance);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let emb = searcher.simulate(RewardKind::Rc, &mut policy, &mut rng);
        assert_eq!(emb.reward, 0.0);
        assert!(emb.seq.is_empty() && emb.link_map.is_empty());
    }

    fn triangle_problem() -> (PhysicalNetwork, SliceRequest) {
        let net = PhysicalNetwork::new(
            vec![20; 6],
            [(0, 1, 30), (1, 2, 30), (2, 3, 30), (3, 4, 30), (4, 5, 30), (5, 0, 30), (0, 3, 30)],
        )
        .unwrap();
        (net, slice(&[5, 5, 5], &[(0, 1, 10), (1, 2, 10), (0, 2, 10)]))
    }

    #[test]
    fn simulation_and_adapt_counts() {
        let (net, s) = triangle_problem();
        let table = prune_candidates(&net, &s);
        for (n, l) in [(3usize, 2u32), (2, 3), (4, 1)] {
            let mut stats = SearchStats::default();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let mut policy = Policy::<f64>::new(WeightInit::Distance);
            let cfg = SearchConfig::nrpa(n, l);
            nrpa_search(&net, &s, &table, &cfg, &mut policy, &mut rng, &mut stats);
            assert_eq!(stats.simulations, (n as u64).pow(l));
            assert_eq!(stats.adapts_by_level[1], (n as u64).pow(l));
            let total: u64 = (1..=l).map(|k| (n as u64).pow(k)).sum();
            assert_eq!(stats.adapts, total);
        }
    }

    #[test]
    fn result_is_max_of_rollouts_and_seeded() {
        let (net, s) = triangle_problem();
        let table = prune_candidates(&net, &s);
        let run_once = |seed| {
            let mut stats = SearchStats::traced();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut policy = Policy::<f64>::new(WeightInit::Zero);
            let best = nrpa_search(&net, &s, &table, &SearchConfig::nrpa(3, 2), &mut policy, &mut rng, &mut stats);
            (best, stats)
        };
        let (best, stats) = run_once(11);
        let leaf_max = stats.trajectory.as_ref().unwrap().iter().map(|t| t.1).fold(0.0, f64::max);
        assert_eq!(best.reward, leaf_max);
        let (again, stats2) = run_once(11);
        assert_eq!(best, again);
        assert_eq!(stats.trajectory, stats2.trajectory);
    }

    #[test]
    fn policy_set_and_get() {
        let mut p = Policy::<f32>::new(WeightInit::Zero);
        assert_eq!(p.get(&[1, 2], 3), None);
        p.set(&[1, 2], 3, 0.5);
        p.set(&[1, 2], 0, -0.5);
        assert_eq!(p.get(&[1, 2], 3), Some(0.5));
        assert_eq!(p.get(&[1, 2], 0), Some(-0.5));
        assert_eq!(p.state_count(), 1);
    }
}
