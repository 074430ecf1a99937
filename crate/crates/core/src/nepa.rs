//! Neighbourhood refinement of incumbent embeddings and the refined nested
//! search built on it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::mdp::{score, CandidateTable, Embedding, RewardKind};
use crate::nrpa::{self, weight_from_hosts, Policy, SearchConfig, SearchStats, Searcher};
use crate::net::{EdgeId, NodeId, PhysicalNetwork, SliceRequest, VEdgeId, VNodeId};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefineConfig {
    /// Maximum number of candidate hosts tried per round (K).
    pub k: usize,
    /// Maximum number of rounds (X); `None` means one per virtual node.
    pub x: Option<usize>,
    /// Search level at which incumbents are refined (l').
    pub level: u32,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self { k: 16, x: None, level: 2 }
    }
}

/// Bandwidth-weighted path length of the links around `vnode`, per link.
/// `None` for isolated virtual nodes.
pub fn improvement_score(slice: &SliceRequest, link_map: &[Vec<EdgeId>], vnode: VNodeId) -> Option<f64> {
    let mut total = 0u64;
    let mut degree = 0u64;
    for (e, ve) in slice.vedges.iter().enumerate() {
        if ve.touches(vnode) {
            total += ve.bw_demand * link_map[e].len() as u64;
            degree += 1;
        }
    }
    (degree > 0).then(|| total as f64 / degree as f64)
}

/// Virtual node with the highest improvement score, lowest id on ties.
pub fn most_promising(slice: &SliceRequest, link_map: &[Vec<EdgeId>]) -> Option<VNodeId> {
    let mut best: Option<(VNodeId, f64)> = None;
    for v in 0..slice.node_count() {
        if let Some(s) = improvement_score(slice, link_map, v) {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((v, s));
            }
        }
    }
    best.map(|(v, _)| v)
}

/// Up to `k` new hosts for `vnode`, best distance score first.
///
/// A host qualifies when it carries no other virtual node of the slice, is
/// not the current host, has the residual CPU and, when a table is given,
/// is admissible for `vnode`.
pub fn candidate_hosts(
    net: &PhysicalNetwork,
    slice: &SliceRequest,
    table: Option<&CandidateTable>,
    hosts: &[NodeId],
    vnode: VNodeId,
    k: usize,
) -> Vec<NodeId> {
    let others: Vec<NodeId> = hosts.iter().enumerate().filter(|&(v, _)| v != vnode).map(|(_, &h)| h).collect();
    let demand = slice.vnodes[vnode].cpu_demand;
    let mut ranked: Vec<(f64, NodeId)> = (0..net.node_count())
        .filter(|&j| j != hosts[vnode] && !others.contains(&j))
        .filter(|&j| net.residual_cpu(j) >= demand)
        .filter(|&j| table.is_none_or(|t| t.admits(vnode, j)))
        .map(|j| (weight_from_hosts::<f64>(&others, j, net.distances()), j))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    ranked.into_iter().take(k).map(|(_, j)| j).collect()
}

/// Local search around a successful embedding: repeatedly move the most
/// promising virtual node to its best alternative host. The result never
/// scores below the input.
pub fn refine<F: Real>(
    searcher: &mut Searcher<'_>,
    kind: RewardKind,
    emb: &Embedding<F>,
    cfg: &RefineConfig,
) -> Embedding<F> {
    searcher.stats.refines += 1;
    let (net, slice, table) = (searcher.net, searcher.slice, searcher.table);
    let incidence = slice.incidence();
    let mut cur = emb.clone();
    for _ in 0..cfg.x.unwrap_or(slice.node_count()) {
        let Some(v) = most_promising(slice, &cur.link_map) else { break };
        let candidates = candidate_hosts(net, slice, Some(table), &cur.hosts, v, cfg.k);
        let mut adjacent: Vec<VEdgeId> = incidence[v].clone();
        adjacent.sort_by_key(|&e| (std::cmp::Reverse(slice.vedges[e].bw_demand), e));

        let router = &mut searcher.router;
        router.reserve_all(slice, &cur.link_map);
        for &e in &adjacent {
            router.unreserve(&cur.link_map[e], slice.vedges[e].bw_demand);
        }
        let mut best: Option<(NodeId, Vec<Vec<EdgeId>>, F)> = None;
        let mut hosts = cur.hosts.clone();
        for &c in &candidates {
            searcher.stats.refine_moves += 1;
            hosts[v] = c;
            let Some(placed) = router.route(net, slice, &hosts, &adjacent) else { continue };
            let mut link_map = cur.link_map.clone();
            for (e, path) in placed {
                router.unreserve(&path, slice.vedges[e].bw_demand);
                link_map[e] = path;
            }
            let r: F = score(kind, net, slice, &hosts, &link_map).expect("complete embedding");
            let better = match &best {
                None => r > cur.reward,
                Some((bc, _, br)) => r > *br || (r == *br && c < *bc),
            };
            if better {
                best = Some((c, link_map, r));
            }
        }
        router.clear();

        let Some((c, link_map, r)) = best else { break };
        cur.hosts[v] = c;
        cur.link_map = link_map;
        cur.reward = r;
        cur.seq = table.seq_of(&cur.hosts);
    }
    cur
}

/// Refines `emb` outside of a search.
pub fn refine_embedding<F: Real>(
    net: &PhysicalNetwork,
    slice: &SliceRequest,
    table: &CandidateTable,
    kind: RewardKind,
    emb: &Embedding<F>,
    cfg: &RefineConfig,
) -> (Embedding<F>, SearchStats) {
    let mut searcher = Searcher::new(net, slice, table);
    let out = refine(&mut searcher, kind, emb, cfg);
    (out, searcher.finish())
}

/// Nested search that refines the incumbent at level `refine.level`.
pub fn nepa_search<F: Real, R: Rng + ?Sized>(
    net: &PhysicalNetwork,
    slice: &SliceRequest,
    table: &CandidateTable,
    cfg: &SearchConfig,
    refine: RefineConfig,
    policy: &mut Policy<F>,
    rng: &mut R,
    stats: &mut SearchStats,
) -> Embedding<F> {
    let cfg = SearchConfig { refine: Some(refine), ..*cfg };
    nrpa::run(net, slice, table, &cfg, policy, rng, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::vlink;
    use crate::mdp::prune_candidates;
    use crate::net::{VirtualEdge, VirtualNode};
    use crate::nrpa::{nrpa_search, WeightInit};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn figure() -> (PhysicalNetwork, SliceRequest) {
        let edges = [(1, 4), (3, 4), (3, 5), (3, 2), (2, 5), (4, 2)];
        let net = PhysicalNetwork::new(vec![100; 5], edges.iter().map(|&(u, v)| (u - 1, v - 1, 100))).unwrap();
        let slice = SliceRequest {
            id: 0,
            t_arrive: 0.0,
            t_depart: 1.0,
            vnodes: vec![VirtualNode { cpu_demand: 1 }; 3],
            vedges: vec![
                VirtualEdge { a: 0, b: 1, bw_demand: 5 },
                VirtualEdge { a: 1, b: 2, bw_demand: 10 },
                VirtualEdge { a: 0, b: 2, bw_demand: 10 },
            ],
        };
        (net, slice)
    }

    fn embedding(net: &PhysicalNetwork, slice: &SliceRequest, table: &CandidateTable, hosts: &[NodeId]) -> Embedding<f64> {
        let link_map = vlink(net, slice, hosts).unwrap();
        let reward = score(RewardKind::Rc, net, slice, hosts, &link_map).unwrap();
        Embedding { seq: table.seq_of(hosts), hosts: hosts.to_vec(), link_map, reward }
    }

    #[test]
    fn figure_scores_candidates_and_move() {
        let (net, slice) = figure();
        let table = prune_candidates(&net, &slice);
        // 1-based hosts 3, 5, 1
        let emb = embedding(&net, &slice, &table, &[2, 4, 0]);
        let scores: Vec<f64> = (0..3).map(|v| improvement_score(&slice, &emb.link_map, v).unwrap()).collect();
        assert_eq!(scores, vec![12.5, 17.5, 25.0]);
        assert_eq!(most_promising(&slice, &emb.link_map), Some(2));

        let mut cands = candidate_hosts(&net, &slice, Some(&table), &emb.hosts, 2, 2);
        cands.sort();
        assert_eq!(cands, vec![1, 3]);

        let cfg = RefineConfig { k: 2, x: Some(1), level: 0 };
        let (out, stats) = refine_embedding(&net, &slice, &table, RewardKind::Rc, &emb, &cfg);
        assert_eq!(out.hosts, vec![2, 4, 1]);
        assert_eq!(out.bandwidth_used(&slice), 25);
        assert_eq!(out.reward, 1.0);
        assert_eq!(stats.refine_moves, 2);
    }

    #[test]
    fn optimal_embedding_is_left_alone() {
        let (net, slice) = figure();
        let table = prune_candidates(&net, &slice);
        let emb = embedding(&net, &slice, &table, &[2, 4, 1]);
        assert_eq!(emb.reward, 1.0);
        let (out, _) = refine_embedding(&net, &slice, &table, RewardKind::Rc, &emb, &RefineConfig::default());
        assert_eq!(out, emb);
    }

    #[test]
    fn candidate_filters() {
        let (net, slice) = figure();
        let table = prune_candidates(&net, &slice);
        assert_eq!(candidate_hosts(&net, &slice, Some(&table), &[2, 4, 0], 2, 99).len(), 2);
        let mut tight = net.clone();
        let busy = SliceRequest {
            id: 7,
            t_arrive: 0.0,
            t_depart: 1.0,
            vnodes: vec![VirtualNode { cpu_demand: 100 }],
            vedges: vec![],
        };
        tight.commit_embedding(&busy, &[1], &[]).unwrap();
        assert_eq!(candidate_hosts(&tight, &slice, None, &[2, 4, 0], 2, 99), vec![3]);
    }

    #[test]
    fn scaling_demands_scales_scores() {
        let (net, slice) = figure();
        let table = prune_candidates(&net, &slice);
        let emb = embedding(&net, &slice, &table, &[2, 4, 0]);
        let mut doubled = slice.clone();
        doubled.vedges.iter_mut().for_each(|e| e.bw_demand *= 2);
        for v in 0..3 {
            let a = improvement_score(&slice, &emb.link_map, v).unwrap();
            assert_eq!(improvement_score(&doubled, &emb.link_map, v).unwrap(), 2.0 * a);
        }
        let isolated = SliceRequest { vedges: vec![], ..slice };
        assert_eq!(improvement_score(&isolated, &[], 0), None);
    }

    fn ring_problem() -> (PhysicalNetwork, SliceRequest) {
        let n = 12;
        let mut edges: Vec<(usize, usize, u64)> = (0..n).map(|i| (i, (i + 1) % n, 40)).collect();
        edges.extend([(0, 6, 40), (3, 9, 40)]);
        let net = PhysicalNetwork::new(vec![30; n], edges).unwrap();
        let slice = SliceRequest {
            id: 0,
            t_arrive: 0.0,
            t_depart: 1.0,
            vnodes: vec![VirtualNode { cpu_demand: 10 }; 4],
            vedges: vec![
                VirtualEdge { a: 0, b: 1, bw_demand: 10 },
                VirtualEdge { a: 1, b: 2, bw_demand: 15 },
                VirtualEdge { a: 2, b: 3, bw_demand: 5 },
                VirtualEdge { a: 3, b: 0, bw_demand: 20 },
            ],
        };
        (net, slice)
    }

    #[test]
    fn unreachable_refine_level_matches_nrpa() {
        let (net, slice) = ring_problem();
        let table = prune_candidates(&net, &slice);
        let cfg = SearchConfig::nrpa(3, 2);
        let mut a_stats = SearchStats::traced();
        let mut b_stats = SearchStats::traced();
        let a = nrpa_search(
            &net,
            &slice,
            &table,
            &cfg,
            &mut Policy::<f64>::new(WeightInit::Distance),
            &mut ChaCha8Rng::seed_from_u64(5),
            &mut a_stats,
        );
        let b = nepa_search(
            &net,
            &slice,
            &table,
            &cfg,
            RefineConfig { level: 3, ..RefineConfig::default() },
            &mut Policy::<f64>::new(WeightInit::Distance),
            &mut ChaCha8Rng::seed_from_u64(5),
            &mut b_stats,
        );
        assert_eq!(a, b);
        assert_eq!(a_stats, b_stats);
    }

    #[test]
    fn refinement_keeps_rollout_count_and_bfs_bound() {
        let (net, slice) = ring_problem();
        let table = prune_candidates(&net, &slice);
        let (n, l, lp, k) = (3u64, 3u32, 2u32, 4usize);
        let mut stats = SearchStats::default();
        let best = nepa_search(
            &net,
            &slice,
            &table,
            &SearchConfig::nrpa(n as usize, l),
            RefineConfig { k, x: None, level: lp },
            &mut Policy::<f64>::new(WeightInit::Distance),
            &mut ChaCha8Rng::seed_from_u64(2),
            &mut stats,
        );
        assert!(best.reward > 0.0);
        assert_eq!(stats.simulations, n.pow(l));
        assert!(stats.refines <= n.pow(l - lp + 1));
        let e = slice.edge_count() as u64;
        let x = slice.node_count() as u64;
        assert!(stats.refine_moves <= stats.refines * k as u64 * x);
        assert!(stats.bfs_calls <= n.pow(l) * e + n.pow(l - lp + 1) * k as u64 * x * e);
    }
}
