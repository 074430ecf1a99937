//! Upper-confidence tree search over the node-placement MDP, budgeted by
//! virtual-link routing attempts.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::link::LinkRouter;
use crate::mdp::{score, CandidateTable, Embedding, MdpState, RewardKind};
use crate::net::{NodeId, PhysicalNetwork, SliceRequest};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UctConfig {
    /// Routing attempts allowed per slice.
    pub budget: u64,
    pub exploration: f64,
    pub reward: RewardKind,
}

impl Default for UctConfig {
    fn default() -> Self {
        Self { budget: 445, exploration: std::f64::consts::SQRT_2, reward: RewardKind::Rc }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct UctStats {
    pub iterations: u64,
    /// Virtual-link routing attempts, i.e. shortest-path searches.
    pub routing_attempts: u64,
    pub root_visits: u64,
    pub root_mean: f64,
    /// Sum of the rewards of every playout.
    pub reward_sum: f64,
    /// Tree nodes including the root.
    pub tree_size: usize,
}

#[derive(Debug, Clone)]
struct Node<F> {
    action: NodeId,
    visits: u64,
    total: F,
    children: Vec<usize>,
    untried: Vec<NodeId>,
    /// Reward of a complete placement, cached once routed.
    leaf: Option<F>,
}

/// Runs UCT for one slice and returns the best terminal embedding seen.
pub fn uct_search<F: Real, R: Rng + ?Sized>(
    net: &PhysicalNetwork,
    slice: &SliceRequest,
    table: &CandidateTable,
    cfg: &UctConfig,
    rng: &mut R,
) -> (Embedding<F>, UctStats) {
    assert!(cfg.budget >= 1, "budget must be positive");
    let mut router = LinkRouter::new(net);
    let mut stats = UctStats::default();
    let initial = MdpState::initial(table, net.node_count());
    let c = F::lit(cfg.exploration);
    let mut legal = Vec::new();
    initial.legal_actions_into(net, slice, table, &mut legal);
    let mut tree = vec![Node { action: usize::MAX, visits: 0, total: F::zero(), children: vec![], untried: legal.clone(), leaf: None }];
    let mut best = Embedding::<F>::failure(Vec::new());
    let mut spent = 0u64;

    while spent < cfg.budget {
        stats.iterations += 1;
        let mut state = initial.clone();
        let mut seq = Vec::with_capacity(slice.node_count());
        let mut path = vec![0usize];
        let mut cur = 0usize;

        // selection
        while tree[cur].untried.is_empty() && !tree[cur].children.is_empty() {
            let ln_parent = F::lit(tree[cur].visits as f64).ln();
            let mut pick = tree[cur].children[0];
            let mut pick_value = F::neg_infinity();
            for &ch in &tree[cur].children {
                let n = F::lit(tree[ch].visits as f64);
                let value = tree[ch].total / n + c * (ln_parent / n).sqrt();
                if value > pick_value {
                    pick = ch;
                    pick_value = value;
                }
            }
            cur = pick;
            state.apply(tree[cur].action).expect("tree action is legal");
            seq.push(tree[cur].action);
            path.push(cur);
        }

        // expansion
        if !tree[cur].untried.is_empty() {
            let i = rng.random_range(0..tree[cur].untried.len());
            let action = tree[cur].untried.swap_remove(i);
            state.apply(action).expect("untried action is legal");
            seq.push(action);
            state.legal_actions_into(net, slice, table, &mut legal);
            let id = tree.len();
            tree.push(Node { action, visits: 0, total: F::zero(), children: vec![], untried: legal.clone(), leaf: None });
            tree[cur].children.push(id);
            cur = id;
            path.push(cur);
        }

        // playout
        let before = router.bfs_calls;
        let reward = if let Some(r) = tree[cur].leaf {
            r
        } else {
            let mut dead = false;
            while !state.is_terminal() {
                state.legal_actions_into(net, slice, table, &mut legal);
                if legal.is_empty() {
                    dead = true;
                    break;
                }
                let a = legal[rng.random_range(0..legal.len())];
                state.apply(a).expect("sampled action is legal");
                seq.push(a);
            }
            if dead {
                F::zero()
            } else {
                let hosts: Vec<NodeId> = table.hosts_of(&seq).into_iter().map(|h| h.expect("complete")).collect();
                let r = match router.vlink(net, slice, &hosts) {
                    Some(link_map) => {
                        let r = score(cfg.reward, net, slice, &hosts, &link_map).expect("complete embedding");
                        if r > best.reward {
                            best = Embedding { seq: seq.clone(), hosts, link_map, reward: r };
                        }
                        r
                    }
                    None => F::zero(),
                };
                if tree[cur].untried.is_empty() && tree[cur].children.is_empty() && seq.len() == slice.node_count() {
                    tree[cur].leaf = Some(r);
                }
                r
            }
        };
        let attempts = router.bfs_calls - before;
        stats.routing_attempts += attempts;
        // a cached or dead playout still costs one unit so the loop ends
        spent += attempts.max(1);
        stats.reward_sum += reward.as_f64();

        for &n in &path {
            tree[n].visits += 1;
            tree[n].total = tree[n].total + reward;
        }
    }

    stats.tree_size = tree.len();
    stats.root_visits = tree[0].visits;
    stats.root_mean = (tree[0].total / F::lit(tree[0].visits as f64)).as_f64();
    (best, stats)
}
