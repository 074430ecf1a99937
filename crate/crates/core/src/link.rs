//! Greedy virtual-link placement on capacity-filtered shortest paths.

use std::collections::VecDeque;

use crate::net::{EdgeId, NodeId, PhysicalNetwork, SliceRequest, VEdgeId};

/// Physical path of every virtual edge, indexed by virtual edge id.
pub type LinkMap = Vec<Vec<EdgeId>>;

/// Virtual edges by descending bandwidth demand, ties by ascending id.
pub fn vlink_order(slice: &SliceRequest) -> Vec<VEdgeId> {
    let mut order: Vec<VEdgeId> = (0..slice.edge_count()).collect();
    order.sort_by_key(|&e| (std::cmp::Reverse(slice.vedges[e].bw_demand), e));
    order
}

/// Minimum-hop path from `src` to `dst` using only edges whose residual
/// bandwidth is at least `min_bw`. Neighbours are expanded lowest id first.
pub fn bfs_capacity_path(net: &PhysicalNetwork, src: NodeId, dst: NodeId, min_bw: u64) -> Option<Vec<EdgeId>> {
    LinkRouter::new(net).shortest_path(net, src, dst, min_bw)
}

/// Places every virtual link of `slice` given complete `hosts`, without
/// touching the network. `None` when some link cannot be routed.
pub fn vlink(net: &PhysicalNetwork, slice: &SliceRequest, hosts: &[NodeId]) -> Option<LinkMap> {
    LinkRouter::new(net).vlink(net, slice, hosts)
}

/// Reusable routing scratch space.
///
/// Bandwidth staged by a search lives in `reserved` on top of the network's
/// committed occupation, so rollouts never mutate the shared substrate.
#[derive(Debug, Clone)]
pub struct LinkRouter {
    reserved: Vec<u64>,
    stamp: Vec<u32>,
    epoch: u32,
    parent: Vec<(NodeId, EdgeId)>,
    queue: VecDeque<NodeId>,
    /// Number of shortest-path searches run so far.
    pub bfs_calls: u64,
}

impl LinkRouter {
    pub fn new(net: &PhysicalNetwork) -> Self {
        let n = net.node_count();
        Self {
            reserved: vec![0; net.edge_count()],
            stamp: vec![0; n],
            epoch: 0,
            parent: vec![(usize::MAX, usize::MAX); n],
            queue: VecDeque::with_capacity(n),
            bfs_calls: 0,
        }
    }

    #[inline]
    pub fn residual(&self, net: &PhysicalNetwork, edge: EdgeId) -> u64 {
        net.residual_bw(edge) - self.reserved[edge]
    }

    pub fn reserved(&self) -> &[u64] {
        &self.reserved
    }

    pub fn is_clear(&self) -> bool {
        self.reserved.iter().all(|&r| r == 0)
    }

    pub fn clear(&mut self) {
        self.reserved.fill(0);
    }

    pub fn reserve(&mut self, path: &[EdgeId], amount: u64) {
        for &e in path {
            self.reserved[e] += amount;
        }
    }

    pub fn unreserve(&mut self, path: &[EdgeId], amount: u64) {
        for &e in path {
            self.reserved[e] -= amount;
        }
    }

    /// Stages every path of a complete link map.
    pub fn reserve_all(&mut self, slice: &SliceRequest, link_map: &[Vec<EdgeId>]) {
        for (e, path) in link_map.iter().enumerate() {
            self.reserve(path, slice.vedges[e].bw_demand);
        }
    }

    pub fn shortest_path(&mut self, net: &PhysicalNetwork, src: NodeId, dst: NodeId, min_bw: u64) -> Option<Vec<EdgeId>> {
        debug_assert_ne!(src, dst, "virtual link endpoints share a host");
        self.bfs_calls += 1;
        if src == dst {
            return None;
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        self.queue.clear();
        self.stamp[src] = self.epoch;
        self.queue.push_back(src);
        while let Some(u) = self.queue.pop_front() {
            for &(w, e) in net.neighbors(u) {
                if self.stamp[w] == self.epoch || self.residual(net, e) < min_bw {
                    continue;
                }
                self.stamp[w] = self.epoch;
                self.parent[w] = (u, e);
                if w == dst {
                    let mut path = Vec::new();
                    let mut cur = dst;
                    while cur != src {
                        let (p, pe) = self.parent[cur];
                        path.push(pe);
                        cur = p;
                    }
                    path.reverse();
                    return Some(path);
                }
                self.queue.push_back(w);
            }
        }
        None
    }

    /// Routes the given virtual edges in order, reserving each path before
    /// the next search. On failure every reservation made by this call is
    /// undone and `None` is returned.
    pub fn route(
        &mut self,
        net: &PhysicalNetwork,
        slice: &SliceRequest,
        hosts: &[NodeId],
        vedges: &[VEdgeId],
    ) -> Option<Vec<(VEdgeId, Vec<EdgeId>)>> {
        let mut placed: Vec<(VEdgeId, Vec<EdgeId>)> = Vec::with_capacity(vedges.len());
        for &ve in vedges {
            let edge = slice.vedges[ve];
            match self.shortest_path(net, hosts[edge.a], hosts[edge.b], edge.bw_demand) {
                Some(path) => {
                    self.reserve(&path, edge.bw_demand);
                    placed.push((ve, path));
                }
                None => {
                    for (done, path) in &placed {
                        self.unreserve(path, slice.vedges[*done].bw_demand);
                    }
                    return None;
                }
            }
        }
        Some(placed)
    }

    /// Full link placement in descending-demand order. Leaves the router's
    /// reservations exactly as it found them.
    pub fn vlink(&mut self, net: &PhysicalNetwork, slice: &SliceRequest, hosts: &[NodeId]) -> Option<LinkMap> {
        let order = vlink_order(slice);
        let placed = self.route(net, slice, hosts, &order)?;
        let mut map = vec![Vec::new(); slice.edge_count()];
        for (ve, path) in placed {
            self.unreserve(&path, slice.vedges[ve].bw_demand);
            map[ve] = path;
        }
        Some(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{VirtualEdge, VirtualNode};

    fn one_based(n: usize, edges: &[(usize, usize)], bw: u64) -> PhysicalNetwork {
        PhysicalNetwork::new(vec![100; n], edges.iter().map(|&(u, v)| (u - 1, v - 1, bw))).unwrap()
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

    fn endpoints(net: &PhysicalNetwork, path: &[EdgeId]) -> Vec<(usize, usize)> {
        path.iter().map(|&e| (net.edge(e).u + 1, net.edge(e).v + 1)).collect()
    }

    #[test]
    fn refine_figure_initial_paths() {
        let net = one_based(5, &[(1, 4), (3, 4), (3, 5), (3, 2), (2, 5), (4, 2)], 100);
        // vedges (1,2) bw 5, (2,3) bw 10, (1,3) bw 10; hosts 3, 5, 1 (1-based)
        let s = slice(&[1, 1, 1], &[(0, 1, 5), (1, 2, 10), (0, 2, 10)]);
        assert_eq!(vlink_order(&s), vec![1, 2, 0]);
        let map = vlink(&net, &s, &[2, 4, 0]).unwrap();
        assert_eq!(endpoints(&net, &map[0]), vec![(3, 5)]);
        // 5 -> 2 -> 4 -> 1, stored with u < v
        assert_eq!(endpoints(&net, &map[1]), vec![(2, 5), (2, 4), (1, 4)]);
        assert_eq!(endpoints(&net, &map[2]), vec![(3, 4), (1, 4)]);
    }

    #[test]
    fn adjacent_hosts_use_one_hop() {
        let net = one_based(3, &[(1, 2), (2, 3)], 10);
        assert_eq!(bfs_capacity_path(&net, 0, 1, 10), Some(vec![0]));
        assert_eq!(bfs_capacity_path(&net, 0, 1, 11), None);
    }

    #[test]
    fn failure_when_demand_exceeds_incident_capacity() {
        let net = one_based(3, &[(1, 2), (2, 3), (1, 3)], 10);
        let s = slice(&[1, 1], &[(0, 1, 11)]);
        let mut router = LinkRouter::new(&net);
        assert_eq!(router.vlink(&net, &s, &[0, 1]), None);
        assert!(router.is_clear());
    }

    #[test]
    fn failed_routing_rolls_back() {
        // both links need the single edge 1-2 with capacity 15
        let net = one_based(2, &[(1, 2)], 15);
        let s = slice(&[1, 1, 1], &[(0, 1, 10), (1, 0, 10)]);
        let mut router = LinkRouter::new(&net);
        assert!(router.route(&net, &s, &[0, 1], &[0, 1]).is_none());
        assert!(router.is_clear());
        assert_eq!(router.bfs_calls, 2);
    }

    #[test]
    fn reservations_push_later_links_around() {
        // square 1-2-3-4-1, capacity 10; two demands of 6 between 1 and 2
        let net = one_based(4, &[(1, 2), (2, 3), (3, 4), (4, 1)], 10);
        let s = slice(&[1, 1], &[(0, 1, 6)]);
        let mut router = LinkRouter::new(&net);
        let first = router.route(&net, &s, &[0, 1], &[0]).unwrap();
        assert_eq!(first[0].1.len(), 1);
        let second = router.route(&net, &s, &[0, 1], &[0]).unwrap();
        assert_eq!(second[0].1.len(), 3);
    }

    #[test]
    fn grid_corner_to_corner_is_four_hops() {
        let mut edges = Vec::new();
        for r in 0..3 {
            for c in 0..3 {
                let id = r * 3 + c;
                if c < 2 {
                    edges.push((id, id + 1, 5));
                }
                if r < 2 {
                    edges.push((id, id + 3, 5));
                }
            }
        }
        let net = PhysicalNetwork::new(vec![1; 9], edges).unwrap();
        let path = bfs_capacity_path(&net, 0, 8, 5).unwrap();
        assert_eq!(path.len(), 4);
    }
}
