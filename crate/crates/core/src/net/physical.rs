use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{EdgeId, NetError, NodeId, SliceId, SliceRequest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhysicalNode {
    pub cpu_capacity: u64,
    pub cpu_occupied: u64,
}

impl PhysicalNode {
    pub fn residual(&self) -> u64 {
        self.cpu_capacity - self.cpu_occupied
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhysicalEdge {
    pub u: NodeId,
    pub v: NodeId,
    pub bw_capacity: u64,
    pub bw_occupied: u64,
}

impl PhysicalEdge {
    pub fn residual(&self) -> u64 {
        self.bw_capacity - self.bw_occupied
    }

    /// The endpoint opposite to `node`.
    pub fn other(&self, node: NodeId) -> NodeId {
        if self.u == node {
            self.v
        } else {
            self.u
        }
    }

    pub fn touches(&self, node: NodeId) -> bool {
        self.u == node || self.v == node
    }
}

/// All-pairs hop distances, ignoring capacities.
///
/// Unreachable pairs hold the sentinel `n` (number of nodes), which is larger
/// than any real hop count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    hops: Vec<u32>,
}

impl DistanceMatrix {
    pub fn from_adjacency(adjacency: &[Vec<(NodeId, EdgeId)>]) -> Self {
        let n = adjacency.len();
        let mut hops = vec![n as u32; n * n];
        let mut queue = VecDeque::with_capacity(n);
        for src in 0..n {
            let row = &mut hops[src * n..(src + 1) * n];
            row[src] = 0;
            queue.clear();
            queue.push_back(src);
            while let Some(u) = queue.pop_front() {
                let du = row[u];
                for &(w, _) in &adjacency[u] {
                    if row[w] == n as u32 && w != src {
                        row[w] = du + 1;
                        queue.push_back(w);
                    }
                }
            }
        }
        Self { n, hops }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: NodeId, j: NodeId) -> u32 {
        self.hops[i * self.n + j]
    }

    /// Sentinel used for unreachable pairs.
    pub fn unreachable(&self) -> u32 {
        self.n as u32
    }

    pub fn row(&self, i: NodeId) -> &[u32] {
        &self.hops[i * self.n..(i + 1) * self.n]
    }
}

/// Aggregated resource consumption of one committed slice.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SliceUsage {
    pub cpu: BTreeMap<NodeId, u64>,
    pub bw: BTreeMap<EdgeId, u64>,
}

impl SliceUsage {
    pub fn from_embedding(slice: &SliceRequest, hosts: &[NodeId], paths: &[Vec<EdgeId>]) -> Self {
        let mut usage = SliceUsage::default();
        for (v, &host) in hosts.iter().enumerate() {
            *usage.cpu.entry(host).or_default() += slice.vnodes[v].cpu_demand;
        }
        for (e, path) in paths.iter().enumerate() {
            let demand = slice.vedges[e].bw_demand;
            for &edge in path {
                *usage.bw.entry(edge).or_default() += demand;
            }
        }
        usage
    }
}

/// The substrate network: an undirected simple graph with CPU and bandwidth
/// capacities, the amounts currently occupied by live slices, and a
/// precomputed hop-distance matrix.
#[derive(Debug, Clone)]
pub struct PhysicalNetwork {
    nodes: Vec<PhysicalNode>,
    edges: Vec<PhysicalEdge>,
    adjacency: Vec<Vec<(NodeId, EdgeId)>>,
    distances: DistanceMatrix,
    live: HashMap<SliceId, SliceUsage>,
}

impl PhysicalNetwork {
    /// Builds a network from node CPU capacities and `(u, v, bw)` edges.
    ///
    /// Duplicate edges are merged by summing capacity. Edges with zero
    /// bandwidth are dropped, since a zero-capacity link does not exist.
    pub fn new(
        cpu_capacities: Vec<u64>,
        edges: impl IntoIterator<Item = (NodeId, NodeId, u64)>,
    ) -> Result<Self, NetError> {
        let n = cpu_capacities.len();
        let mut merged: BTreeMap<(NodeId, NodeId), u64> = BTreeMap::new();
        for (u, v, bw) in edges {
            if u >= n || v >= n {
                return Err(NetError::UnknownNode(u, v));
            }
            if u == v {
                return Err(NetError::SelfLoop(u));
            }
            let key = (u.min(v), u.max(v));
            if let Some(existing) = merged.get_mut(&key) {
                log::warn!("duplicate edge {key:?}: merging capacities {existing} + {bw}");
                *existing += bw;
            } else {
                merged.insert(key, bw);
            }
        }
        let edges: Vec<PhysicalEdge> = merged
            .into_iter()
            .filter(|&(_, bw)| bw > 0)
            .map(|((u, v), bw)| PhysicalEdge { u, v, bw_capacity: bw, bw_occupied: 0 })
            .collect();
        let nodes = cpu_capacities
            .into_iter()
            .map(|cpu| PhysicalNode { cpu_capacity: cpu, cpu_occupied: 0 })
            .collect();
        Ok(Self::assemble(nodes, edges))
    }

    fn assemble(nodes: Vec<PhysicalNode>, edges: Vec<PhysicalEdge>) -> Self {
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (id, e) in edges.iter().enumerate() {
            adjacency[e.u].push((e.v, id));
            adjacency[e.v].push((e.u, id));
        }
        // lowest neighbour first: BFS tie-breaking depends on it
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let distances = DistanceMatrix::from_adjacency(&adjacency);
        Self { nodes, edges, adjacency, distances, live: HashMap::new() }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[PhysicalNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[PhysicalEdge] {
        &self.edges
    }

    pub fn node(&self, id: NodeId) -> &PhysicalNode {
        &self.nodes[id]
    }

    pub fn edge(&self, id: EdgeId) -> &PhysicalEdge {
        &self.edges[id]
    }

    /// Neighbours of `node` with the connecting edge, sorted by neighbour id.
    pub fn neighbors(&self, node: NodeId) -> &[(NodeId, EdgeId)] {
        &self.adjacency[node]
    }

    pub fn adjacency(&self) -> &[Vec<(NodeId, EdgeId)>] {
        &self.adjacency
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node].len()
    }

    pub fn edge_between(&self, u: NodeId, v: NodeId) -> Option<EdgeId> {
        self.adjacency[u].iter().find(|&&(w, _)| w == v).map(|&(_, e)| e)
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.distances
    }

    #[inline]
    pub fn distance(&self, i: NodeId, j: NodeId) -> u32 {
        self.distances.get(i, j)
    }

    #[inline]
    pub fn residual_cpu(&self, node: NodeId) -> u64 {
        self.nodes[node].residual()
    }

    #[inline]
    pub fn residual_bw(&self, edge: EdgeId) -> u64 {
        self.edges[edge].residual()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        n == 0 || (0..n).all(|j| self.distances.get(0, j) < n as u32)
    }

    /// Same topology and capacities with nothing occupied.
    pub fn pristine(&self) -> Self {
        let nodes = self.nodes.iter().map(|n| PhysicalNode { cpu_occupied: 0, ..*n }).collect();
        let edges = self.edges.iter().map(|e| PhysicalEdge { bw_occupied: 0, ..*e }).collect();
        Self {
            nodes,
            edges,
            adjacency: self.adjacency.clone(),
            distances: self.distances.clone(),
            live: HashMap::new(),
        }
    }

    /// Reserves the resources of an embedding and remembers them for
    /// [`release_embedding`](Self::release_embedding).
    ///
    /// `hosts[v]` is the physical host of virtual node `v`; `paths[e]` the
    /// physical edges carrying virtual edge `e`. Nothing is modified when any
    /// residual would become negative.
    pub fn commit_embedding(
        &mut self,
        slice: &SliceRequest,
        hosts: &[NodeId],
        paths: &[Vec<EdgeId>],
    ) -> Result<(), NetError> {
        if self.live.contains_key(&slice.id) {
            return Err(NetError::DuplicateSlice(slice.id));
        }
        if hosts.len() != slice.vnodes.len() || paths.len() != slice.vedges.len() {
            return Err(NetError::InfeasibleCommit {
                slice: slice.id,
                reason: "embedding does not cover every virtual node and edge".into(),
            });
        }
        if let Some(&bad) = hosts.iter().find(|&&h| h >= self.node_count()) {
            return Err(NetError::InfeasibleCommit {
                slice: slice.id,
                reason: format!("host {bad} out of range"),
            });
        }
        if let Some(&bad) = paths.iter().flatten().find(|&&e| e >= self.edge_count()) {
            return Err(NetError::InfeasibleCommit {
                slice: slice.id,
                reason: format!("edge {bad} out of range"),
            });
        }
        let usage = SliceUsage::from_embedding(slice, hosts, paths);
        for (&node, &amount) in &usage.cpu {
            if amount > self.nodes[node].residual() {
                return Err(NetError::InfeasibleCommit {
                    slice: slice.id,
                    reason: format!("node {node} needs {amount} cpu, {} left", self.nodes[node].residual()),
                });
            }
        }
        for (&edge, &amount) in &usage.bw {
            if amount > self.edges[edge].residual() {
                return Err(NetError::InfeasibleCommit {
                    slice: slice.id,
                    reason: format!("edge {edge} needs {amount} bw, {} left", self.edges[edge].residual()),
                });
            }
        }
        for (&node, &amount) in &usage.cpu {
            self.nodes[node].cpu_occupied += amount;
        }
        for (&edge, &amount) in &usage.bw {
            self.edges[edge].bw_occupied += amount;
        }
        self.live.insert(slice.id, usage);
        Ok(())
    }

    /// Frees everything a committed slice holds.
    pub fn release_embedding(&mut self, slice_id: SliceId) -> Result<SliceUsage, NetError> {
        let usage = self.live.remove(&slice_id).ok_or(NetError::UnknownSlice(slice_id))?;
        for (&node, &amount) in &usage.cpu {
            self.nodes[node].cpu_occupied -= amount;
        }
        for (&edge, &amount) in &usage.bw {
            self.edges[edge].bw_occupied -= amount;
        }
        Ok(usage)
    }

    /// Releases every live slice, returning how many there were.
    pub fn release_all(&mut self) -> usize {
        let ids: Vec<SliceId> = self.live.keys().copied().collect();
        for id in &ids {
            self.release_embedding(*id).expect("live slice");
        }
        ids.len()
    }

    pub fn live_slices(&self) -> impl Iterator<Item = (&SliceId, &SliceUsage)> {
        self.live.iter()
    }

    pub fn is_live(&self, slice_id: SliceId) -> bool {
        self.live.contains_key(&slice_id)
    }

    pub fn total_cpu_occupied(&self) -> u64 {
        self.nodes.iter().map(|n| n.cpu_occupied).sum()
    }

    pub fn total_bw_occupied(&self) -> u64 {
        self.edges.iter().map(|e| e.bw_occupied).sum()
    }
}
