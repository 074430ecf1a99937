use std::collections::VecDeque;

use serde::Serialize;

use super::{NetError, PhysicalNetwork};

/// Distance and clustering statistics of a connected graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GraphStats {
    pub mean_distance: f64,
    pub diameter: u32,
    /// Population standard deviation of shortest-path lengths.
    pub distance_stddev: f64,
    /// Mean of local clustering coefficients; nodes of degree < 2 count as 0.
    pub clustering_coefficient: f64,
}

impl PhysicalNetwork {
    pub fn graph_stats(&self) -> Result<GraphStats, NetError> {
        let neighbors: Vec<Vec<usize>> =
            self.adjacency().iter().map(|l| l.iter().map(|&(w, _)| w).collect()).collect();
        adjacency_stats(&neighbors)
    }
}

/// Statistics over all unordered pairs of distinct nodes of a simple
/// undirected graph given as neighbour lists.
pub fn adjacency_stats(neighbors: &[Vec<usize>]) -> Result<GraphStats, NetError> {
    let n = neighbors.len();
    if n < 2 {
        return Err(NetError::DegenerateInput("statistics need at least two nodes"));
    }
    let mut sum = 0u64;
    let mut sum_sq = 0u64;
    let mut diameter = 0u32;
    let mut pairs = 0u64;
    let mut dist = vec![u32::MAX; n];
    let mut queue = VecDeque::new();
    for src in 0..n {
        dist.fill(u32::MAX);
        dist[src] = 0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            for &w in &neighbors[u] {
                if dist[w] == u32::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        for &d in &dist[src + 1..] {
            if d == u32::MAX {
                return Err(NetError::Disconnected);
            }
            sum += d as u64;
            sum_sq += (d as u64) * (d as u64);
            diameter = diameter.max(d);
            pairs += 1;
        }
    }
    let mean = sum as f64 / pairs as f64;
    let variance = (sum_sq as f64 / pairs as f64 - mean * mean).max(0.0);

    let mut is_neighbor = vec![false; n];
    let mut clustering = 0.0;
    for u in 0..n {
        let k = neighbors[u].len();
        if k < 2 {
            continue;
        }
        for &w in &neighbors[u] {
            is_neighbor[w] = true;
        }
        let mut links = 0usize;
        for &w in &neighbors[u] {
            links += neighbors[w].iter().filter(|&&x| is_neighbor[x]).count();
        }
        for &w in &neighbors[u] {
            is_neighbor[w] = false;
        }
        // every triangle edge was counted from both ends
        clustering += links as f64 / (k * (k - 1)) as f64;
    }

    Ok(GraphStats {
        mean_distance: mean,
        diameter,
        distance_stddev: variance.sqrt(),
        clustering_coefficient: clustering / n as f64,
    })
}

/// Sample Pearson correlation coefficient.
pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> Result<f64, NetError> {
    if xs.len() != ys.len() {
        return Err(NetError::DegenerateInput("series lengths differ"));
    }
    if xs.len() < 2 {
        return Err(NetError::DegenerateInput("need at least two samples"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(NetError::DegenerateInput("zero variance"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
