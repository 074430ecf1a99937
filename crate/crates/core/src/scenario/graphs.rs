use rand::Rng;

use super::{IntRange, ScenarioError};
use crate::net::PhysicalNetwork;

pub(crate) fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    if n <= 1 {
        return true;
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut components = n;
    for &(u, v) in edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a] = b;
            components -= 1;
        }
    }
    components == 1
}

/// Connected Waxman graph: nodes uniform in the unit square, edge (u, v)
/// with probability `alpha * exp(-d(u, v) / (beta * L))` where `L` is the
/// largest pairwise distance. Disconnected draws are discarded whole.
pub fn waxman_edges<R: Rng + ?Sized>(
    n: usize,
    alpha: f64,
    beta: f64,
    max_attempts: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>, ScenarioError> {
    if n < 2 {
        return Err(ScenarioError::InvalidConfig("waxman needs at least two nodes".into()));
    }
    let mut edges = Vec::new();
    for _ in 0..max_attempts {
        let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
        let dist = |i: usize, j: usize| (pts[i].0 - pts[j].0).hypot(pts[i].1 - pts[j].1);
        let mut longest = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                longest = longest.max(dist(i, j));
            }
        }
        let scale = beta * longest;
        edges.clear();
        for i in 0..n {
            for j in i + 1..n {
                let p = if scale > 0.0 { alpha * (-dist(i, j) / scale).exp() } else { alpha };
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        if connected(n, &edges) {
            return Ok(edges);
        }
    }
    Err(ScenarioError::GenerationFailure(max_attempts))
}

/// Connected G(n, p) graph, resampled whole until connected.
pub fn er_edges<R: Rng + ?Sized>(
    n: usize,
    p: f64,
    max_attempts: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>, ScenarioError> {
    if n < 2 {
        return Err(ScenarioError::InvalidConfig("erdos-renyi needs at least two nodes".into()));
    }
    let mut edges = Vec::new();
    for _ in 0..max_attempts {
        edges.clear();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        if connected(n, &edges) {
            return Ok(edges);
        }
    }
    Err(ScenarioError::GenerationFailure(max_attempts))
}

/// Draws node CPU then link bandwidth capacities uniformly from the ranges.
pub fn with_capacities<R: Rng + ?Sized>(
    n: usize,
    edges: &[(usize, usize)],
    cpu: IntRange,
    bw: IntRange,
    rng: &mut R,
) -> Result<PhysicalNetwork, ScenarioError> {
    let cpus: Vec<u64> = (0..n).map(|_| cpu.sample(rng)).collect();
    let links: Vec<(usize, usize, u64)> = edges.iter().map(|&(u, v)| (u, v, bw.sample(rng))).collect();
    Ok(PhysicalNetwork::new(cpus, links)?)
}

pub fn gen_waxman<R: Rng + ?Sized>(
    n: usize,
    alpha: f64,
    beta: f64,
    cpu: IntRange,
    bw: IntRange,
    max_attempts: usize,
    rng: &mut R,
) -> Result<PhysicalNetwork, ScenarioError> {
    let edges = waxman_edges(n, alpha, beta, max_attempts, rng)?;
    with_capacities(n, &edges, cpu, bw, rng)
}

pub fn gen_er<R: Rng + ?Sized>(
    n: usize,
    p: f64,
    cpu: IntRange,
    bw: IntRange,
    max_attempts: usize,
    rng: &mut R,
) -> Result<PhysicalNetwork, ScenarioError> {
    let edges = er_edges(n, p, max_attempts, rng)?;
    with_capacities(n, &edges, cpu, bw, rng)
}
