use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use super::graphs::connected;
use super::{IntRange, ScenarioError};
use crate::net::{adjacency_stats, GraphStats, NetError, PhysicalNetwork};

/// Capacity ranges assigned to real topologies.
pub const ZOO_BW: IntRange = IntRange::new(250, 300);
pub const ZOO_CPU: IntRange = IntRange::new(50, 100);

/// A bare undirected topology as read from a file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Topology {
    pub labels: Vec<String>,
    pub edges: Vec<(usize, usize)>,
    /// Per-edge bandwidth when the file provides it.
    pub bw: Vec<Option<u64>>,
}

impl Topology {
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_connected(&self) -> bool {
        connected(self.node_count(), &self.edges)
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.node_count()];
        for &(u, v) in &self.edges {
            nb[u].push(v);
            nb[v].push(u);
        }
        for l in &mut nb {
            l.sort_unstable();
            l.dedup();
        }
        nb
    }

    pub fn stats(&self) -> Result<GraphStats, NetError> {
        adjacency_stats(&self.neighbors())
    }

    /// Draws node CPU capacities, then the bandwidth of every edge the file
    /// left unspecified.
    pub fn into_network<R: Rng + ?Sized>(
        &self,
        cpu: IntRange,
        bw: IntRange,
        rng: &mut R,
    ) -> Result<PhysicalNetwork, ScenarioError> {
        let cpus: Vec<u64> = (0..self.node_count()).map(|_| cpu.sample(rng)).collect();
        let links: Vec<(usize, usize, u64)> = self
            .edges
            .iter()
            .zip(&self.bw)
            .map(|(&(u, v), b)| (u, v, b.unwrap_or_else(|| bw.sample(rng))))
            .collect();
        Ok(PhysicalNetwork::new(cpus, links)?)
    }

    fn push_edge(&mut self, u: usize, v: usize, bw: Option<u64>, seen: &mut BTreeSet<(usize, usize)>) {
        if u == v {
            log::warn!("dropping self-loop on {}", self.labels[u]);
            return;
        }
        let key = (u.min(v), u.max(v));
        if !seen.insert(key) && bw.is_none() {
            log::warn!("merging duplicate edge {} - {}", self.labels[u], self.labels[v]);
            return;
        }
        self.edges.push((u, v));
        self.bw.push(bw);
    }
}

fn attribute<'a>(tag: &'a str, name: &str) -> Option<&'a str> {
    let mut rest = tag;
    while let Some(pos) = rest.find(name) {
        let before_ok = pos == 0 || rest.as_bytes()[pos - 1].is_ascii_whitespace();
        let after = rest[pos + name.len()..].trim_start();
        if before_ok {
            if let Some(after_eq) = after.strip_prefix('=') {
                let after_eq = after_eq.trim_start();
                let quote = after_eq.chars().next()?;
                if quote == '"' || quote == '\'' {
                    let body = &after_eq[1..];
                    return body.find(quote).map(|end| &body[..end]);
                }
            }
        }
        rest = &rest[pos + name.len()..];
    }
    None
}

/// Reads nodes and edges of a GraphML document. Attributes other than ids
/// are ignored; multi-edges collapse to one edge and self-loops are dropped.
pub fn parse_graphml(text: &str) -> Result<Topology, ScenarioError> {
    let mut topo = Topology::default();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut pending: Vec<(String, String)> = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find('<') {
        let Some(len) = rest[start..].find('>') else {
            return Err(ScenarioError::Parse("unterminated tag".into()));
        };
        let tag = &rest[start + 1..start + len];
        rest = &rest[start + len + 1..];
        let name = tag.split(|c: char| c.is_whitespace() || c == '/').next().unwrap_or("");
        match name {
            "node" => {
                let id = attribute(tag, "id").ok_or_else(|| ScenarioError::Parse("node without id".into()))?;
                if index.insert(id.to_string(), topo.labels.len()).is_some() {
                    return Err(ScenarioError::Parse(format!("duplicate node id {id}")));
                }
                topo.labels.push(id.to_string());
            }
            "edge" => {
                let s = attribute(tag, "source").ok_or_else(|| ScenarioError::Parse("edge without source".into()))?;
                let t = attribute(tag, "target").ok_or_else(|| ScenarioError::Parse("edge without target".into()))?;
                pending.push((s.to_string(), t.to_string()));
            }
            _ => {}
        }
    }
    if topo.labels.is_empty() {
        return Err(ScenarioError::Parse("no nodes found".into()));
    }
    let mut seen = BTreeSet::new();
    for (s, t) in pending {
        let lookup = |id: &str| index.get(id).copied().ok_or_else(|| ScenarioError::Parse(format!("unknown node {id}")));
        let (u, v) = (lookup(&s)?, lookup(&t)?);
        topo.push_edge(u, v, None, &mut seen);
    }
    Ok(topo)
}

/// Reads `u v [bw]` lines with 0-based integer ids. `#` starts a comment; a
/// `# nodes N` line declares isolated trailing nodes.
pub fn parse_edge_list(text: &str) -> Result<Topology, ScenarioError> {
    let mut raw: Vec<(usize, usize, Option<u64>)> = Vec::new();
    let mut n = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let (body, comment) = match line.find('#') {
            Some(p) => (&line[..p], Some(&line[p + 1..])),
            None => (line, None),
        };
        if let Some(c) = comment {
            let mut words = c.split_whitespace();
            if words.next() == Some("nodes") {
                if let Some(k) = words.next().and_then(|w| w.parse::<usize>().ok()) {
                    n = n.max(k);
                }
            }
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let bad = || ScenarioError::Parse(format!("line {}: expected `u v [bw]`", lineno + 1));
        if fields.len() < 2 || fields.len() > 3 {
            return Err(bad());
        }
        let u: usize = fields[0].parse().map_err(|_| bad())?;
        let v: usize = fields[1].parse().map_err(|_| bad())?;
        let bw = match fields.get(2) {
            Some(f) => Some(f.parse::<u64>().map_err(|_| bad())?),
            None => None,
        };
        n = n.max(u + 1).max(v + 1);
        raw.push((u, v, bw));
    }
    let mut topo = Topology { labels: (0..n).map(|i| i.to_string()).collect(), ..Topology::default() };
    let mut seen = BTreeSet::new();
    for (u, v, bw) in raw {
        topo.push_edge(u, v, bw, &mut seen);
    }
    Ok(topo)
}

/// Edge list of a network with its bandwidth capacities.
pub fn write_edge_list(net: &PhysicalNetwork) -> String {
    let mut out = format!("# nodes {}\n", net.node_count());
    for e in net.edges() {
        let _ = writeln!(out, "{} {} {}", e.u, e.v, e.bw_capacity);
    }
    out
}

/// Reads a GraphML (`.graphml`, `.xml`) or edge-list file.
pub fn load_topology(path: &Path) -> Result<Topology, ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("graphml") | Some("xml") => parse_graphml(&text),
        _ => parse_edge_list(&text),
    }
}

/// Loads a real topology with randomised capacities.
pub fn load_zoo<R: Rng + ?Sized>(
    path: &Path,
    cpu: IntRange,
    bw: IntRange,
    rng: &mut R,
) -> Result<PhysicalNetwork, ScenarioError> {
    let topo = load_topology(path)?;
    if !topo.is_connected() {
        return Err(ScenarioError::DisconnectedTopology);
    }
    topo.into_network(cpu, bw, rng)
}
