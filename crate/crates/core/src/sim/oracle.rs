use std::collections::HashMap;
use std::fmt;

use crate::net::{EdgeId, NodeId, PhysicalNetwork, SliceId, SliceRequest, VEdgeId};

use super::SimulationReport;

/// A constraint broken by some accepted embedding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    UnknownSlice(SliceId),
    Shape { slice: SliceId, reason: String },
    Separation { slice: SliceId, node: NodeId },
    Connectivity { slice: SliceId, vedge: VEdgeId },
    Cpu { slice: SliceId, node: NodeId, used: u64, capacity: u64 },
    Bandwidth { slice: SliceId, edge: EdgeId, used: u64, capacity: u64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownSlice(s) => write!(f, "slice {s} is not in the scenario"),
            Violation::Shape { slice, reason } => write!(f, "slice {slice}: {reason}"),
            Violation::Separation { slice, node } => write!(f, "slice {slice}: two virtual nodes on node {node}"),
            Violation::Connectivity { slice, vedge } => {
                write!(f, "slice {slice}: path of virtual edge {vedge} does not join its hosts")
            }
            Violation::Cpu { slice, node, used, capacity } => {
                write!(f, "slice {slice}: node {node} holds {used} cpu of {capacity}")
            }
            Violation::Bandwidth { slice, edge, used, capacity } => {
                write!(f, "slice {slice}: edge {edge} holds {used} bw of {capacity}")
            }
        }
    }
}

fn walk(net: &PhysicalNetwork, from: NodeId, to: NodeId, path: &[EdgeId]) -> bool {
    if path.is_empty() {
        return false;
    }
    let mut cur = from;
    for &e in path {
        if e >= net.edge_count() {
            return false;
        }
        let edge = net.edge(e);
        if edge.u == cur {
            cur = edge.v;
        } else if edge.v == cur {
            cur = edge.u;
        } else {
            return false;
        }
    }
    cur == to
}

fn check_shape(net: &PhysicalNetwork, slice: &SliceRequest, hosts: &[NodeId], links: &[Vec<EdgeId>]) -> Vec<Violation> {
    let mut out = Vec::new();
    let id = slice.id;
    if hosts.len() != slice.node_count() || links.len() != slice.edge_count() {
        out.push(Violation::Shape { slice: id, reason: "embedding does not cover the slice".into() });
        return out;
    }
    if let Some(&h) = hosts.iter().find(|&&h| h >= net.node_count()) {
        out.push(Violation::Shape { slice: id, reason: format!("host {h} out of range") });
        return out;
    }
    let mut seen = vec![false; net.node_count()];
    for &h in hosts {
        if std::mem::replace(&mut seen[h], true) {
            out.push(Violation::Separation { slice: id, node: h });
        }
    }
    for (i, (ve, path)) in slice.vedges.iter().zip(links).enumerate() {
        if !walk(net, hosts[ve.a], hosts[ve.b], path) {
            out.push(Violation::Connectivity { slice: id, vedge: i });
        }
    }
    out
}

/// Replays every accepted embedding of `report` on a plain counter copy of
/// `substrate` and lists each broken constraint. Departures precede arrivals
/// at equal timestamps; slices with a non-finite departure never leave.
pub fn feasibility_oracle(substrate: &PhysicalNetwork, requests: &[SliceRequest], report: &SimulationReport) -> Vec<Violation> {
    let by_id: HashMap<SliceId, &SliceRequest> = requests.iter().map(|s| (s.id, s)).collect();
    let mut violations = Vec::new();
    // (time, 0 = departure / 1 = arrival, slice)
    let mut events: Vec<(f64, u8, SliceId)> = Vec::new();
    for rec in report.records.iter().filter(|r| r.accepted) {
        let Some(slice) = by_id.get(&rec.id) else {
            violations.push(Violation::UnknownSlice(rec.id));
            continue;
        };
        let shape = check_shape(substrate, slice, &rec.hosts, &rec.link_map);
        let broken = shape.iter().any(|v| matches!(v, Violation::Shape { .. } | Violation::Connectivity { .. }));
        violations.extend(shape);
        if broken {
            continue;
        }
        events.push((slice.t_arrive, 1, rec.id));
        if slice.t_depart.is_finite() {
            events.push((slice.t_depart, 0, rec.id));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let records: HashMap<SliceId, usize> = report.records.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
    let mut cpu = vec![0u64; substrate.node_count()];
    let mut bw = vec![0u64; substrate.edge_count()];
    for (_, kind, id) in events {
        let slice = by_id[&id];
        let rec = &report.records[records[&id]];
        if kind == 0 {
            for (v, &h) in slice.vnodes.iter().zip(&rec.hosts) {
                cpu[h] -= v.cpu_demand;
            }
            for (ve, path) in slice.vedges.iter().zip(&rec.link_map) {
                for &e in path {
                    bw[e] -= ve.bw_demand;
                }
            }
            continue;
        }
        for (v, &h) in slice.vnodes.iter().zip(&rec.hosts) {
            cpu[h] += v.cpu_demand;
        }
        for (ve, path) in slice.vedges.iter().zip(&rec.link_map) {
            for &e in path {
                bw[e] += ve.bw_demand;
            }
        }
        for &h in &rec.hosts {
            let capacity = substrate.node(h).cpu_capacity;
            if cpu[h] > capacity {
                violations.push(Violation::Cpu { slice: id, node: h, used: cpu[h], capacity });
            }
        }
        for &e in rec.link_map.iter().flatten() {
            let capacity = substrate.edge(e).bw_capacity;
            if bw[e] > capacity {
                violations.push(Violation::Bandwidth { slice: id, edge: e, used: bw[e], capacity });
            }
        }
    }
    violations.dedup();
    violations
}
