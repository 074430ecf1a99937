use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{NetError, SliceId, VEdgeId, VNodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VirtualNode {
    #[serde(rename = "cpu")]
    pub cpu_demand: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VirtualEdge {
    pub a: VNodeId,
    pub b: VNodeId,
    #[serde(rename = "bw")]
    pub bw_demand: u64,
}

impl VirtualEdge {
    pub fn other(&self, v: VNodeId) -> VNodeId {
        if self.a == v {
            self.b
        } else {
            self.a
        }
    }

    pub fn touches(&self, v: VNodeId) -> bool {
        self.a == v || self.b == v
    }
}

/// A virtual network request with its lifetime. Slices that never leave
/// carry `t_depart = +inf` (serialized as `null`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceRequest {
    pub id: SliceId,
    pub t_arrive: f64,
    #[serde(with = "infinite_as_null")]
    pub t_depart: f64,
    pub vnodes: Vec<VirtualNode>,
    pub vedges: Vec<VirtualEdge>,
}

impl SliceRequest {
    pub fn validate(&self) -> Result<(), NetError> {
        let fail = |reason: String| Err(NetError::InvalidSlice { slice: self.id, reason });
        if !(self.t_arrive < self.t_depart) {
            return fail(format!("arrival {} not before departure {}", self.t_arrive, self.t_depart));
        }
        if self.vnodes.iter().any(|v| v.cpu_demand == 0) {
            return fail("zero cpu demand".into());
        }
        let mut seen = BTreeSet::new();
        for e in &self.vedges {
            if e.bw_demand == 0 {
                return fail("zero bandwidth demand".into());
            }
            if e.a >= self.vnodes.len() || e.b >= self.vnodes.len() {
                return fail(format!("virtual edge ({}, {}) out of range", e.a, e.b));
            }
            if e.a == e.b {
                return fail(format!("virtual self-loop on {}", e.a));
            }
            if !seen.insert((e.a.min(e.b), e.a.max(e.b))) {
                return fail(format!("parallel virtual edge ({}, {})", e.a, e.b));
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.vnodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.vedges.len()
    }

    /// Incident virtual edges of every virtual node.
    pub fn incidence(&self) -> Vec<Vec<VEdgeId>> {
        let mut inc = vec![Vec::new(); self.vnodes.len()];
        for (id, e) in self.vedges.iter().enumerate() {
            inc[e.a].push(id);
            inc[e.b].push(id);
        }
        inc
    }

    pub fn degree(&self, v: VNodeId) -> usize {
        self.vedges.iter().filter(|e| e.touches(v)).count()
    }

    pub fn total_cpu(&self) -> u64 {
        self.vnodes.iter().map(|v| v.cpu_demand).sum()
    }

    pub fn total_bw(&self) -> u64 {
        self.vedges.iter().map(|e| e.bw_demand).sum()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.vnodes.len();
        if n <= 1 {
            return true;
        }
        let inc = self.incidence();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &e in &inc[v] {
                let w = self.vedges[e].other(v);
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
        if value.is_finite() {
            s.serialize_f64(*value)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> SliceRequest {
        SliceRequest {
            id: 3,
            t_arrive: 1.0,
            t_depart: f64::INFINITY,
            vnodes: vec![VirtualNode { cpu_demand: 10 }, VirtualNode { cpu_demand: 9 }],
            vedges: vec![VirtualEdge { a: 0, b: 1, bw_demand: 2 }],
        }
    }

    #[test]
    fn infinite_departure_round_trips_through_null() {
        let s = toy();
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"t_depart\":null"), "{json}");
        let back: SliceRequest = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn validation_catches_bad_slices() {
        assert!(toy().validate().is_ok());
        let mut s = toy();
        s.vedges.push(VirtualEdge { a: 1, b: 0, bw_demand: 1 });
        assert!(s.validate().is_err());
        let mut s = toy();
        s.t_depart = 0.5;
        assert!(s.validate().is_err());
        let mut s = toy();
        s.vnodes[0].cpu_demand = 0;
        assert!(s.validate().is_err());
    }
}
