use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Interval, Point, EPS_GEO};
use crate::ids::{EdgeId, NodeId};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadNode {
    pub id: NodeId,
    pub label: String,
    pub position: Point,
    /// Inserted to straighten a curved road rather than a real intersection.
    pub artificial: bool,
}

/// Straight road segment between two nodes. Arclength offsets along the edge
/// run from `endpoints.0` (offset 0) to `endpoints.1` (offset `length`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadEdge {
    pub id: EdgeId,
    pub label: String,
    pub endpoints: (NodeId, NodeId),
    pub length: f64,
    /// Driving speed interval, m/s.
    pub speed: Interval,
    /// Mobile-user density interval, users/m.
    pub density: Interval,
}

impl RoadEdge {
    pub fn other(&self, n: NodeId) -> NodeId {
        if self.endpoints.0 == n {
            self.endpoints.1
        } else {
            self.endpoints.0
        }
    }
}

/// Connected undirected geometric road graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadNetwork {
    nodes: Vec<RoadNode>,
    edges: Vec<RoadEdge>,
    adjacency: Vec<Vec<EdgeId>>,
}

impl RoadNetwork {
    /// Validates and indexes the graph. Edge ids must equal their positions.
    pub fn new(nodes: Vec<RoadNode>, edges: Vec<RoadEdge>) -> Result<Self> {
        let mut labels = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if n.id.index() != i {
                return Err(Error::Invalid(format!("node `{}` has id {} at position {i}", n.label, n.id.0)));
            }
            if !n.position.is_finite() {
                return Err(Error::Invalid(format!("node `{}` has a non-finite position", n.label)));
            }
            if labels.insert(n.label.as_str(), i).is_some() {
                return Err(Error::Invalid(format!("duplicate node id `{}`", n.label)));
            }
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut edge_labels = HashMap::new();
        for (i, e) in edges.iter().enumerate() {
            if e.id.index() != i {
                return Err(Error::Invalid(format!("edge `{}` has id {} at position {i}", e.label, e.id.0)));
            }
            if edge_labels.insert(e.label.as_str(), i).is_some() {
                return Err(Error::Invalid(format!("duplicate edge id `{}`", e.label)));
            }
            let (a, b) = e.endpoints;
            if a.index() >= nodes.len() || b.index() >= nodes.len() {
                return Err(Error::UnknownId { kind: "node", id: format!("#{}", a.0.max(b.0)) });
            }
            if a == b {
                return Err(Error::Invalid(format!("edge `{}` is a self-loop", e.label)));
            }
            let euclid = nodes[a.index()].position.dist(nodes[b.index()].position);
            if euclid <= EPS_GEO || e.length <= EPS_GEO {
                return Err(Error::DegenerateEdge { edge: e.label.clone(), length: euclid });
            }
            if (e.length - euclid).abs() > EPS_GEO.max(1e-12 * euclid) {
                return Err(Error::Invalid(format!(
                    "edge `{}` declares length {} but its endpoints are {} apart",
                    e.label, e.length, euclid
                )));
            }
            if !e.speed.is_positive_ordered() {
                return Err(Error::Invalid(format!("edge `{}` speed interval is not 0 < v1 <= v2", e.label)));
            }
            if !e.density.is_positive_ordered() {
                return Err(Error::Invalid(format!("edge `{}` density interval is not 0 < h1 <= h2", e.label)));
            }
            adjacency[a.index()].push(e.id);
            adjacency[b.index()].push(e.id);
        }
        let net = RoadNetwork { nodes, edges, adjacency };
        net.check_connected()?;
        Ok(net)
    }

    fn check_connected(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Invalid("road network has no nodes".into()));
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![NodeId(0)];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &e in &self.adjacency[u.index()] {
                let v = self.edges[e.index()].other(u);
                if !seen[v.index()] {
                    seen[v.index()] = true;
                    stack.push(v);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(Error::Disconnected {
                root: self.nodes[0].label.clone(),
                node: self.nodes[i].label.clone(),
            }),
            None => Ok(()),
        }
    }

    pub fn nodes(&self) -> &[RoadNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[RoadEdge] {
        &self.edges
    }

    pub fn node(&self, id: NodeId) -> &RoadNode {
        &self.nodes[id.index()]
    }

    pub fn edge(&self, id: EdgeId) -> &RoadEdge {
        &self.edges[id.index()]
    }

    pub fn incident(&self, n: NodeId) -> &[EdgeId] {
        &self.adjacency[n.index()]
    }

    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        self.nodes.iter().find(|n| n.label == label).map(|n| n.id)
    }

    pub fn edge_by_label(&self, label: &str) -> Option<EdgeId> {
        self.edges.iter().find(|e| e.label == label).map(|e| e.id)
    }

    /// Shortest connecting edge between two adjacent nodes (lowest id on ties).
    pub fn edge_between(&self, a: NodeId, b: NodeId) -> Option<EdgeId> {
        self.adjacency[a.index()]
            .iter()
            .copied()
            .filter(|&e| self.edges[e.index()].other(a) == b)
            .min_by(|x, y| self.edges[x.index()].length.total_cmp(&self.edges[y.index()].length).then(x.cmp(y)))
    }

    /// Endpoint coordinates `(start, end)` of an edge.
    pub fn edge_points(&self, e: EdgeId) -> (Point, Point) {
        let (a, b) = self.edges[e.index()].endpoints;
        (self.nodes[a.index()].position, self.nodes[b.index()].position)
    }

    /// Position at arclength `offset` along the edge.
    pub fn point_at(&self, e: EdgeId, offset: f64) -> Point {
        let (a, b) = self.edge_points(e);
        let len = self.edges[e.index()].length;
        a.lerp(b, (offset / len).clamp(0.0, 1.0))
    }

    /// Largest `v2 / v1` over all edges.
    pub fn speed_ratio_bound(&self) -> f64 {
        self.edges.iter().map(|e| e.speed.hi / e.speed.lo).fold(1.0, f64::max)
    }

    /// Node nearest to `p` (lowest id on ties).
    pub fn nearest_node(&self, p: Point) -> NodeId {
        self.nodes
            .iter()
            .min_by(|a, b| a.position.dist(p).total_cmp(&b.position.dist(p)).then(a.id.cmp(&b.id)))
            .map(|n| n.id)
            .expect("network has nodes")
    }
}
