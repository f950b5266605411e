use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geometry::RoadNetwork;
use crate::ids::{EdgeId, NodeId};

/// What "shortest" means when routing movements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum RouteMetric {
    /// Geometric length.
    #[default]
    Distance,
    /// Travel time at the upper speed bound of each edge.
    FastestTime,
}

impl RouteMetric {
    pub fn edge_weight(self, net: &RoadNetwork, e: EdgeId) -> f64 {
        let edge = net.edge(e);
        match self {
            RouteMetric::Distance => edge.length,
            RouteMetric::FastestTime => edge.length / edge.speed.hi,
        }
    }
}

#[derive(PartialEq)]
struct Item(f64, NodeId);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Single-source shortest distances.
pub fn dijkstra(net: &RoadNetwork, metric: RouteMetric, src: NodeId) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; net.nodes().len()];
    let mut heap = BinaryHeap::new();
    dist[src.index()] = 0.0;
    heap.push(Item(0.0, src));
    while let Some(Item(d, u)) = heap.pop() {
        if d > dist[u.index()] {
            continue;
        }
        for &e in net.incident(u) {
            let v = net.edge(e).other(u);
            let nd = d + metric.edge_weight(net, e);
            if nd < dist[v.index()] {
                dist[v.index()] = nd;
                heap.push(Item(nd, v));
            }
        }
    }
    dist
}

/// All-pairs shortest distances with lexicographically smallest path recovery.
pub struct ShortestPaths<'a> {
    net: &'a RoadNetwork,
    metric: RouteMetric,
    dist: Vec<Vec<f64>>,
}

impl<'a> ShortestPaths<'a> {
    pub fn all_pairs(net: &'a RoadNetwork, metric: RouteMetric) -> Self {
        use rayon::prelude::*;
        let dist = (0..net.nodes().len())
            .into_par_iter()
            .map(|s| dijkstra(net, metric, NodeId::from_index(s)))
            .collect();
        ShortestPaths { net, metric, dist }
    }

    pub fn dist(&self, a: NodeId, b: NodeId) -> f64 {
        self.dist[a.index()][b.index()]
    }

    /// Shortest path from `s` to `t` whose node-id sequence is
    /// lexicographically smallest among all shortest paths.
    pub fn path(&self, s: NodeId, t: NodeId) -> (Vec<NodeId>, Vec<EdgeId>) {
        let to_t = &self.dist[t.index()];
        let mut nodes = vec![s];
        let mut edges = Vec::new();
        let mut u = s;
        while u != t {
            let tol = 1e-9 * to_t[u.index()].max(1.0);
            let (e, v) = self
                .net
                .incident(u)
                .iter()
                .map(|&e| (e, self.net.edge(e).other(u)))
                .filter(|&(e, v)| (self.metric.edge_weight(self.net, e) + to_t[v.index()] - to_t[u.index()]).abs() <= tol)
                .min_by(|x, y| x.1.cmp(&y.1).then(self.net.edge(x.0).length.total_cmp(&self.net.edge(y.0).length)).then(x.0.cmp(&y.0)))
                .expect("a shortest-path successor exists in a connected graph");
            nodes.push(v);
            edges.push(e);
            u = v;
        }
        (nodes, edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::load_network;

    #[test]
    fn ties_resolve_to_lexicographically_smallest_sequence() {
        // square: a-b-d and a-c-d are both length 2; b precedes c
        let net = load_network("node a 0 0\nnode c 0 1\nnode b 1 0\nnode d 1 1\nedge e1 a b\nedge e2 b d\nedge e3 a c\nedge e4 c d\n").unwrap();
        let sp = ShortestPaths::all_pairs(&net, RouteMetric::Distance);
        let (nodes, _) = sp.path(NodeId(0), NodeId(3));
        // node ids follow file order: a=0, c=1, b=2, d=3
        assert_eq!(nodes, vec![NodeId(0), NodeId(1), NodeId(3)]);
        assert!((sp.dist(NodeId(0), NodeId(3)) - 2.0).abs() < 1e-12);
    }
}
