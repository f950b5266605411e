//! Movement paths: generation, demand normalization, the path-splitting
//! reduction and projection onto subsegments.

mod shortest;

pub use shortest::{dijkstra, RouteMetric, ShortestPaths};

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{PartitionIndex, RoadNetwork};
use crate::ids::{EdgeId, NodeId, PathId, SubsegmentId};
use crate::{Error, Result};

/// A simple path through the road network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovementPath {
    pub id: PathId,
    pub label: String,
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
    pub length: f64,
    /// Required metric level `λ_p`; `None` defers to the planner's target.
    pub demand: Option<f64>,
}

impl MovementPath {
    /// Builds a path from its node sequence, checking adjacency and simplicity.
    pub fn from_nodes(net: &RoadNetwork, id: PathId, label: String, nodes: Vec<NodeId>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Invalid(format!("path `{label}` needs at least two nodes")));
        }
        let mut seen = HashSet::new();
        for n in &nodes {
            if !seen.insert(*n) {
                return Err(Error::Invalid(format!("path `{label}` repeats node `{}`", net.node(*n).label)));
            }
        }
        let mut edges = Vec::with_capacity(nodes.len() - 1);
        for w in nodes.windows(2) {
            let e = net.edge_between(w[0], w[1]).ok_or_else(|| {
                Error::Invalid(format!(
                    "path `{label}`: nodes `{}` and `{}` are not adjacent",
                    net.node(w[0]).label,
                    net.node(w[1]).label
                ))
            })?;
            edges.push(e);
        }
        let length = edges.iter().map(|e| net.edge(*e).length).sum();
        Ok(MovementPath { id, label, nodes, edges, length, demand: None })
    }

    /// True when edge `i` of the path is traversed from its second endpoint to its first.
    pub fn reversed_on(&self, net: &RoadNetwork, i: usize) -> bool {
        net.edge(self.edges[i]).endpoints.0 != self.nodes[i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationMeta {
    pub min_length: f64,
    pub count: usize,
    pub seed: u64,
    pub metric: RouteMetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovementSet {
    pub paths: Vec<MovementPath>,
    pub meta: Option<GenerationMeta>,
}

impl MovementSet {
    pub fn new(paths: Vec<MovementPath>) -> Self {
        MovementSet { paths, meta: None }
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Copy where every path without an explicit demand gets `lambda`.
    pub fn with_default_demand(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        for p in &mut out.paths {
            p.demand.get_or_insert(lambda);
        }
        out
    }

    /// Copy where every path demands exactly `lambda`.
    pub fn with_uniform_demand(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        for p in &mut out.paths {
            p.demand = Some(lambda);
        }
        out
    }

    /// Renumbers path ids to match positions after filtering.
    fn reindex(mut paths: Vec<MovementPath>) -> Vec<MovementPath> {
        for (i, p) in paths.iter_mut().enumerate() {
            p.id = PathId::from_index(i);
        }
        paths
    }

    pub fn to_text(&self, net: &RoadNetwork) -> String {
        let mut out = String::new();
        if let Some(m) = &self.meta {
            writeln!(out, "# generated: min_length {} count {} seed {} metric {:?}", m.min_length, m.count, m.seed, m.metric).unwrap();
        }
        for p in &self.paths {
            write!(out, "path {}", p.label).unwrap();
            for n in &p.nodes {
                write!(out, " {}", net.node(*n).label).unwrap();
            }
            if let Some(l) = p.demand {
                write!(out, " lambda {l}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Parses `path <id> <node> <node> ... [lambda <x>]` records.
pub fn parse_paths(text: &str, net: &RoadNetwork) -> Result<MovementSet> {
    let mut paths = Vec::new();
    let mut labels = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let toks: Vec<&str> = raw.split('#').next().unwrap_or("").split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks[0] != "path" {
            return Err(Error::parse(line, format!("unknown record `{}`", toks[0])));
        }
        let label = toks.get(1).ok_or_else(|| Error::parse(line, "expected path id"))?.to_string();
        if !labels.insert(label.clone()) {
            return Err(Error::parse(line, format!("duplicate path id `{label}`")));
        }
        let mut rest = &toks[2..];
        let mut demand = None;
        if let Some(k) = rest.iter().position(|t| *t == "lambda") {
            let v = rest.get(k + 1).ok_or_else(|| Error::parse(line, "expected lambda value"))?;
            let v: f64 = v.parse().map_err(|_| Error::parse(line, format!("bad lambda `{v}`")))?;
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::parse(line, "lambda must be positive"));
            }
            if k + 2 != rest.len() {
                return Err(Error::parse(line, "lambda must be the last attribute"));
            }
            demand = Some(v);
            rest = &rest[..k];
        }
        let nodes = rest
            .iter()
            .map(|t| net.node_by_label(t).ok_or_else(|| Error::parse(line, format!("unknown node `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        let mut p = MovementPath::from_nodes(net, PathId::from_index(paths.len()), label, nodes)
            .map_err(|e| Error::parse(line, e.to_string()))?;
        p.demand = demand;
        paths.push(p);
    }
    Ok(MovementSet::new(paths))
}

/// Samples `count` node pairs (with replacement) among those whose shortest
/// path is at least `min_length` long. Repeated pairs are stored once.
pub fn generate_paths(net: &RoadNetwork, min_length: f64, count: usize, seed: u64, metric: RouteMetric) -> Result<MovementSet> {
    if !(min_length > 0.0) {
        return Err(Error::Invalid("minimum path length must be positive".into()));
    }
    let sp = ShortestPaths::all_pairs(net, metric);
    let n = net.nodes().len();
    let mut qualifying = Vec::new();
    let mut routes: HashMap<(usize, usize), (Vec<NodeId>, Vec<EdgeId>, f64)> = HashMap::new();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (NodeId::from_index(i), NodeId::from_index(j));
            let len = match metric {
                RouteMetric::Distance => sp.dist(a, b),
                RouteMetric::FastestTime => {
                    let (nodes, edges) = sp.path(a, b);
                    let len = edges.iter().map(|e| net.edge(*e).length).sum();
                    routes.insert((i, j), (nodes, edges, len));
                    len
                }
            };
            if len >= min_length - 1e-9 {
                qualifying.push((i, j));
            }
        }
    }
    if qualifying.is_empty() {
        return Err(Error::NoQualifyingPair { min_length });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut paths = Vec::new();
    for _ in 0..count {
        let (i, j) = qualifying[rng.gen_range(0..qualifying.len())];
        if !seen.insert((i, j)) {
            continue;
        }
        let (nodes, edges, length) = match routes.remove(&(i, j)) {
            Some(r) => r,
            None => {
                let (nodes, edges) = sp.path(NodeId::from_index(i), NodeId::from_index(j));
                let len = edges.iter().map(|e| net.edge(*e).length).sum();
                (nodes, edges, len)
            }
        };
        let id = PathId::from_index(paths.len());
        paths.push(MovementPath { id, label: format!("p{}", id.0), nodes, edges, length, demand: None });
    }
    Ok(MovementSet { paths, meta: Some(GenerationMeta { min_length, count, seed, metric }) })
}

/// Demand normalization: `λ = min λ_p` and per-path factors `λ / λ_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub lambda: f64,
    pub factors: Vec<f64>,
}

impl Normalization {
    pub fn uniform(lambda: f64, n: usize) -> Self {
        Normalization { lambda, factors: vec![1.0; n] }
    }

    pub fn is_uniform(&self) -> bool {
        self.factors.iter().all(|f| *f == 1.0)
    }
}

pub fn normalize_demands(movements: &MovementSet) -> Result<Normalization> {
    let demands = movements
        .paths
        .iter()
        .map(|p| match p.demand {
            Some(d) if d > 0.0 && d.is_finite() => Ok(d),
            _ => Err(Error::Invalid(format!("path `{}` has no positive demand", p.label))),
        })
        .collect::<Result<Vec<f64>>>()?;
    let lambda = demands.iter().cloned().fold(f64::INFINITY, f64::min);
    if !lambda.is_finite() {
        return Err(Error::Invalid("movement set is empty".into()));
    }
    Ok(Normalization { lambda, factors: demands.iter().map(|d| lambda / d).collect() })
}

/// Outcome of [`reduce_paths`].
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub movements: MovementSet,
    /// Labels of dropped paths in input order.
    pub removed: Vec<String>,
    /// Set when the rule could not be applied.
    pub skipped: Option<String>,
}

fn canonical(nodes: &[NodeId]) -> Vec<NodeId> {
    let rev: Vec<NodeId> = nodes.iter().rev().copied().collect();
    if rev.as_slice() < nodes {
        rev
    } else {
        nodes.to_vec()
    }
}

/// Drops every path that splits at an internal node into two sub-paths that
/// are themselves in the set. Only valid under uniform demand.
pub fn reduce_paths(movements: &MovementSet) -> Reduction {
    let demands: Vec<Option<f64>> = movements.paths.iter().map(|p| p.demand).collect();
    let uniform = demands.windows(2).all(|w| w[0] == w[1]);
    if !uniform {
        return Reduction {
            movements: movements.clone(),
            removed: Vec::new(),
            skipped: Some("path demands differ; splitting is only sound for a single demand level".into()),
        };
    }
    // Halves are looked up in the input set: a removed half is itself implied
    // by shorter paths that stay, so one pass reaches the fixpoint.
    let present: HashSet<Vec<NodeId>> = movements.paths.iter().map(|p| canonical(&p.nodes)).collect();
    let splits = |p: &MovementPath| {
        (1..p.nodes.len() - 1)
            .any(|k| present.contains(&canonical(&p.nodes[..=k])) && present.contains(&canonical(&p.nodes[k..])))
    };
    let mut removed = Vec::new();
    let mut keep = Vec::new();
    for p in &movements.paths {
        if splits(p) {
            removed.push(p.label.clone());
        } else {
            keep.push(p.clone());
        }
    }
    Reduction {
        movements: MovementSet { paths: MovementSet::reindex(keep), meta: movements.meta.clone() },
        removed,
        skipped: None,
    }
}

/// `L_p`: subsegments of a path in traversal order.
pub fn path_subsegments(index: &PartitionIndex, net: &RoadNetwork, path: &MovementPath) -> Result<Vec<SubsegmentId>> {
    let mut out = Vec::new();
    for (i, e) in path.edges.iter().enumerate() {
        if e.index() >= index.edge_count() {
            return Err(Error::UnknownId { kind: "edge", id: format!("#{}", e.0) });
        }
        let subs = index.edge_subsegments(*e);
        if path.reversed_on(net, i) {
            out.extend(subs.iter().rev());
        } else {
            out.extend(subs.iter());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::geometry::{load_network, partition_edges};

    #[test]
    fn t1_long_pair_is_the_whole_road() {
        let (inst, _) = fixtures::t1();
        let set = generate_paths(&inst.network, 2.5, 1, 1, RouteMetric::Distance).unwrap();
        assert_eq!(set.len(), 1);
        let p = &set.paths[0];
        assert!((p.length - 3.0).abs() < 1e-12);
        let labels: Vec<&str> = p.nodes.iter().map(|n| inst.network.node(*n).label.as_str()).collect();
        assert_eq!(labels, ["a", "n1", "n2", "b"]);
    }

    #[test]
    fn too_long_minimum_is_an_error() {
        let (inst, _) = fixtures::t1();
        assert!(matches!(
            generate_paths(&inst.network, 3.5, 1, 1, RouteMetric::Distance),
            Err(Error::NoQualifyingPair { .. })
        ));
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let net = crate::synth::grid_network(&crate::synth::GridSpec::small(), 3).network;
        let a = generate_paths(&net, 300.0, 40, 11, RouteMetric::Distance).unwrap();
        let b = generate_paths(&net, 300.0, 40, 11, RouteMetric::Distance).unwrap();
        assert_eq!(a.to_text(&net), b.to_text(&net));
        let c = generate_paths(&net, 300.0, 40, 12, RouteMetric::Distance).unwrap();
        assert_ne!(a.to_text(&net), c.to_text(&net));
        for p in &a.paths {
            assert!(p.length >= 300.0 - 1e-9);
        }
    }

    #[test]
    fn normalization_examples() {
        let (inst, _) = fixtures::t1();
        let base = parse_paths("path p a n1\npath q n1 n2\npath r n2 b\n", &inst.network).unwrap();
        let mut m = base.clone();
        m.paths.truncate(2);
        m.paths[0].demand = Some(0.4);
        m.paths[1].demand = Some(0.8);
        let n = normalize_demands(&m).unwrap();
        assert_eq!(n.lambda, 0.4);
        assert_eq!(n.factors, vec![1.0, 0.5]);

        let n = normalize_demands(&base.with_uniform_demand(0.5)).unwrap();
        assert_eq!(n.lambda, 0.5);
        assert!(n.is_uniform());

        let mut m = base.clone();
        for (p, d) in m.paths.iter_mut().zip([0.3, 0.6, 0.9]) {
            p.demand = Some(d);
        }
        let n = normalize_demands(&m).unwrap();
        assert_eq!(n.lambda, 0.3);
        assert!((n.factors[1] - 0.5).abs() < 1e-15 && (n.factors[2] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn reduction_drops_path_with_both_halves() {
        let (inst, _) = fixtures::t1();
        let set = parse_paths("path ac a n1 n2\npath ab a n1\npath bc n1 n2\n", &inst.network).unwrap();
        let r = reduce_paths(&set);
        assert_eq!(r.removed, vec!["ac".to_string()]);
        assert_eq!(r.movements.len(), 2);
        assert!(r.skipped.is_none());
    }

    #[test]
    fn reduction_identity_without_halves() {
        let (inst, _) = fixtures::t1();
        let set = parse_paths("path ac a n1 n2\npath ab a n1\n", &inst.network).unwrap();
        let r = reduce_paths(&set);
        assert!(r.removed.is_empty());
        assert_eq!(r.movements, set);
    }

    #[test]
    fn reduction_nested_splits() {
        let (inst, _) = fixtures::t1();
        // whole = [a..b] splits into [a..n1] + [n1..b]; [n1..b] splits further.
        let set = parse_paths(
            "path whole a n1 n2 b\npath left a n1\npath right n1 n2 b\npath r1 n1 n2\npath r2 n2 b\n",
            &inst.network,
        )
        .unwrap();
        let r = reduce_paths(&set);
        assert_eq!(r.removed, vec!["whole".to_string(), "right".to_string()]);
        // repeated scanning reaches the same fixpoint
        let again = reduce_paths(&r.movements);
        assert!(again.removed.is_empty());
    }

    #[test]
    fn reduction_skipped_for_mixed_demands() {
        let (inst, _) = fixtures::t1();
        let mut set = parse_paths("path ac a n1 n2\npath ab a n1\npath bc n1 n2\n", &inst.network).unwrap();
        set.paths[0].demand = Some(0.5);
        let r = reduce_paths(&set);
        assert!(r.skipped.is_some());
        assert_eq!(r.movements, set);
    }

    #[test]
    fn subsegments_follow_traversal_order() {
        let (inst, moves) = fixtures::t1();
        let idx = partition_edges(&inst.network, &inst.sites).unwrap();
        let l = path_subsegments(&idx, &inst.network, &moves.paths[0]).unwrap();
        assert_eq!(l, vec![SubsegmentId(0), SubsegmentId(1), SubsegmentId(2)]);

        let back = parse_paths("path q b n2 n1 a\n", &inst.network).unwrap();
        let l = path_subsegments(&idx, &inst.network, &back.paths[0]).unwrap();
        assert_eq!(l, vec![SubsegmentId(2), SubsegmentId(1), SubsegmentId(0)]);

        let idx0 = partition_edges(&inst.network, &[]).unwrap();
        let single = parse_paths("path s a n1\n", &inst.network).unwrap();
        assert_eq!(path_subsegments(&idx0, &inst.network, &single.paths[0]).unwrap().len(), 1);

        let (inst, moves) = fixtures::overlap();
        let idx = partition_edges(&inst.network, &inst.sites).unwrap();
        let l = path_subsegments(&idx, &inst.network, &moves.paths[0]).unwrap();
        let spans: Vec<(f64, f64)> = l.iter().map(|s| (idx.subsegment(*s).start, idx.subsegment(*s).end)).collect();
        assert_eq!(spans.len(), 3);
        assert!((spans[1].0 - 1.0).abs() < 1e-12 && (spans[1].1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn path_file_rejects_non_adjacent_nodes() {
        let net = load_network("node a 0 0\nnode b 1 0\nnode c 2 0\nedge e1 a b\nedge e2 b c\n").unwrap();
        assert!(parse_paths("path p a c\n", &net).is_err());
        assert!(parse_paths("path p a b a\n", &net).is_err());
        let ok = parse_paths("path p a b c lambda 0.25\n", &net).unwrap();
        assert_eq!(ok.paths[0].demand, Some(0.25));
        assert!((ok.paths[0].length - 2.0).abs() < 1e-12);
    }
}
