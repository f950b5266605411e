use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::geometry::{RoadNetwork, EPS_GEO};
use crate::ids::{EdgeId, NodeId};
use crate::paths::{RouteMetric, ShortestPaths};
use crate::{Error, Result};

const START_ATTEMPTS: usize = 100;

/// Straight-line motion along one edge between two offsets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pass {
    pub edge: EdgeId,
    pub t0: f64,
    pub t1: f64,
    pub off0: f64,
    pub off1: f64,
}

impl Pass {
    pub fn offset_at(&self, t: f64) -> f64 {
        let f = ((t - self.t0) / (self.t1 - self.t0)).clamp(0.0, 1.0);
        self.off0 + (self.off1 - self.off0) * f
    }
}

/// One trip between two intersections. The last leg of a user may be cut
/// short by the end of the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Leg {
    pub from: NodeId,
    pub to: NodeId,
    pub passes: Vec<Pass>,
}

impl Leg {
    pub fn start(&self) -> f64 {
        self.passes[0].t0
    }

    pub fn end(&self) -> f64 {
        self.passes.last().map_or(0.0, |p| p.t1)
    }

    /// False when the trace ended before the user reached `to`.
    pub fn is_complete(&self, net: &RoadNetwork) -> bool {
        let Some(last) = self.passes.last() else { return false };
        let e = net.edge(last.edge);
        if ((last.off1 - last.off0).abs() - e.length).abs() > EPS_GEO * e.length.max(1.0) {
            return false;
        }
        let end = if last.off1 > last.off0 { e.endpoints.1 } else { e.endpoints.0 };
        end == self.to
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserTrace {
    pub legs: Vec<Leg>,
}

impl UserTrace {
    pub fn passes(&self) -> impl Iterator<Item = &Pass> {
        self.legs.iter().flat_map(|l| l.passes.iter())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobilityTrace {
    pub users: Vec<UserTrace>,
    pub duration: f64,
    pub seed: u64,
    pub min_leg: f64,
}

fn user_rng(seed: u64, user: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(user as u64 + 1);
    rng
}

fn sample(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// Restricted random waypoint mobility: every leg heads to a uniformly
/// chosen intersection at least `min_leg` metres away along the shortest
/// route, with edge speeds drawn once per leg.
pub fn generate_mobility(net: &RoadNetwork, users: usize, duration: f64, min_leg: f64, seed: u64) -> Result<MobilityTrace> {
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::Usage(format!("duration must be positive, got {duration}")));
    }
    let sp = ShortestPaths::all_pairs(net, RouteMetric::Distance);
    let n = net.nodes().len();
    let far: Vec<Vec<NodeId>> = (0..n)
        .map(|i| {
            (0..n)
                .map(NodeId::from_index)
                .filter(|&j| j.index() != i && sp.dist(NodeId::from_index(i), j) >= min_leg - 1e-9)
                .collect()
        })
        .collect();
    if far.iter().all(|f| f.is_empty()) {
        return Err(Error::NoQualifyingPair { min_length: min_leg });
    }
    let traces = (0..users)
        .into_par_iter()
        .map(|u| {
            let mut rng = user_rng(seed, u);
            let mut at = None;
            for _ in 0..START_ATTEMPTS {
                let s = rng.gen_range(0..n);
                if !far[s].is_empty() {
                    at = Some(NodeId::from_index(s));
                    break;
                }
            }
            let mut at = at.ok_or(Error::NoQualifyingPair { min_length: min_leg })?;
            let mut t = 0.0;
            let mut legs = Vec::new();
            while t < duration {
                let opts = &far[at.index()];
                let to = opts[rng.gen_range(0..opts.len())];
                let (nodes, edges) = sp.path(at, to);
                let mut passes = Vec::with_capacity(edges.len());
                for (k, &e) in edges.iter().enumerate() {
                    let edge = net.edge(e);
                    let v = sample(&mut rng, edge.speed.lo, edge.speed.hi);
                    let forward = edge.endpoints.0 == nodes[k];
                    let (off0, off1) = if forward { (0.0, edge.length) } else { (edge.length, 0.0) };
                    let t1 = t + edge.length / v;
                    if t1 >= duration {
                        let p = Pass { edge: e, t0: t, t1, off0, off1 };
                        let cut = Pass { t1: duration, off1: p.offset_at(duration), ..p };
                        passes.push(cut);
                        t = duration;
                        break;
                    }
                    passes.push(Pass { edge: e, t0: t, t1, off0, off1 });
                    t = t1;
                }
                legs.push(Leg { from: at, to, passes });
                at = to;
            }
            Ok(UserTrace { legs })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MobilityTrace { users: traces, duration, seed, min_leg })
}

/// Time-average number of users per metre on each edge.
pub fn estimate_density(net: &RoadNetwork, trace: &MobilityTrace) -> Vec<f64> {
    let mut occ = vec![0.0; net.edges().len()];
    for p in trace.users.iter().flat_map(|u| u.passes()) {
        occ[p.edge.index()] += p.t1 - p.t0;
    }
    occ.iter()
        .zip(net.edges())
        .map(|(o, e)| if trace.duration > 0.0 { o / (trace.duration * e.length) } else { 0.0 })
        .collect()
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

impl MobilityTrace {
    /// Text form: a `trace` header, then per user a `leg` record before each
    /// leg and one breakpoint row per edge entry, closed by an end row.
    pub fn to_text(&self, net: &RoadNetwork) -> String {
        let mut s = format!("trace users {} duration {} seed {} min_leg {}\n", self.users.len(), fmt(self.duration), self.seed, fmt(self.min_leg));
        for (u, user) in self.users.iter().enumerate() {
            for leg in &user.legs {
                s += &format!("u {u} leg {} {}\n", net.node(leg.from).label, net.node(leg.to).label);
                for p in &leg.passes {
                    s += &format!("u {u} t {} edge {} off {}\n", fmt(p.t0), net.edge(p.edge).label, fmt(p.off0));
                }
            }
            if let Some(p) = user.passes().last() {
                s += &format!("u {u} t {} edge {} off {}\n", fmt(p.t1), net.edge(p.edge).label, fmt(p.off1));
            }
        }
        s
    }
}

struct Row {
    line: usize,
    t: f64,
    edge: EdgeId,
    off: f64,
}

fn num(line: usize, t: &str) -> Result<f64> {
    t.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::parse(line, format!("bad number `{t}`")))
}

/// Parses the format written by [`MobilityTrace::to_text`].
pub fn parse_trace(text: &str, net: &RoadNetwork) -> Result<MobilityTrace> {
    let mut header = None;
    // per user: legs as (from, to, rows)
    let mut users: Vec<Vec<(NodeId, NodeId, Vec<Row>)>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let toks: Vec<&str> = raw.split('#').next().unwrap_or("").split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        match toks.as_slice() {
            ["trace", "users", n, "duration", d, "seed", s, "min_leg", a] => {
                let n: usize = n.parse().map_err(|_| Error::parse(line, "bad user count"))?;
                let s: u64 = s.parse().map_err(|_| Error::parse(line, "bad seed"))?;
                header = Some((num(line, d)?, s, num(line, a)?));
                users = (0..n).map(|_| Vec::new()).collect();
            }
            ["u", u, "leg", a, b] => {
                let legs = user_slot(&mut users, line, u)?;
                let node = |l: &str| net.node_by_label(l).ok_or_else(|| Error::parse(line, format!("unknown node `{l}`")));
                legs.push((node(a)?, node(b)?, Vec::new()));
            }
            ["u", u, "t", t, "edge", e, "off", o] => {
                let edge = net.edge_by_label(e).ok_or_else(|| Error::parse(line, format!("unknown edge `{e}`")))?;
                let off = num(line, o)?;
                let len = net.edge(edge).length;
                if off < -EPS_GEO || off > len + EPS_GEO * len.max(1.0) {
                    return Err(Error::parse(line, format!("offset {off} outside edge `{e}`")));
                }
                let t = num(line, t)?;
                let legs = user_slot(&mut users, line, u)?;
                let leg = legs.last_mut().ok_or_else(|| Error::parse(line, "breakpoint before any leg record"))?;
                leg.2.push(Row { line, t, edge, off });
            }
            _ => return Err(Error::parse(line, "expected a trace header, leg record or breakpoint row")),
        }
    }
    let (duration, seed, min_leg) = header.ok_or_else(|| Error::parse(1, "missing trace header"))?;
    let mut out = Vec::with_capacity(users.len());
    for legs in users {
        let total: usize = legs.iter().map(|l| l.2.len()).sum();
        let mut flat: Vec<(usize, &Row)> = Vec::with_capacity(total);
        for (k, l) in legs.iter().enumerate() {
            flat.extend(l.2.iter().map(|r| (k, r)));
        }
        let mut built: Vec<Leg> = legs.iter().map(|l| Leg { from: l.0, to: l.1, passes: Vec::new() }).collect();
        for w in 0..flat.len().saturating_sub(1) {
            let (k, r) = flat[w];
            let next = flat[w + 1].1;
            if next.t <= r.t {
                return Err(Error::parse(next.line, "breakpoint times must increase"));
            }
            let len = net.edge(r.edge).length;
            let off1 = if w + 2 == flat.len() {
                if next.edge != r.edge {
                    return Err(Error::parse(next.line, "end row must stay on the last edge"));
                }
                next.off
            } else if r.off <= len / 2.0 {
                len
            } else {
                0.0
            };
            built[k].passes.push(Pass { edge: r.edge, t0: r.t, t1: next.t, off0: r.off, off1 });
        }
        if built.iter().any(|l| l.passes.is_empty()) {
            return Err(Error::parse(1, "every leg needs at least one breakpoint"));
        }
        out.push(UserTrace { legs: built });
    }
    Ok(MobilityTrace { users: out, duration, seed, min_leg })
}

fn user_slot<'a, T>(users: &'a mut [Vec<T>], line: usize, u: &str) -> Result<&'a mut Vec<T>> {
    let i: usize = u.parse().map_err(|_| Error::parse(line, format!("bad user `{u}`")))?;
    users.get_mut(i).ok_or_else(|| Error::parse(line, format!("user {i} beyond header count")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{load_network, Interval};
    use crate::synth::{calibration_line, grid_network, GridSpec};

    fn line_net() -> RoadNetwork {
        load_network("node a 0 0\nnode b 100 0\nedge e a b speed 10 20 density 0.01 1\n").unwrap()
    }

    #[test]
    fn single_user_on_a_line_alternates() {
        let net = line_net();
        let tr = generate_mobility(&net, 1, 60.0, 50.0, 4).unwrap();
        let legs = &tr.users[0].legs;
        assert!(legs.len() >= 6);
        for w in legs.windows(2) {
            assert_eq!(w[0].to, w[1].from);
            assert_ne!(w[0].from, w[0].to);
        }
    }

    #[test]
    fn seeded_trace_is_identical() {
        let inst = grid_network(&GridSpec::tiny(), 1);
        let a = generate_mobility(&inst.network, 5, 300.0, 100.0, 9).unwrap();
        let b = generate_mobility(&inst.network, 5, 300.0, 100.0, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_mobility(&inst.network, 5, 300.0, 100.0, 10).unwrap());
    }

    #[test]
    fn leg_times_follow_kinematics() {
        let inst = grid_network(&GridSpec::small(), 2);
        let net = &inst.network;
        let tr = generate_mobility(net, 4, 2000.0, 300.0, 1).unwrap();
        for u in &tr.users {
            let mut t = 0.0;
            for leg in &u.legs {
                assert!((leg.start() - t).abs() < 1e-9);
                for w in leg.passes.windows(2) {
                    assert_eq!(w[0].t1, w[1].t0);
                }
                let mut sum = 0.0;
                for p in &leg.passes {
                    let e = net.edge(p.edge);
                    let d = (p.off1 - p.off0).abs();
                    let v = d / (p.t1 - p.t0);
                    assert!(v >= e.speed.lo - 1e-9 && v <= e.speed.hi + 1e-9);
                    assert!(p.off0 >= 0.0 && p.off0 <= e.length && p.off1 >= 0.0 && p.off1 <= e.length);
                    sum += d / v;
                }
                assert!((leg.end() - leg.start() - sum).abs() < 1e-6);
                t = leg.end();
            }
            assert!((t - tr.duration).abs() < 1e-9);
        }
    }

    #[test]
    fn impossible_leg_length() {
        assert!(matches!(generate_mobility(&line_net(), 1, 10.0, 500.0, 0), Err(Error::NoQualifyingPair { .. })));
    }

    #[test]
    fn density_of_single_edge_is_one_over_length() {
        let net = line_net();
        let tr = generate_mobility(&net, 1, 100.0, 50.0, 3).unwrap();
        let h = estimate_density(&net, &tr);
        assert!((h[0] - 0.01).abs() < 1e-12);
        let empty = generate_mobility(&net, 0, 100.0, 50.0, 3).unwrap();
        assert_eq!(estimate_density(&net, &empty), vec![0.0]);
    }

    #[test]
    fn density_follows_occupancy() {
        // hand-built trace: 70 s on a 10 m edge, 30 s on a 20 m edge
        let net = load_network("node a 0 0\nnode b 10 0\nnode c 30 0\nedge e1 a b\nedge e2 b c\n").unwrap();
        let p1 = Pass { edge: EdgeId(0), t0: 0.0, t1: 70.0, off0: 0.0, off1: 10.0 };
        let p2 = Pass { edge: EdgeId(1), t0: 70.0, t1: 100.0, off0: 0.0, off1: 20.0 };
        let tr = MobilityTrace {
            users: vec![UserTrace { legs: vec![Leg { from: NodeId(0), to: NodeId(2), passes: vec![p1, p2] }] }],
            duration: 100.0,
            seed: 0,
            min_leg: 0.0,
        };
        let h = estimate_density(&net, &tr);
        assert!((h[0] - 0.7 / 10.0).abs() < 1e-15);
        assert!((h[1] - 0.3 / 20.0).abs() < 1e-15);
    }

    #[test]
    fn trace_round_trips() {
        let inst = calibration_line(1000.0, 4, 100.0, Interval::new(10.0, 20.0), 5.0);
        let tr = generate_mobility(&inst.network, 3, 500.0, 1000.0, 5).unwrap();
        let text = tr.to_text(&inst.network);
        let back = parse_trace(&text, &inst.network).unwrap();
        assert_eq!(back, tr);
    }

    #[test]
    fn trace_rejects_time_reversal() {
        let net = line_net();
        let bad = "trace users 1 duration 10 seed 0 min_leg 0\nu 0 leg a b\nu 0 t 0 edge e off 0\nu 0 t 0 edge e off 5\n";
        assert!(matches!(parse_trace(bad, &net), Err(Error::Parse { line: 4, .. })));
    }
}
