//! Line-oriented network/site text format. See `docs/formats.md` for the grammar.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{CandidateSite, CoverageRegion, Interval, Point, RoadEdge, RoadNetwork, RoadNode};
use crate::ids::{EdgeId, NodeId, SiteId};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceDefaults {
    pub speed: Interval,
    pub density: Interval,
    pub rate: Interval,
    pub cost: f64,
}

impl Default for InstanceDefaults {
    fn default() -> Self {
        InstanceDefaults {
            speed: Interval::new(10.0, 20.0),
            density: Interval::new(0.01, 0.02),
            rate: Interval::new(5.0, 10.0),
            cost: 1.0,
        }
    }
}

/// A road network together with its candidate sites.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub network: RoadNetwork,
    pub sites: Vec<CandidateSite>,
}

impl Instance {
    pub fn site_by_label(&self, label: &str) -> Option<SiteId> {
        self.sites.iter().find(|s| s.label == label).map(|s| s.id)
    }
}

struct Tokens<'a> {
    line: usize,
    toks: Vec<&'a str>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self, what: &str) -> Result<&'a str> {
        let t = self.toks.get(self.pos).copied().ok_or_else(|| Error::parse(self.line, format!("expected {what}")))?;
        self.pos += 1;
        Ok(t)
    }

    fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.pos).copied()
    }

    fn num(&mut self, what: &str) -> Result<f64> {
        let t = self.next(what)?;
        let v: f64 = t.parse().map_err(|_| Error::parse(self.line, format!("expected {what}, found `{t}`")))?;
        if !v.is_finite() {
            return Err(Error::parse(self.line, format!("{what} must be finite")));
        }
        Ok(v)
    }

    fn peek_num(&self) -> bool {
        self.peek().is_some_and(|t| t.parse::<f64>().is_ok())
    }

    fn interval(&mut self, what: &str) -> Result<Interval> {
        Ok(Interval::new(self.num(what)?, self.num(what)?))
    }

    fn done(&self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(Error::parse(self.line, format!("unexpected token `{t}`"))),
        }
    }
}

struct RawEdge {
    line: usize,
    label: String,
    a: String,
    b: String,
    length: Option<f64>,
    speed: Option<Interval>,
    density: Option<Interval>,
}

struct RawSite {
    label: String,
    position: Point,
    region: CoverageRegion,
    cost: Option<f64>,
    cost2: Option<(f64, f64)>,
    rate: Option<Interval>,
}

/// Parses a network description with optional site records.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut defaults = InstanceDefaults::default();
    let mut nodes: Vec<RoadNode> = Vec::new();
    let mut node_ids: HashMap<String, NodeId> = HashMap::new();
    let mut raw_edges = Vec::new();
    let mut raw_sites: Vec<(usize, RawSite)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let mut t = Tokens { line, toks, pos: 0 };
        match t.next("record")? {
            "defaults" => {
                match t.next("default name")? {
                    "speed" => defaults.speed = t.interval("speed")?,
                    "density" => defaults.density = t.interval("density")?,
                    "rate" => defaults.rate = t.interval("rate")?,
                    "cost" => defaults.cost = t.num("cost")?,
                    other => return Err(Error::parse(line, format!("unknown default `{other}`"))),
                }
                t.done()?;
            }
            "node" => {
                let label = t.next("node id")?.to_string();
                let position = Point::new(t.num("x")?, t.num("y")?);
                let artificial = match t.peek() {
                    Some("artificial") => {
                        t.pos += 1;
                        true
                    }
                    _ => false,
                };
                t.done()?;
                if node_ids.contains_key(&label) {
                    return Err(Error::parse(line, format!("duplicate node id `{label}`")));
                }
                let id = NodeId::from_index(nodes.len());
                node_ids.insert(label.clone(), id);
                nodes.push(RoadNode { id, label, position, artificial });
            }
            "edge" => {
                let label = t.next("edge id")?.to_string();
                let a = t.next("node id")?.to_string();
                let b = t.next("node id")?.to_string();
                let mut e = RawEdge { line, label, a, b, length: None, speed: None, density: None };
                if t.peek_num() {
                    e.speed = Some(t.interval("speed")?);
                    if t.peek_num() {
                        e.density = Some(t.interval("density")?);
                    }
                }
                while let Some(k) = t.peek() {
                    t.pos += 1;
                    match k {
                        "length" => e.length = Some(t.num("length")?),
                        "speed" => e.speed = Some(t.interval("speed")?),
                        "density" => e.density = Some(t.interval("density")?),
                        other => return Err(Error::parse(line, format!("unknown edge attribute `{other}`"))),
                    }
                }
                raw_edges.push(e);
            }
            "site" => {
                let label = t.next("site id")?.to_string();
                let position = Point::new(t.num("x")?, t.num("y")?);
                let region = match t.next("region kind")? {
                    "disk" => CoverageRegion::Disk { center: position, radius: t.num("radius")? },
                    "sectors" => {
                        let mut radii = [0.0; 4];
                        for r in radii.iter_mut() {
                            *r = t.num("sector radius")?;
                        }
                        CoverageRegion::FourSector { center: position, radii }
                    }
                    "poly" => {
                        let mut vertices = Vec::new();
                        while t.peek_num() {
                            vertices.push(Point::new(t.num("x")?, t.num("y")?));
                        }
                        CoverageRegion::Polygon { vertices }
                    }
                    other => return Err(Error::parse(line, format!("unknown region kind `{other}`"))),
                };
                let mut s = RawSite { label, position, region, cost: None, cost2: None, rate: None };
                while let Some(k) = t.peek() {
                    t.pos += 1;
                    match k {
                        "cost" => s.cost = Some(t.num("cost")?),
                        "cost2" => s.cost2 = Some((t.num("first-stage cost")?, t.num("second-stage cost")?)),
                        "rate" => s.rate = Some(t.interval("rate")?),
                        other => return Err(Error::parse(line, format!("unknown site attribute `{other}`"))),
                    }
                }
                if raw_sites.iter().any(|(_, r)| r.label == s.label) {
                    return Err(Error::parse(line, format!("duplicate site id `{}`", s.label)));
                }
                raw_sites.push((line, s));
            }
            other => return Err(Error::parse(line, format!("unknown record `{other}`"))),
        }
    }

    let mut edges = Vec::with_capacity(raw_edges.len());
    for r in raw_edges {
        let lookup = |id: &str| {
            node_ids.get(id).copied().ok_or_else(|| Error::parse(r.line, format!("edge `{}` references unknown node `{id}`", r.label)))
        };
        let (a, b) = (lookup(&r.a)?, lookup(&r.b)?);
        let euclid = nodes[a.index()].position.dist(nodes[b.index()].position);
        let id = EdgeId::from_index(edges.len());
        edges.push(RoadEdge {
            id,
            label: r.label,
            endpoints: (a, b),
            length: r.length.unwrap_or(euclid),
            speed: r.speed.unwrap_or(defaults.speed),
            density: r.density.unwrap_or(defaults.density),
        });
    }
    let network = RoadNetwork::new(nodes, edges)?;

    let mut sites = Vec::with_capacity(raw_sites.len());
    for (line, r) in raw_sites {
        let cost = r.cost.or(r.cost2.map(|c| c.0)).unwrap_or(defaults.cost);
        let (w1, w2) = r.cost2.unwrap_or((cost, cost));
        let site = CandidateSite {
            id: SiteId::from_index(sites.len()),
            label: r.label,
            position: r.position,
            region: r.region,
            cost,
            first_stage_cost: w1,
            second_stage_cost: w2,
            rate: r.rate.unwrap_or(defaults.rate),
        };
        site.validate().map_err(|e| Error::parse(line, e.to_string()))?;
        sites.push(site);
    }
    Ok(Instance { network, sites })
}

/// Parses a network description, ignoring site records.
pub fn load_network(text: &str) -> Result<RoadNetwork> {
    parse_instance(text).map(|i| i.network)
}

fn fmt_region(out: &mut String, region: &CoverageRegion) {
    match region {
        CoverageRegion::Disk { radius, .. } => write!(out, " disk {radius}").unwrap(),
        CoverageRegion::FourSector { radii, .. } => {
            write!(out, " sectors {} {} {} {}", radii[0], radii[1], radii[2], radii[3]).unwrap()
        }
        CoverageRegion::Polygon { vertices } => {
            out.push_str(" poly");
            for v in vertices {
                write!(out, " {} {}", v.x, v.y).unwrap();
            }
        }
    }
}

impl Instance {
    /// Serializes to the text format; `parse_instance` reads it back unchanged.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for n in self.network.nodes() {
            write!(out, "node {} {} {}", n.label, n.position.x, n.position.y).unwrap();
            if n.artificial {
                out.push_str(" artificial");
            }
            out.push('\n');
        }
        for e in self.network.edges() {
            let (a, b) = e.endpoints;
            writeln!(
                out,
                "edge {} {} {} speed {} {} density {} {}",
                e.label,
                self.network.node(a).label,
                self.network.node(b).label,
                e.speed.lo,
                e.speed.hi,
                e.density.lo,
                e.density.hi
            )
            .unwrap();
        }
        for s in &self.sites {
            write!(out, "site {} {} {}", s.label, s.position.x, s.position.y).unwrap();
            fmt_region(&mut out, &s.region);
            writeln!(
                out,
                " cost {} cost2 {} {} rate {} {}",
                s.cost, s.first_stage_cost, s.second_stage_cost, s.rate.lo, s.rate.hi
            )
            .unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizontal_edge_gets_euclidean_length() {
        let net = load_network("node a 0 0\nnode b 3 0\nedge e a b\n").unwrap();
        assert_eq!(net.edges().len(), 1);
        assert!((net.edges()[0].length - 3.0).abs() < 1e-12);
        assert_eq!(net.edges()[0].speed, Interval::new(10.0, 20.0));
    }

    #[test]
    fn missing_node_reported_with_line_and_id() {
        let err = load_network("node a 0 0\nnode b 3 0\nedge e a zz\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3") && msg.contains("zz"), "{msg}");
    }

    #[test]
    fn disconnected_graph_rejected() {
        let err = load_network("node a 0 0\nnode b 1 0\nnode c 5 5\nnode d 6 5\nedge e1 a b\nedge e2 c d\n").unwrap_err();
        assert!(matches!(err, Error::Disconnected { .. }));
    }

    #[test]
    fn degenerate_edge_rejected() {
        let err = load_network("node a 0 0\nnode b 0 0\nedge e a b\n").unwrap_err();
        assert!(matches!(err, Error::DegenerateEdge { .. }));
    }

    #[test]
    fn positional_and_keyword_intervals() {
        let net = load_network("node a 0 0\nnode b 3 4\nnode c 3 0\nedge e a b 1 2 0.5 0.7\nedge f b c speed 3 4 length 4\n").unwrap();
        assert_eq!(net.edges()[0].speed, Interval::new(1.0, 2.0));
        assert_eq!(net.edges()[0].density, Interval::new(0.5, 0.7));
        assert!((net.edges()[0].length - 5.0).abs() < 1e-12);
        assert_eq!(net.edges()[1].speed, Interval::new(3.0, 4.0));
    }

    #[test]
    fn mismatched_declared_length_rejected() {
        assert!(load_network("node a 0 0\nnode b 3 0\nedge e a b length 4\n").is_err());
    }

    #[test]
    fn sites_parse_with_attributes_and_round_trip() {
        let text = "defaults rate 1 2\nnode a 0 0\nnode b 4 0\nedge e a b\n\
                    site s1 1 0 disk 0.5 cost 2 rate 3 4\n\
                    site s2 2 0 sectors 1 2 1 2 cost2 1 5\n\
                    site s3 3 0 poly 2.5 -1 3.5 -1 3.5 1 2.5 1\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.sites.len(), 3);
        assert_eq!(inst.sites[0].cost, 2.0);
        assert_eq!(inst.sites[0].rate, Interval::new(3.0, 4.0));
        assert_eq!((inst.sites[1].first_stage_cost, inst.sites[1].second_stage_cost), (1.0, 5.0));
        assert_eq!(inst.sites[2].rate, Interval::new(1.0, 2.0));
        let again = parse_instance(&inst.to_text()).unwrap();
        assert_eq!(again, inst);
    }

    #[test]
    fn second_stage_cheaper_than_first_rejected() {
        let text = "node a 0 0\nnode b 4 0\nedge e a b\nsite s 1 0 disk 1 cost2 3 2\n";
        assert!(parse_instance(text).is_err());
    }
}
