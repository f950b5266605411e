use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{region_contains, CandidateSite, CoverageRegion, Point, RoadNetwork, EPS_GEO};
use crate::ids::{EdgeId, SiteId, SubsegmentId};
use crate::{Error, Result};

/// Maximal piece of an edge over which the set of covering sites is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subsegment {
    pub id: SubsegmentId,
    pub parent_edge: EdgeId,
    pub start: f64,
    pub end: f64,
    pub length: f64,
    /// Sites whose region contains the open interval, ascending.
    pub covering_sites: Vec<SiteId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionIndex {
    subsegments: Vec<Subsegment>,
    by_edge: Vec<Vec<SubsegmentId>>,
    by_site: Vec<Vec<SubsegmentId>>,
    eps: f64,
}

impl PartitionIndex {
    pub fn subsegments(&self) -> &[Subsegment] {
        &self.subsegments
    }

    pub fn subsegment(&self, id: SubsegmentId) -> &Subsegment {
        &self.subsegments[id.index()]
    }

    /// Subsegments of an edge ordered by offset.
    pub fn edge_subsegments(&self, e: EdgeId) -> &[SubsegmentId] {
        &self.by_edge[e.index()]
    }

    /// Subsegments inside the coverage region of a site.
    pub fn site_subsegments(&self, a: SiteId) -> &[SubsegmentId] {
        &self.by_site[a.index()]
    }

    pub fn site_count(&self) -> usize {
        self.by_site.len()
    }

    pub fn edge_count(&self) -> usize {
        self.by_edge.len()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Subsegment of edge `e` containing arclength `offset`.
    pub fn locate(&self, e: EdgeId, offset: f64) -> SubsegmentId {
        let subs = &self.by_edge[e.index()];
        let k = subs.partition_point(|s| self.subsegments[s.index()].end <= offset);
        subs[k.min(subs.len() - 1)]
    }

    /// `n_l` for a deployment given as a membership mask over sites.
    pub fn cover_count(&self, l: SubsegmentId, deployed: &[bool]) -> usize {
        self.subsegments[l.index()].covering_sites.iter().filter(|a| deployed[a.index()]).count()
    }
}

fn reach(region: &CoverageRegion) -> (Point, f64) {
    match region {
        CoverageRegion::Disk { center, radius } => (*center, *radius),
        CoverageRegion::FourSector { center, radii } => (*center, radii.iter().cloned().fold(0.0, f64::max)),
        CoverageRegion::Polygon { vertices } => {
            let n = vertices.len() as f64;
            let c = Point::new(
                vertices.iter().map(|p| p.x).sum::<f64>() / n,
                vertices.iter().map(|p| p.y).sum::<f64>() / n,
            );
            (c, vertices.iter().map(|p| p.dist(c)).fold(0.0, f64::max))
        }
    }
}

fn segment_point_distance(a: Point, b: Point, p: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    a.lerp(b, t).dist(p)
}

struct EdgePieces {
    pieces: Vec<(f64, f64, Vec<SiteId>)>,
}

fn partition_one_edge(net: &RoadNetwork, e: EdgeId, sites: &[CandidateSite], reaches: &[(Point, f64)]) -> Result<EdgePieces> {
    let edge = net.edge(e);
    let (a, b) = net.edge_points(e);
    let len = edge.length;
    let mut touching = Vec::new();
    let mut cuts = vec![0.0, len];
    for (s, &(c, r)) in sites.iter().zip(reaches) {
        if segment_point_distance(a, b, c) > r + EPS_GEO {
            continue;
        }
        touching.push(s);
        for t in s.region.boundary_params(a, b) {
            if !t.is_finite() {
                return Err(Error::Intersection {
                    edge: edge.label.clone(),
                    site: s.label.clone(),
                    msg: "non-finite intersection parameter".into(),
                });
            }
            cuts.push((t * len).clamp(0.0, len));
        }
    }
    cuts.sort_by(f64::total_cmp);
    // dedupe within tolerance, pinning the end at exactly `len`
    let mut marks: Vec<f64> = Vec::with_capacity(cuts.len());
    for c in cuts {
        match marks.last() {
            Some(&last) if c - last <= EPS_GEO => {}
            _ => marks.push(c),
        }
    }
    if let Some(last) = marks.last_mut() {
        if len - *last <= EPS_GEO {
            *last = len;
        } else {
            marks.push(len);
        }
    }
    let mut pieces: Vec<(f64, f64, Vec<SiteId>)> = Vec::new();
    for w in marks.windows(2) {
        let (s, t) = (w[0], w[1]);
        let mid = net.point_at(e, 0.5 * (s + t));
        let cover: Vec<SiteId> = touching.iter().filter(|site| region_contains(&site.region, mid)).map(|site| site.id).collect();
        match pieces.last_mut() {
            Some(prev) if prev.2 == cover => prev.1 = t,
            _ => pieces.push((s, t, cover)),
        }
    }
    Ok(EdgePieces { pieces })
}

/// Splits every edge at the boundaries of the candidate coverage regions.
pub fn partition_edges(net: &RoadNetwork, sites: &[CandidateSite]) -> Result<PartitionIndex> {
    for (i, s) in sites.iter().enumerate() {
        if s.id.index() != i {
            return Err(Error::Invalid(format!("site `{}` has id {} at position {i}", s.label, s.id.0)));
        }
    }
    let reaches: Vec<_> = sites.iter().map(|s| reach(&s.region)).collect();
    let per_edge: Vec<EdgePieces> = (0..net.edges().len())
        .into_par_iter()
        .map(|i| partition_one_edge(net, EdgeId::from_index(i), sites, &reaches))
        .collect::<Result<_>>()?;

    let mut subsegments = Vec::new();
    let mut by_edge = Vec::with_capacity(per_edge.len());
    let mut by_site = vec![Vec::new(); sites.len()];
    for (i, ep) in per_edge.into_iter().enumerate() {
        let mut ids = Vec::with_capacity(ep.pieces.len());
        for (start, end, cover) in ep.pieces {
            // clamping can leave -0.0 at the edge start
            let start = start + 0.0;
            let id = SubsegmentId::from_index(subsegments.len());
            for a in &cover {
                by_site[a.index()].push(id);
            }
            subsegments.push(Subsegment {
                id,
                parent_edge: EdgeId::from_index(i),
                start,
                end,
                length: end - start,
                covering_sites: cover,
            });
            ids.push(id);
        }
        let total: f64 = ids.iter().map(|l: &SubsegmentId| subsegments[l.index()].length).sum();
        let d = net.edges()[i].length;
        if (total - d).abs() > EPS_GEO.max(1e-12 * d) {
            return Err(Error::Numeric(format!("subsegments of edge `{}` sum to {total}, expected {d}", net.edges()[i].label)));
        }
        by_edge.push(ids);
    }
    Ok(PartitionIndex { subsegments, by_edge, by_site, eps: EPS_GEO })
}

/// `L_S`: subsegments covered by at least one site of the deployment, ascending.
pub fn covered_subsegments(index: &PartitionIndex, deployment: &[SiteId]) -> Result<Vec<SubsegmentId>> {
    let mut mark = vec![false; index.subsegments.len()];
    for a in deployment {
        let subs = index
            .by_site
            .get(a.index())
            .ok_or_else(|| Error::UnknownId { kind: "site", id: format!("#{}", a.0) })?;
        for l in subs {
            mark[l.index()] = true;
        }
    }
    Ok(mark.iter().enumerate().filter(|(_, m)| **m).map(|(i, _)| SubsegmentId::from_index(i)).collect())
}
