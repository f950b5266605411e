use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use super::{Point, EPS_GEO};

/// Coverage shape of a candidate site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CoverageRegion {
    Disk { center: Point, radius: f64 },
    /// Four axis-aligned 90 degree sectors. `radii[q]` covers angles in
    /// `[q * 90, (q + 1) * 90)` degrees measured counterclockwise from +x.
    FourSector { center: Point, radii: [f64; 4] },
    /// Simple polygon, counterclockwise, implicitly closed.
    Polygon { vertices: Vec<Point> },
}

impl CoverageRegion {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            CoverageRegion::Disk { center, radius } => {
                if !center.is_finite() || !(radius.is_finite() && *radius > 0.0) {
                    return Err(format!("disk radius must be positive, got {radius}"));
                }
            }
            CoverageRegion::FourSector { center, radii } => {
                if !center.is_finite() || radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
                    return Err(format!("sector radii must be positive, got {radii:?}"));
                }
            }
            CoverageRegion::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err("polygon needs at least 3 vertices".into());
                }
                if vertices.iter().any(|p| !p.is_finite()) {
                    return Err("polygon has a non-finite vertex".into());
                }
                if signed_area(vertices) <= 0.0 {
                    return Err("polygon must be counterclockwise with positive area".into());
                }
                if !is_simple(vertices) {
                    return Err("polygon is not simple".into());
                }
            }
        }
        Ok(())
    }

    /// Quadrant index of `p` relative to `center`; boundary rays belong to the
    /// counterclockwise-next sector.
    pub fn quadrant(center: Point, p: Point) -> usize {
        let mut a = (p.y - center.y).atan2(p.x - center.x);
        if a < 0.0 {
            a += TAU;
        }
        ((a / FRAC_PI_2).floor() as usize).min(3)
    }
}

/// True iff `p` lies in the closed region.
pub fn region_contains(region: &CoverageRegion, p: Point) -> bool {
    match region {
        CoverageRegion::Disk { center, radius } => center.dist(p) <= *radius + EPS_GEO,
        CoverageRegion::FourSector { center, radii } => {
            let q = CoverageRegion::quadrant(*center, p);
            center.dist(p) <= radii[q] + EPS_GEO
        }
        CoverageRegion::Polygon { vertices } => point_in_polygon(vertices, p),
    }
}

pub(crate) fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
        * 0.5
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    let len = a.dist(b);
    if len == 0.0 {
        return a.dist(p) <= EPS_GEO;
    }
    (cross(a, b, p) / len).abs() <= EPS_GEO
        && p.x >= a.x.min(b.x) - EPS_GEO
        && p.x <= a.x.max(b.x) + EPS_GEO
        && p.y >= a.y.min(b.y) - EPS_GEO
        && p.y <= a.y.max(b.y) + EPS_GEO
}

fn point_in_polygon(v: &[Point], p: Point) -> bool {
    let n = v.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        if on_segment(a, b, p) {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

fn is_simple(v: &[Point]) -> bool {
    let n = v.len();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        for j in i + 1..n {
            // adjacent edges share a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (v[j], v[(j + 1) % n]);
            if segments_cross(a, b, c, d) || on_segment(a, b, c) || on_segment(a, b, d) {
                return false;
            }
        }
    }
    true
}

/// Parameters `t` in [0, 1] where the segment `a -> b` meets the circle.
pub(crate) fn segment_circle_params(a: Point, b: Point, c: Point, r: f64) -> Vec<f64> {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let (fx, fy) = (a.x - c.x, a.y - c.y);
    let qa = dx * dx + dy * dy;
    if qa == 0.0 {
        return Vec::new();
    }
    let qb = 2.0 * (fx * dx + fy * dy);
    let qc = fx * fx + fy * fy - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    // numerically stable root pair
    let q = -0.5 * (qb + qb.signum() * sq);
    let mut roots = Vec::with_capacity(2);
    if q != 0.0 {
        roots.push(q / qa);
        roots.push(qc / q);
    } else {
        roots.push(0.0);
    }
    roots.retain(|t| t.is_finite() && *t >= 0.0 && *t <= 1.0);
    roots
}

/// Parameters on `a -> b` where it meets segment `c -> d`; a collinear overlap
/// contributes both overlap endpoints.
pub(crate) fn segment_segment_params(a: Point, b: Point, c: Point, d: Point) -> Vec<f64> {
    let (rx, ry) = (b.x - a.x, b.y - a.y);
    let (sx, sy) = (d.x - c.x, d.y - c.y);
    let denom = rx * sy - ry * sx;
    let len2 = rx * rx + ry * ry;
    if len2 == 0.0 {
        return Vec::new();
    }
    let (qx, qy) = (c.x - a.x, c.y - a.y);
    let scale = len2.sqrt() * (sx * sx + sy * sy).sqrt();
    if denom.abs() <= 1e-12 * scale {
        // parallel; only collinear overlap matters
        if (qx * ry - qy * rx).abs() / len2.sqrt() > EPS_GEO {
            return Vec::new();
        }
        let t0 = (qx * rx + qy * ry) / len2;
        let t1 = ((d.x - a.x) * rx + (d.y - a.y) * ry) / len2;
        return [t0, t1].into_iter().filter(|t| *t >= 0.0 && *t <= 1.0).collect();
    }
    let t = (qx * sy - qy * sx) / denom;
    let u = (qx * ry - qy * rx) / denom;
    let tol = 1e-12;
    if t >= -tol && t <= 1.0 + tol && u >= -tol && u <= 1.0 + tol {
        vec![t.clamp(0.0, 1.0)]
    } else {
        Vec::new()
    }
}

impl CoverageRegion {
    /// Parameters in [0, 1] along `a -> b` where the region boundary may be
    /// crossed. Supersets are fine: the partition merges equal-cover pieces.
    pub(crate) fn boundary_params(&self, a: Point, b: Point) -> Vec<f64> {
        match self {
            CoverageRegion::Disk { center, radius } => segment_circle_params(a, b, *center, *radius),
            CoverageRegion::FourSector { center, radii } => {
                let mut out = Vec::new();
                for r in radii {
                    out.extend(segment_circle_params(a, b, *center, *r));
                }
                let reach = radii.iter().cloned().fold(0.0, f64::max);
                let rays = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
                for (ux, uy) in rays {
                    let end = Point::new(center.x + ux * reach, center.y + uy * reach);
                    out.extend(segment_segment_params(a, b, *center, end));
                }
                out
            }
            CoverageRegion::Polygon { vertices } => {
                let n = vertices.len();
                (0..n)
                    .flat_map(|i| segment_segment_params(a, b, vertices[i], vertices[(i + 1) % n]))
                    .collect()
            }
        }
    }
}
