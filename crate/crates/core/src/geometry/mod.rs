//! Road network, coverage shapes and the subsegment partition they induce.

mod format;
mod network;
mod partition;
mod region;

pub use format::{parse_instance, load_network, Instance, InstanceDefaults};
pub use network::{RoadEdge, RoadNetwork, RoadNode};
pub use partition::{covered_subsegments, partition_edges, PartitionIndex, Subsegment};
pub use region::{region_contains, CoverageRegion};

use serde::{Deserialize, Serialize};

use crate::ids::SiteId;

/// Breakpoint deduplication and tiling tolerance, in meters.
pub const EPS_GEO: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, o: Point) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Point at parameter `t` in [0, 1] on the segment `self -> o`.
    pub fn lerp(self, o: Point, t: f64) -> Point {
        Point::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }
}

/// Closed real interval `[lo, hi]` with `0 < lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn is_positive_ordered(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo > 0.0 && self.lo <= self.hi
    }
}

/// A deployable access-point location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSite {
    pub id: SiteId,
    pub label: String,
    pub position: Point,
    pub region: CoverageRegion,
    /// Single-stage cost `w_a`.
    pub cost: f64,
    /// First-stage cost in the two-stage model.
    pub first_stage_cost: f64,
    /// Second-stage cost in the two-stage model; never below the first-stage cost.
    pub second_stage_cost: f64,
    /// Available rate for mobile users, Mbps.
    pub rate: Interval,
}

impl CandidateSite {
    pub fn validate(&self) -> crate::Result<()> {
        let bad = |m: String| Err(crate::Error::Invalid(format!("site `{}`: {m}", self.label)));
        if !self.position.is_finite() {
            return bad("non-finite position".into());
        }
        self.region.validate().or_else(|e| bad(e))?;
        for (name, w) in [
            ("cost", self.cost),
            ("first-stage cost", self.first_stage_cost),
            ("second-stage cost", self.second_stage_cost),
        ] {
            if !(w.is_finite() && w >= 0.0) {
                return bad(format!("{name} must be a nonnegative number, got {w}"));
            }
        }
        if self.second_stage_cost < self.first_stage_cost {
            return bad("second-stage cost is below first-stage cost".into());
        }
        if !self.rate.is_positive_ordered() {
            return bad(format!("rate interval [{}, {}] is not 0 < r1 <= r2", self.rate.lo, self.rate.hi));
        }
        Ok(())
    }
}
