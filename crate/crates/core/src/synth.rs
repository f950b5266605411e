//! Synthetic instances: jittered street grids with a four-sector candidate
//! site at every intersection, and a straight calibration road.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{CandidateSite, CoverageRegion, Instance, Interval, Point, RoadEdge, RoadNetwork, RoadNode};
use crate::ids::{EdgeId, NodeId, SiteId};

/// Parameters of a synthetic street grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    /// Block length, m.
    pub spacing: f64,
    /// Node displacement as a fraction of `spacing`.
    pub jitter: f64,
    /// Fraction of grid edges removed (connectivity is preserved).
    pub removal: f64,
    pub speed: Interval,
    /// Range for the lower density bound of each edge, users/m.
    pub density: Interval,
    /// Upper density bound as a multiple of the lower one.
    pub density_spread: f64,
    pub rate: Interval,
    /// Range of each sector radius, m.
    pub sector_radius: Interval,
    pub cost: f64,
    /// Second-stage cost as a multiple of the first-stage cost.
    pub inflation: f64,
}

impl GridSpec {
    /// About 200 intersections over roughly 2 km square.
    pub fn desk() -> Self {
        GridSpec {
            rows: 14,
            cols: 14,
            spacing: 150.0,
            jitter: 0.2,
            removal: 0.15,
            speed: Interval::new(10.0, 20.0),
            density: Interval::new(0.004, 0.012),
            density_spread: 1.5,
            rate: Interval::new(5.0, 10.0),
            sector_radius: Interval::new(150.0, 250.0),
            cost: 1.0,
            inflation: 1.0,
        }
    }

    pub fn small() -> Self {
        GridSpec { rows: 6, cols: 6, ..Self::desk() }
    }

    /// Twelve sites with short sectors, small enough for exhaustive search.
    pub fn tiny() -> Self {
        GridSpec { rows: 3, cols: 4, removal: 0.1, sector_radius: Interval::new(40.0, 110.0), ..Self::desk() }
    }

    /// Minimum shortest-path length for sampled movements.
    pub fn min_path_length(&self) -> f64 {
        let extent = self.spacing * (self.rows.max(self.cols) - 1) as f64;
        (extent / 2.0).max(self.spacing)
    }

    pub fn with_inflation(mut self, f: f64) -> Self {
        self.inflation = f;
        self
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn connected_without(n: usize, edges: &[(usize, usize)], keep: &[bool]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    let mut comps = n;
    for (i, &(a, b)) in edges.iter().enumerate() {
        if keep[i] {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
                comps -= 1;
            }
        }
    }
    comps == 1
}

fn uniform(rng: &mut ChaCha8Rng, iv: Interval) -> f64 {
    iv.lo + (iv.hi - iv.lo) * rng.gen::<f64>()
}

/// Random street grid with one four-sector site per intersection.
pub fn grid_network(spec: &GridSpec, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rows, cols) = (spec.rows.max(1), spec.cols.max(2));
    let mut nodes = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let j = spec.jitter * spec.spacing;
            let x = c as f64 * spec.spacing + rng.gen_range(-0.5..0.5) * j;
            let y = r as f64 * spec.spacing + rng.gen_range(-0.5..0.5) * j;
            nodes.push(RoadNode {
                id: NodeId::from_index(nodes.len()),
                label: format!("n{r}_{c}"),
                position: Point::new(x, y),
                artificial: false,
            });
        }
    }
    let mut pairs = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            if c + 1 < cols {
                pairs.push((i, i + 1));
            }
            if r + 1 < rows {
                pairs.push((i, i + cols));
            }
        }
    }
    let mut keep = vec![true; pairs.len()];
    let target = (spec.removal * pairs.len() as f64).round() as usize;
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut rng);
    let mut removed = 0;
    for i in order {
        if removed == target {
            break;
        }
        keep[i] = false;
        if connected_without(nodes.len(), &pairs, &keep) {
            removed += 1;
        } else {
            keep[i] = true;
        }
    }
    let edges: Vec<RoadEdge> = pairs
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .enumerate()
        .map(|(i, (&(a, b), _))| {
            let h = uniform(&mut rng, spec.density);
            RoadEdge {
                id: EdgeId::from_index(i),
                label: format!("e{i}"),
                endpoints: (NodeId::from_index(a), NodeId::from_index(b)),
                length: nodes[a].position.dist(nodes[b].position),
                speed: spec.speed,
                density: Interval::new(h, h * spec.density_spread),
            }
        })
        .collect();
    let sites = nodes
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let radii = [0; 4].map(|_| uniform(&mut rng, spec.sector_radius));
            CandidateSite {
                id: SiteId::from_index(i),
                label: format!("s{}", &n.label[1..]),
                position: n.position,
                region: CoverageRegion::FourSector { center: n.position, radii },
                cost: spec.cost,
                first_stage_cost: spec.cost,
                second_stage_cost: spec.cost * spec.inflation,
                rate: spec.rate,
            }
        })
        .collect();
    let network = RoadNetwork::new(nodes, edges).expect("grid construction keeps the network valid");
    Instance { network, sites }
}

/// Straight road of `segments` equal edges with one disk site at the middle.
pub fn calibration_line(length: f64, segments: usize, radius: f64, speed: Interval, rate: f64) -> Instance {
    let segments = segments.max(2);
    let nodes: Vec<RoadNode> = (0..=segments)
        .map(|i| RoadNode {
            id: NodeId::from_index(i),
            label: format!("x{i}"),
            position: Point::new(length * i as f64 / segments as f64, 0.0),
            artificial: i != 0 && i != segments,
        })
        .collect();
    let edges = (0..segments)
        .map(|i| RoadEdge {
            id: EdgeId::from_index(i),
            label: format!("e{i}"),
            endpoints: (NodeId::from_index(i), NodeId::from_index(i + 1)),
            length: length / segments as f64,
            speed,
            density: Interval::new(0.01, 0.01),
        })
        .collect();
    let center = Point::new(length / 2.0, 0.0);
    let sites = vec![CandidateSite {
        id: SiteId(0),
        label: "mid".into(),
        position: center,
        region: CoverageRegion::Disk { center, radius },
        cost: 1.0,
        first_stage_cost: 1.0,
        second_stage_cost: 1.0,
        rate: Interval::new(rate, rate),
    }];
    Instance { network: RoadNetwork::new(nodes, edges).expect("line network is valid"), sites }
}
