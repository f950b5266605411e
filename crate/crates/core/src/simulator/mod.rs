//! Flow-level replay of a deployment against synthetic mobility.
//!
//! Users follow a [`MobilityTrace`]. Time advances in fixed ticks; at each
//! tick every user inside a deployed region keeps or picks an access point
//! and each point splits its rate equally among its associates.

mod mobility;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use mobility::{estimate_density, generate_mobility, parse_trace, Leg, MobilityTrace, Pass, UserTrace};

use crate::geometry::{PartitionIndex, RoadNetwork};
use crate::ids::{NodeId, SiteId};
use crate::metrics::Deployment;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Policy {
    /// Join the point with the fewest associates; ties go to the most
    /// recently entered region, then the lowest site id.
    #[default]
    LeastLoaded,
    /// Join a uniformly random point among those in range.
    Random,
}

impl std::str::FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "least" | "least-loaded" => Ok(Policy::LeastLoaded),
            "random" => Ok(Policy::Random),
            _ => Err(Error::Usage(format!("unknown policy `{s}` (least|random)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub policy: Policy,
    /// Tick length in seconds.
    pub timestep: f64,
    /// Seed for the random association policy.
    pub seed: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { policy: Policy::LeastLoaded, timestep: 1.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LegStat {
    pub user: usize,
    pub from: NodeId,
    pub to: NodeId,
    pub start: f64,
    pub end: f64,
    pub complete: bool,
    /// Time-average rate over the leg, Mbps.
    pub mean_rate: f64,
}

/// Completed legs grouped by unordered endpoint pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathStat {
    pub from: NodeId,
    pub to: NodeId,
    pub legs: usize,
    pub mean_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Summary::default();
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| v[((p * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1];
        Summary { count: v.len(), mean: v.iter().sum::<f64>() / v.len() as f64, p10: q(0.1), p50: q(0.5), p90: q(0.9) }
    }
}

/// `(x, fraction of values >= x)` at each distinct value, ascending.
pub fn ccdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in v.iter().enumerate() {
        if out.last().is_none_or(|l| l.0 != x) {
            out.push((x, (v.len() - i) as f64 / n));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub policy: Policy,
    pub timestep: f64,
    pub duration: f64,
    pub ticks: usize,
    /// Estimated users per metre on each edge.
    pub density: Vec<f64>,
    /// Time-average rate of each user over the whole trace.
    pub user_mean: Vec<f64>,
    pub legs: Vec<LegStat>,
    pub paths: Vec<PathStat>,
    /// Mean rate over user-ticks spent associated with some point.
    pub associated_mean: f64,
    pub leg_summary: Summary,
    /// Sum of deployed site rates.
    pub capacity: f64,
    /// Largest total rate handed out in any tick.
    pub peak_total: f64,
}

impl SimReport {
    pub fn min_path_rate(&self) -> Option<f64> {
        self.paths.iter().map(|p| p.mean_rate).min_by(f64::total_cmp)
    }
}

#[derive(Clone, Default)]
struct UserState {
    leg: usize,
    pass: usize,
    assoc: Option<SiteId>,
    /// Deployed sites in range with the tick the user entered each region.
    in_range: Vec<(SiteId, usize)>,
    /// Entered a new region this tick.
    fresh: bool,
}

/// Sweeps the trace in ticks and reports per-user, per-leg and per-path
/// rates. `rates` holds one rate per candidate site.
pub fn evaluate_throughput(
    net: &RoadNetwork,
    index: &PartitionIndex,
    trace: &MobilityTrace,
    dep: &Deployment,
    rates: &[f64],
    opts: &SimOptions,
) -> Result<SimReport> {
    if !(opts.timestep > 0.0) || !opts.timestep.is_finite() {
        return Err(Error::Usage(format!("timestep must be positive, got {}", opts.timestep)));
    }
    if rates.len() != index.site_count() {
        return Err(Error::Invalid(format!("expected {} site rates, got {}", index.site_count(), rates.len())));
    }
    if rates.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
        return Err(Error::Numeric("site rates must be finite and nonnegative".into()));
    }
    let mask = dep.mask();
    let ticks = (trace.duration / opts.timestep - 1e-9).ceil().max(0.0) as usize;
    let mut states = vec![UserState::default(); trace.users.len()];
    let mut user_acc = vec![0.0; trace.users.len()];
    let mut leg_acc: Vec<Vec<(f64, f64)>> = trace.users.iter().map(|u| vec![(0.0, 0.0); u.legs.len()]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut load = vec![0usize; rates.len()];
    let (mut assoc_time, mut assoc_rate, mut peak) = (0.0, 0.0, 0.0f64);

    for k in 0..ticks {
        let t0 = k as f64 * opts.timestep;
        let w = (t0 + opts.timestep).min(trace.duration) - t0;
        let tm = t0 + w / 2.0;
        states.par_iter_mut().zip(&trace.users).for_each(|(st, user)| {
            while st.leg < user.legs.len() {
                let leg = &user.legs[st.leg];
                if st.pass < leg.passes.len() && leg.passes[st.pass].t1 <= tm {
                    st.pass += 1;
                } else if st.pass >= leg.passes.len() {
                    st.leg += 1;
                    st.pass = 0;
                } else {
                    break;
                }
            }
            let Some(p) = user.legs.get(st.leg).map(|l| &l.passes[st.pass]) else {
                st.in_range.clear();
                st.assoc = None;
                return;
            };
            let l = index.locate(p.edge, p.offset_at(tm));
            let here: Vec<SiteId> = index.subsegment(l).covering_sites.iter().copied().filter(|a| mask[a.index()]).collect();
            st.in_range.retain(|(a, _)| here.contains(a));
            st.fresh = false;
            for a in here {
                if !st.in_range.iter().any(|(b, _)| *b == a) {
                    st.in_range.push((a, k));
                    st.fresh = true;
                }
            }
            if st.assoc.is_some_and(|a| !st.in_range.iter().any(|(b, _)| *b == a)) {
                st.assoc = None;
            }
        });

        load.iter_mut().for_each(|x| *x = 0);
        for st in &states {
            if let Some(a) = st.assoc {
                load[a.index()] += 1;
            }
        }
        // least-loaded users reconsider whenever a new region comes into range
        for st in states.iter_mut() {
            let reconsider = st.assoc.is_none() || (st.fresh && opts.policy == Policy::LeastLoaded);
            if !reconsider || st.in_range.is_empty() {
                continue;
            }
            if let Some(a) = st.assoc.take() {
                load[a.index()] -= 1;
            }
            let pick = match opts.policy {
                Policy::LeastLoaded => {
                    st.in_range.iter().min_by(|x, y| {
                        load[x.0.index()].cmp(&load[y.0.index()]).then(y.1.cmp(&x.1)).then(x.0.cmp(&y.0))
                    })
                    .expect("nonempty")
                    .0
                }
                Policy::Random => st.in_range[rng.gen_range(0..st.in_range.len())].0,
            };
            load[pick.index()] += 1;
            st.assoc = Some(pick);
        }

        let mut total = 0.0;
        for (u, st) in states.iter().enumerate() {
            let Some(a) = st.assoc else { continue };
            let r = rates[a.index()] / load[a.index()] as f64;
            total += r;
            user_acc[u] += r * w;
            assoc_time += w;
            assoc_rate += r * w;
            leg_acc[u][st.leg].0 += r * w;
        }
        for (u, st) in states.iter().enumerate() {
            if st.leg < leg_acc[u].len() {
                leg_acc[u][st.leg].1 += w;
            }
        }
        peak = peak.max(total);
    }

    let mut legs = Vec::new();
    for (u, user) in trace.users.iter().enumerate() {
        for (i, leg) in user.legs.iter().enumerate() {
            let (rw, tw) = leg_acc[u][i];
            legs.push(LegStat {
                user: u,
                from: leg.from,
                to: leg.to,
                start: leg.start(),
                end: leg.end(),
                complete: leg.is_complete(net),
                mean_rate: if tw > 0.0 { rw / tw } else { 0.0 },
            });
        }
    }
    let mut groups: BTreeMap<(NodeId, NodeId), Vec<f64>> = BTreeMap::new();
    for l in legs.iter().filter(|l| l.complete) {
        groups.entry((l.from.min(l.to), l.from.max(l.to))).or_default().push(l.mean_rate);
    }
    let paths = groups
        .into_iter()
        .map(|((from, to), v)| PathStat { from, to, legs: v.len(), mean_rate: v.iter().sum::<f64>() / v.len() as f64 })
        .collect();
    let complete: Vec<f64> = legs.iter().filter(|l| l.complete).map(|l| l.mean_rate).collect();
    Ok(SimReport {
        policy: opts.policy,
        timestep: opts.timestep,
        duration: trace.duration,
        ticks,
        density: estimate_density(net, trace),
        user_mean: user_acc.iter().map(|x| x / trace.duration).collect(),
        leg_summary: Summary::of(&complete),
        legs,
        paths,
        associated_mean: if assoc_time > 0.0 { assoc_rate / assoc_time } else { 0.0 },
        capacity: dep.sites().iter().map(|a| rates[a.index()]).fold(0.0, |a, b| a + b),
        peak_total: peak,
    })
}
