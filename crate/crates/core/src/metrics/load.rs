use serde::{Deserialize, Serialize};

use super::Deployment;
use crate::geometry::PartitionIndex;
use crate::ids::SubsegmentId;
use crate::scenario::Scenario;

/// Load and rate quantities of one deployment under one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProfile {
    /// Expected users `u_l = h_l d_l` per subsegment.
    pub users: Vec<f64>,
    /// Deployed sites covering each subsegment (`n_l`).
    pub cover: Vec<usize>,
    /// Associated users `u_a` per site before flooring; 0 for undeployed sites.
    pub site_users: Vec<f64>,
    /// Per-user rate `r_l`.
    pub rate: Vec<f64>,
    /// Average rate `r_e(S)` per edge.
    pub edge_rate: Vec<f64>,
}

/// `u_l` for every subsegment.
fn subsegment_users(index: &PartitionIndex, scenario: &Scenario) -> Vec<f64> {
    index.subsegments().iter().map(|l| scenario.density[l.parent_edge.index()] * l.length).collect()
}

pub fn load_profile(index: &PartitionIndex, dep: &Deployment, scenario: &Scenario) -> LoadProfile {
    let users = subsegment_users(index, scenario);
    let cover: Vec<usize> = index.subsegments().iter().map(|l| index.cover_count(l.id, dep.mask())).collect();
    let mut site_users = vec![0.0; index.site_count()];
    for a in dep.sites() {
        site_users[a.index()] = index
            .site_subsegments(*a)
            .iter()
            .map(|l| users[l.index()] / cover[l.index()] as f64)
            .sum();
    }
    let rate: Vec<f64> = index
        .subsegments()
        .iter()
        .map(|l| {
            let n = cover[l.id.index()];
            if n == 0 {
                return 0.0;
            }
            let sum: f64 = l
                .covering_sites
                .iter()
                .filter(|a| dep.contains(**a))
                .map(|a| scenario.rate[a.index()] / site_users[a.index()].max(1.0))
                .sum();
            sum / n as f64
        })
        .collect();
    let edge_rate = (0..index.edge_count())
        .map(|e| {
            let subs = index.edge_subsegments(crate::ids::EdgeId::from_index(e));
            let d_e: f64 = subs.iter().map(|l| index.subsegment(*l).length).sum();
            subs.iter().map(|l| index.subsegment(*l).length * rate[l.index()]).sum::<f64>() / d_e
        })
        .collect();
    LoadProfile { users, cover, site_users, rate, edge_rate }
}

/// How per-subsegment rates are fixed when a metric must not depend on the
/// deployment's own load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RateBasis {
    /// Load model evaluated with every candidate site deployed.
    #[default]
    AllCandidates,
    /// Each site serves its whole footprint alone; the slowest covering site
    /// sets the rate. A lower bound on the rate under any deployment.
    Exclusive,
    /// The load induced by the evaluated deployment itself.
    Deployment,
}

/// Per-subsegment rate `r_l`, applied to covered subsegments only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub basis: RateBasis,
    rates: Vec<f64>,
}

impl RateTable {
    pub fn from_profile(profile: &LoadProfile) -> Self {
        RateTable { basis: RateBasis::Deployment, rates: profile.rate.clone() }
    }

    /// Rate table that does not depend on the deployment (`Deployment` basis aside).
    pub fn frozen(index: &PartitionIndex, scenario: &Scenario, basis: RateBasis) -> Self {
        match basis {
            RateBasis::AllCandidates | RateBasis::Deployment => {
                let all = vec![true; index.site_count()];
                let dep = Deployment { sites: (0..all.len()).map(crate::ids::SiteId::from_index).collect(), mask: all, cost: 0.0 };
                RateTable { basis: RateBasis::AllCandidates, rates: load_profile(index, &dep, scenario).rate }
            }
            RateBasis::Exclusive => {
                let users = subsegment_users(index, scenario);
                let footprint: Vec<f64> = (0..index.site_count())
                    .map(|a| index.site_subsegments(crate::ids::SiteId::from_index(a)).iter().map(|l| users[l.index()]).sum())
                    .collect();
                let rates = index
                    .subsegments()
                    .iter()
                    .map(|l| {
                        l.covering_sites
                            .iter()
                            .map(|a| scenario.rate[a.index()] / footprint[a.index()].max(1.0))
                            .fold(f64::INFINITY, f64::min)
                    })
                    .map(|r| if r.is_finite() { r } else { 0.0 })
                    .collect();
                RateTable { basis: RateBasis::Exclusive, rates }
            }
        }
    }

    /// Table for `basis`; the `Deployment` basis uses the load of `dep`.
    pub fn for_basis(index: &PartitionIndex, dep: &Deployment, scenario: &Scenario, basis: RateBasis) -> Self {
        match basis {
            RateBasis::Deployment => Self::from_profile(&load_profile(index, dep, scenario)),
            b => Self::frozen(index, scenario, b),
        }
    }

    /// Same rate everywhere; with rate 1 throughput becomes contact time.
    pub fn uniform(subsegments: usize, rate: f64) -> Self {
        RateTable { basis: RateBasis::AllCandidates, rates: vec![rate; subsegments] }
    }

    pub fn rate(&self, l: SubsegmentId) -> f64 {
        self.rates[l.index()]
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }
}
