//! Deployment files.
//!
//! ```text
//! deploy a1            # single-stage site
//! deploy0 a1           # first-stage site of a two-stage plan
//! deploy sample#3 a2   # second-stage site for scenario `sample#3`
//! ```

use std::fmt::Write;

use crate::geometry::Instance;
use crate::ids::SiteId;
use crate::metrics::Deployment;
use crate::planner::{PlanResult, TwoStageResult};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeploymentFile {
    pub sites: Vec<SiteId>,
    pub first_stage: Vec<SiteId>,
    /// Augmentations in file order.
    pub second_stage: Vec<(String, Vec<SiteId>)>,
}

impl DeploymentFile {
    pub fn from_plan(plan: &PlanResult) -> Self {
        DeploymentFile { sites: plan.sites.clone(), ..Default::default() }
    }

    pub fn from_twostage(r: &TwoStageResult) -> Self {
        DeploymentFile {
            sites: Vec::new(),
            first_stage: r.first_stage.clone(),
            second_stage: r.scenarios.iter().cloned().zip(r.augmentations.iter().cloned()).collect(),
        }
    }

    /// Single-stage and first-stage sites together.
    pub fn base(&self, inst: &Instance) -> Result<Deployment> {
        Deployment::new(self.sites.iter().chain(&self.first_stage).copied(), &inst.sites)
    }

    pub fn to_text(&self, inst: &Instance) -> String {
        let label = |a: &SiteId| &inst.sites[a.index()].label;
        let mut s = String::new();
        for a in &self.sites {
            writeln!(s, "deploy {}", label(a)).unwrap();
        }
        for a in &self.first_stage {
            writeln!(s, "deploy0 {}", label(a)).unwrap();
        }
        for (k, sites) in &self.second_stage {
            for a in sites {
                writeln!(s, "deploy {k} {}", label(a)).unwrap();
            }
        }
        s
    }
}

pub fn parse_deployment(text: &str, inst: &Instance) -> Result<DeploymentFile> {
    let mut out = DeploymentFile::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if toks.is_empty() || toks[0].starts_with('#') {
            continue;
        }
        let site = |l: &str| inst.site_by_label(l).ok_or_else(|| Error::parse(line, format!("unknown site `{l}`")));
        match toks.as_slice() {
            ["deploy", a] => out.sites.push(site(a)?),
            ["deploy0", a] => out.first_stage.push(site(a)?),
            ["deploy", k, a] => {
                let a = site(a)?;
                match out.second_stage.iter_mut().find(|(l, _)| l == k) {
                    Some((_, v)) => v.push(a),
                    None => out.second_stage.push((k.to_string(), vec![a])),
                }
            }
            _ => return Err(Error::parse(line, "expected `deploy <site>`, `deploy0 <site>` or `deploy <scenario> <site>`")),
        }
    }
    Ok(out)
}
