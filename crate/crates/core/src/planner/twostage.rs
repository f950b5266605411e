use serde::{Deserialize, Serialize};

use super::engine::RunOptions;
use super::{build_engine, min_of, objective_terms, site_elements, AuditStep, Context, Element, PlanResult};
use crate::geometry::CandidateSite;
use crate::ids::SiteId;
use crate::metrics::{Deployment, Objective, RateBasis};
use crate::scenario::{mean_scenario, Scenario};
use crate::{Error, Result};

/// Which cost of a site a planner pays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostStage {
    Single,
    First,
    Second,
}

impl CostStage {
    pub fn of(self, s: &CandidateSite) -> f64 {
        match self {
            CostStage::Single => s.cost,
            CostStage::First => s.first_stage_cost,
            CostStage::Second => s.second_stage_cost,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStageOptions {
    pub basis: RateBasis,
    pub naive: bool,
    /// Drop second-stage copies that are redundant given the first stage.
    pub prune: bool,
}

impl Default for TwoStageOptions {
    fn default() -> Self {
        TwoStageOptions { basis: RateBasis::AllCandidates, naive: false, prune: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStageResult {
    pub method: String,
    pub first_stage: Vec<SiteId>,
    pub scenarios: Vec<String>,
    /// Second-stage sites per scenario, disjoint from the first stage.
    pub augmentations: Vec<Vec<SiteId>>,
    pub first_cost: f64,
    /// `(1/N) Σ_k w₂(S_k)`.
    pub second_cost_mean: f64,
    pub total: f64,
    /// Cost of the selected copies before pruning.
    pub copy_cost: Option<f64>,
    /// `(scenario, site)` copies removed by pruning.
    pub pruned: Vec<(usize, SiteId)>,
    pub audit: Vec<AuditStep>,
    pub evaluations: u64,
}

impl TwoStageResult {
    fn finish(&mut self, sites: &[CandidateSite]) {
        self.first_cost = self.first_stage.iter().map(|a| sites[a.index()].first_stage_cost).fold(0.0, |a, b| a + b);
        let n = self.augmentations.len().max(1) as f64;
        self.second_cost_mean = self
            .augmentations
            .iter()
            .map(|s| s.iter().map(|a| sites[a.index()].second_stage_cost).fold(0.0, |a, b| a + b))
            .fold(0.0, |a, b| a + b)
            / n;
        self.total = self.first_cost + self.second_cost_mean;
    }
}

fn achievable(ctx: &Context, scenarios: &[Scenario], basis: RateBasis) -> Result<f64> {
    let all = Deployment::full(&ctx.instance.sites);
    let v = ctx.values(&Objective::ThroughputSet { scenarios: scenarios.to_vec(), basis }, &all)?;
    Ok(min_of(&v))
}

/// Sample-average two-stage plan over the given learning scenarios.
pub fn twostage_saa(ctx: &Context, lambda: f64, learning: &[Scenario], opts: &TwoStageOptions) -> Result<TwoStageResult> {
    let big_n = learning.len();
    if big_n == 0 {
        return Err(Error::Usage("at least one learning scenario is needed".into()));
    }
    let n = ctx.site_count();
    let mut res = TwoStageResult {
        method: "saa".into(),
        first_stage: Vec::new(),
        scenarios: learning.iter().map(|k| k.label.clone()).collect(),
        augmentations: vec![Vec::new(); big_n],
        first_cost: 0.0,
        second_cost_mean: 0.0,
        total: 0.0,
        copy_cost: Some(0.0),
        pruned: Vec::new(),
        audit: Vec::new(),
        evaluations: 0,
    };
    if lambda <= 0.0 {
        res.finish(&ctx.instance.sites);
        return Ok(res);
    }
    let objective = Objective::ThroughputSet { scenarios: learning.to_vec(), basis: opts.basis };
    let terms = objective_terms(ctx, &objective)?;
    let mut elements: Vec<Element> = site_elements(ctx, |s| s.first_stage_cost);
    for k in 0..big_n {
        elements.extend(
            ctx.instance.sites.iter().map(|s| Element { site: s.id, group: Some(k), cost: s.second_stage_cost / big_n as f64 }),
        );
    }
    let engine = build_engine(ctx, &terms, &elements, lambda);
    let run = engine.run(&RunOptions { lazy: !opts.naive, initial: Vec::new(), budget: None });
    if run.full_value != run.max_value {
        return Err(Error::Infeasible { target: lambda, achievable: achievable(ctx, learning, opts.basis)? });
    }
    res.evaluations = run.evaluations;
    res.copy_cost = Some(run.cost);
    let mut chosen: Vec<usize> = Vec::new();
    for p in &run.picks {
        let (copy, site) = (p.element / n, SiteId::from_index(p.element % n));
        res.audit.push(AuditStep { site, copy: Some(copy), gain: p.gain, cost_effectiveness: p.ratio });
        chosen.push(p.element);
        if copy == 0 {
            res.first_stage.push(site);
        } else {
            res.augmentations[copy - 1].push(site);
        }
    }
    if opts.prune {
        let in_first: Vec<bool> = (0..n).map(|a| res.first_stage.contains(&SiteId::from_index(a))).collect();
        for k in 0..big_n {
            let mut kept = res.augmentations[k].clone();
            for a in res.augmentations[k].iter().rev() {
                let elem = (k + 1) * n + a.index();
                let without: Vec<usize> = chosen.iter().copied().filter(|e| *e != elem).collect();
                if in_first[a.index()] || engine.value_of(without.iter().copied()) == run.max_value {
                    chosen = without;
                    kept.retain(|x| x != a);
                    res.pruned.push((k, *a));
                }
            }
            res.augmentations[k] = kept;
        }
    }
    res.finish(&ctx.instance.sites);
    Ok(res)
}

fn greedy_with_costs(
    ctx: &Context,
    objective: &Objective,
    lambda: f64,
    stage: CostStage,
    initial: &[SiteId],
    naive: bool,
) -> Result<(Vec<SiteId>, Vec<AuditStep>, u64)> {
    if lambda <= 0.0 {
        return Ok((Vec::new(), Vec::new(), 0));
    }
    let terms = objective_terms(ctx, objective)?;
    let elements = site_elements(ctx, |s| stage.of(s));
    let engine = build_engine(ctx, &terms, &elements, lambda);
    let run = engine.run(&RunOptions { lazy: !naive, initial: initial.iter().map(|a| a.index()).collect(), budget: None });
    if run.full_value != run.max_value {
        let all = Deployment::full(&ctx.instance.sites);
        return Err(Error::Infeasible { target: lambda, achievable: min_of(&ctx.values(objective, &all)?) });
    }
    let audit = run
        .picks
        .iter()
        .map(|p| AuditStep { site: elements[p.element].site, copy: None, gain: p.gain, cost_effectiveness: p.ratio })
        .collect();
    Ok((run.selected().map(|e| elements[e].site).collect(), audit, run.evaluations))
}

/// First stage chosen by greedy under the mean scenario at first-stage cost.
pub fn twostage_expected(ctx: &Context, lambda: f64, opts: &TwoStageOptions) -> Result<PlanResult> {
    let objective = Objective::Throughput { scenario: mean_scenario(&ctx.model), basis: opts.basis };
    let (sites, audit, evals) = greedy_with_costs(ctx, &objective, lambda, CostStage::First, &[], opts.naive)?;
    let mut res = PlanResult::new("expected-first-stage");
    res.target = Some(lambda);
    res.cost = sites.iter().map(|a| ctx.instance.sites[a.index()].first_stage_cost).fold(0.0, |a, b| a + b);
    res.sites = sites;
    res.audit = audit;
    res.evaluations = evals;
    let dep = res.deployment(ctx.instance);
    res.values = ctx.values(&objective, &dep)?;
    res.min_value = min_of(&res.values);
    res.feasible = res.min_value >= lambda - super::VERIFY_TOL;
    Ok(res)
}

/// Completes `first` in every scenario at second-stage cost.
pub fn augment(ctx: &Context, first: &[SiteId], scenarios: &[Scenario], lambda: f64, opts: &TwoStageOptions) -> Result<TwoStageResult> {
    let mut res = TwoStageResult {
        method: "augment".into(),
        first_stage: first.to_vec(),
        scenarios: scenarios.iter().map(|k| k.label.clone()).collect(),
        augmentations: Vec::with_capacity(scenarios.len()),
        first_cost: 0.0,
        second_cost_mean: 0.0,
        total: 0.0,
        copy_cost: None,
        pruned: Vec::new(),
        audit: Vec::new(),
        evaluations: 0,
    };
    for (k, scenario) in scenarios.iter().enumerate() {
        let objective = Objective::Throughput { scenario: scenario.clone(), basis: opts.basis };
        let (sites, audit, evals) = greedy_with_costs(ctx, &objective, lambda, CostStage::Second, first, opts.naive)?;
        res.audit.extend(audit.into_iter().map(|a| AuditStep { copy: Some(k + 1), ..a }));
        res.evaluations += evals;
        res.augmentations.push(sites);
    }
    res.finish(&ctx.instance.sites);
    Ok(res)
}
