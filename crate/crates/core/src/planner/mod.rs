//! Deployment optimizers: greedy covering, budgeted binary search, robust
//! and two-stage planners, and the random / max-min-distance baselines.

mod baseline;
pub mod engine;
mod robust;
mod twostage;

pub use baseline::{baseline_maxmin_distance, baseline_random, reachable_sites, Stop};
pub use robust::{robust_maxopp, robust_mincost_enum, robust_mincost_meanspeed, DEFAULT_ENUM_CAP};
pub use twostage::{augment, twostage_expected, twostage_saa, CostStage, TwoStageOptions, TwoStageResult};

use serde::{Deserialize, Serialize};

use crate::geometry::{Instance, PartitionIndex};
use crate::ids::{PathId, SiteId, SubsegmentId};
use crate::metrics::{Deployment, Objective, RateBasis, RateTable};
use crate::paths::{MovementSet, Normalization};
use crate::scenario::{Scenario, UncertaintyModel};
use crate::{Error, Result};
use engine::{quantize_cap, quantize_weights, Engine, RunOptions, FEAS_TOL};

pub const DEFAULT_DELTA: f64 = 0.0005;
pub const DEFAULT_TAU: f64 = 0.01;

/// Tolerance used when re-verifying targets with an independent evaluation.
pub const VERIFY_TOL: f64 = 2.0 * FEAS_TOL;

/// Everything a planner reads.
#[derive(Debug, Clone)]
pub struct Context<'a> {
    pub instance: &'a Instance,
    pub index: &'a PartitionIndex,
    pub movements: &'a MovementSet,
    pub model: UncertaintyModel,
    /// Per-path multipliers `λ / λ_p`.
    pub factors: Vec<f64>,
}

impl<'a> Context<'a> {
    pub fn new(instance: &'a Instance, index: &'a PartitionIndex, movements: &'a MovementSet) -> Self {
        Context {
            instance,
            index,
            movements,
            model: UncertaintyModel::from_instance(instance),
            factors: vec![1.0; movements.len()],
        }
    }

    pub fn with_normalization(mut self, n: &Normalization) -> Self {
        self.factors = n.factors.clone();
        self
    }

    pub fn with_model(mut self, model: UncertaintyModel) -> Self {
        self.model = model;
        self
    }

    pub fn site_count(&self) -> usize {
        self.instance.sites.len()
    }

    fn path_subsegments(&self, p: usize) -> impl Iterator<Item = SubsegmentId> + '_ {
        self.movements.paths[p].edges.iter().flat_map(|e| self.index.edge_subsegments(*e).iter().copied())
    }

    /// Independent per-term metric values, already multiplied by demand factors.
    pub fn values(&self, objective: &Objective, dep: &Deployment) -> Result<Vec<f64>> {
        let per = objective.terms_per_path();
        let mut v = objective.values(self.index, self.movements, dep)?;
        for (i, x) in v.iter_mut().enumerate() {
            *x *= self.factors[i / per];
        }
        Ok(v)
    }
}

/// Real-valued weights of one covering term.
#[derive(Debug, Clone)]
pub(crate) struct Term {
    /// Scenario group, used by the two-stage copy construction.
    pub group: usize,
    pub slots: Vec<(SubsegmentId, f64)>,
}

fn table_for(ctx: &Context, scenario: &Scenario, basis: RateBasis) -> Result<RateTable> {
    if basis == RateBasis::Deployment {
        return Err(Error::Usage(
            "planning needs a deployment-independent rate basis (candidates or exclusive)".into(),
        ));
    }
    Ok(RateTable::frozen(ctx.index, scenario, basis))
}

/// Throughput weights `r_l t_l / T_p` of one path under fixed speeds.
pub(crate) fn throughput_term(ctx: &Context, p: usize, speed: impl Fn(usize) -> f64, table: &RateTable, group: usize) -> Term {
    let subs: Vec<SubsegmentId> = ctx.path_subsegments(p).collect();
    let times: Vec<f64> = subs
        .iter()
        .map(|l| {
            let s = ctx.index.subsegment(*l);
            s.length / speed(s.parent_edge.index())
        })
        .collect();
    let total: f64 = times.iter().sum();
    let f = ctx.factors[p];
    let slots = subs
        .iter()
        .zip(&times)
        .map(|(l, t)| (*l, f * table.rate(*l) * t / total))
        .filter(|(_, w)| *w > 0.0)
        .collect();
    Term { group, slots }
}

pub(crate) fn objective_terms(ctx: &Context, objective: &Objective) -> Result<Vec<Term>> {
    let n = ctx.movements.len();
    let mut terms = Vec::new();
    match objective {
        Objective::Distance => {
            for p in 0..n {
                let subs: Vec<SubsegmentId> = ctx.path_subsegments(p).collect();
                let total: f64 = subs.iter().map(|l| ctx.index.subsegment(*l).length).sum();
                let f = ctx.factors[p];
                let slots = subs.iter().map(|l| (*l, f * ctx.index.subsegment(*l).length / total)).collect();
                terms.push(Term { group: 0, slots });
            }
        }
        Objective::Time(k) => {
            let unit = RateTable::uniform(ctx.index.subsegments().len(), 1.0);
            for p in 0..n {
                terms.push(throughput_term(ctx, p, |e| k.speed[e], &unit, 0));
            }
        }
        Objective::Throughput { scenario, basis } => {
            let table = table_for(ctx, scenario, *basis)?;
            for p in 0..n {
                terms.push(throughput_term(ctx, p, |e| scenario.speed[e], &table, 0));
            }
        }
        Objective::ThroughputSet { scenarios, basis } => {
            let tables = scenarios.iter().map(|k| table_for(ctx, k, *basis)).collect::<Result<Vec<_>>>()?;
            for p in 0..n {
                for (g, (k, t)) in scenarios.iter().zip(&tables).enumerate() {
                    terms.push(throughput_term(ctx, p, |e| k.speed[e], t, g));
                }
            }
        }
    }
    Ok(terms)
}

/// Ground-set element: a site, optionally restricted to one scenario group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Element {
    pub site: SiteId,
    pub group: Option<usize>,
    pub cost: f64,
}

pub(crate) fn build_engine(ctx: &Context, terms: &[Term], elements: &[Element], lambda: f64) -> Engine {
    let cap = quantize_cap(lambda);
    let mut by_sub: Vec<Vec<(u32, u32)>> = vec![Vec::new(); ctx.index.subsegments().len()];
    let mut qterms = Vec::with_capacity(terms.len());
    for (t, term) in terms.iter().enumerate() {
        let w: Vec<f64> = term.slots.iter().map(|s| s.1).collect();
        for (i, (l, _)) in term.slots.iter().enumerate() {
            by_sub[l.index()].push((t as u32, i as u32));
        }
        qterms.push((quantize_weights(&w), cap));
    }
    let covers = elements
        .iter()
        .map(|el| {
            let mut c = Vec::new();
            for l in ctx.index.site_subsegments(el.site) {
                for &(t, i) in &by_sub[l.index()] {
                    if el.group.map_or(true, |g| terms[t as usize].group == g) {
                        c.push((t, i));
                    }
                }
            }
            c
        })
        .collect();
    Engine::new(qterms, covers, elements.iter().map(|e| e.cost).collect())
}

pub(crate) fn site_elements(ctx: &Context, cost: impl Fn(&crate::geometry::CandidateSite) -> f64) -> Vec<Element> {
    ctx.instance.sites.iter().map(|s| Element { site: s.id, group: None, cost: cost(s) }).collect()
}

/// One greedy iteration in a result's audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditStep {
    pub site: SiteId,
    /// Scenario copy for two-stage plans (0 = first stage).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub copy: Option<usize>,
    pub gain: f64,
    pub cost_effectiveness: f64,
}

/// A probe of an outer search (binary search or target inflation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub lambda: f64,
    pub cost: f64,
    pub accepted: bool,
    pub evaluations: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_case: Option<f64>,
}

/// Worst-case verification of a deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub value: f64,
    pub path: PathId,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub method: String,
    /// Selected sites in pick order.
    pub sites: Vec<SiteId>,
    /// Sites assumed deployed before planning.
    pub preexisting: Vec<SiteId>,
    pub cost: f64,
    pub target: Option<f64>,
    pub budget: Option<f64>,
    /// Achieved metric per term (per path, or per path and scenario).
    pub values: Vec<f64>,
    pub min_value: f64,
    pub feasible: bool,
    pub audit: Vec<AuditStep>,
    pub evaluations: u64,
    pub probes: Vec<Probe>,
    pub certificate: Option<Certificate>,
    /// Final inflated target of the mean-speed robust planner.
    pub lambda0: Option<f64>,
    /// Min-path value under the planning scenario when `values` hold worst cases.
    pub nominal: Option<f64>,
    /// Final binary-search bracket `(λ₂, λ₁)`.
    pub bracket: Option<(f64, f64)>,
}

impl PlanResult {
    pub(crate) fn new(method: &str) -> Self {
        PlanResult {
            method: method.into(),
            sites: Vec::new(),
            preexisting: Vec::new(),
            cost: 0.0,
            target: None,
            budget: None,
            values: Vec::new(),
            min_value: 0.0,
            feasible: false,
            audit: Vec::new(),
            evaluations: 0,
            probes: Vec::new(),
            certificate: None,
            lambda0: None,
            nominal: None,
            bracket: None,
        }
    }

    pub fn deployment(&self, inst: &Instance) -> Deployment {
        Deployment::new(self.sites.iter().chain(&self.preexisting).copied(), &inst.sites).expect("planner site ids are valid")
    }
}

/// Smallest value, 0 for an empty slice.
pub(crate) fn min_of(v: &[f64]) -> f64 {
    v.iter().cloned().reduce(f64::min).unwrap_or(0.0)
}

/// Options shared by the single-stage greedy planners.
#[derive(Debug, Clone, Default)]
pub struct GreedyOptions {
    /// Use naive re-evaluation of every candidate instead of lazy updates.
    pub naive: bool,
    /// Already deployed sites `A₀`.
    pub initial: Vec<SiteId>,
}

fn fill_from_run(res: &mut PlanResult, run: &engine::Run, elements: &[Element]) {
    res.sites = run.selected().map(|e| elements[e].site).collect();
    res.cost = run.cost;
    res.evaluations += run.evaluations;
    res.audit = run
        .picks
        .iter()
        .map(|p| AuditStep { site: elements[p.element].site, copy: None, gain: p.gain, cost_effectiveness: p.ratio })
        .collect();
}

/// Minimum-cost deployment reaching `lambda` on every path.
pub fn greedy_mincost(ctx: &Context, objective: &Objective, lambda: f64, opts: &GreedyOptions) -> Result<PlanResult> {
    let mut res = PlanResult::new("mincost");
    res.target = Some(lambda);
    res.preexisting = opts.initial.clone();
    if lambda > 0.0 {
        let terms = objective_terms(ctx, objective)?;
        let elements = site_elements(ctx, |s| s.cost);
        let engine = build_engine(ctx, &terms, &elements, lambda);
        let run = engine.run(&RunOptions {
            lazy: !opts.naive,
            initial: opts.initial.iter().map(|a| a.index()).collect(),
            budget: None,
        });
        if !(run.full_value == run.max_value) {
            let full = ctx.values(objective, &Deployment::full(&ctx.instance.sites))?;
            return Err(Error::Infeasible { target: lambda, achievable: min_of(&full) });
        }
        fill_from_run(&mut res, &run, &elements);
    }
    let dep = res.deployment(ctx.instance);
    res.values = ctx.values(objective, &dep)?;
    res.min_value = min_of(&res.values);
    res.feasible = res.min_value >= lambda - VERIFY_TOL;
    Ok(res)
}

/// Budgeted max-min: binary search on the target with greedy probes.
pub fn maxopp_budget(ctx: &Context, objective: &Objective, budget: f64, delta: f64, opts: &GreedyOptions) -> Result<PlanResult> {
    if !(delta > 0.0) {
        return Err(Error::Usage("delta must be positive".into()));
    }
    if !(budget >= 0.0) {
        return Err(Error::Usage("budget must be nonnegative".into()));
    }
    let mut res = PlanResult::new("maxopp");
    res.budget = Some(budget);
    res.preexisting = opts.initial.clone();
    let full = ctx.values(objective, &Deployment::full(&ctx.instance.sites))?;
    let (mut hi, mut lo) = (min_of(&full), 0.0);
    let terms = objective_terms(ctx, objective)?;
    let elements = site_elements(ctx, |s| s.cost);
    let mut engine = build_engine(ctx, &terms, &elements, hi);
    let mut best: Option<(f64, engine::Run)> = None;
    while hi - lo >= delta {
        let lambda = 0.5 * (hi + lo);
        engine.set_cap(quantize_cap(lambda));
        let run = engine.run(&RunOptions {
            lazy: !opts.naive,
            initial: opts.initial.iter().map(|a| a.index()).collect(),
            budget: Some(budget),
        });
        let ok = !run.over_budget && run.saturated();
        res.evaluations += run.evaluations;
        res.probes.push(Probe { lambda, cost: run.cost, accepted: ok, evaluations: run.evaluations, worst_case: None });
        if ok {
            lo = lambda;
            let sites = run.selected().map(|e| elements[e].site).chain(opts.initial.iter().copied());
            let achieved = min_of(&ctx.values(objective, &Deployment::new(sites, &ctx.instance.sites)?)?);
            if best.as_ref().map_or(true, |(b, _)| achieved > *b) {
                best = Some((achieved, run));
            }
        } else {
            hi = lambda;
        }
    }
    res.bracket = Some((lo, hi));
    if let Some((_, run)) = &best {
        let evals = res.evaluations;
        fill_from_run(&mut res, run, &elements);
        res.evaluations = evals;
    }
    let dep = res.deployment(ctx.instance);
    res.values = ctx.values(objective, &dep)?;
    res.min_value = min_of(&res.values);
    res.target = Some(lo);
    res.feasible = res.cost <= budget;
    Ok(res)
}

#[cfg(test)]
mod tests;
