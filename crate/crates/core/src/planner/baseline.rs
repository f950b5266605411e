use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build_engine, min_of, objective_terms, site_elements, Context, PlanResult, VERIFY_TOL};
use crate::ids::SiteId;
use crate::metrics::{Deployment, Objective};
use crate::paths::{dijkstra, RouteMetric};
use crate::{Error, Result};

/// When a baseline stops adding sites.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stop {
    /// Stop once every path reaches this value.
    pub lambda: Option<f64>,
    /// Never exceed this total cost.
    pub budget: Option<f64>,
}

/// `Â`: sites whose region covers part of at least one path.
pub fn reachable_sites(ctx: &Context) -> Vec<SiteId> {
    let mut on_path = vec![false; ctx.index.subsegments().len()];
    for p in &ctx.movements.paths {
        for e in &p.edges {
            for l in ctx.index.edge_subsegments(*e) {
                on_path[l.index()] = true;
            }
        }
    }
    ctx.instance
        .sites
        .iter()
        .filter(|s| ctx.index.site_subsegments(s.id).iter().any(|l| on_path[l.index()]))
        .map(|s| s.id)
        .collect()
}

/// Adds sites in the order produced by `next` until the stop rule fires.
fn grow(ctx: &Context, objective: &Objective, stop: Stop, method: &str, mut next: impl FnMut(&[SiteId]) -> Option<SiteId>) -> Result<PlanResult> {
    let mut res = PlanResult::new(method);
    res.target = stop.lambda;
    res.budget = stop.budget;
    let terms = objective_terms(ctx, objective)?;
    let elements = site_elements(ctx, |s| s.cost);
    let engine = build_engine(ctx, &terms, &elements, stop.lambda.unwrap_or(f64::INFINITY).min(1e6));
    let met = |sel: &[SiteId]| {
        stop.lambda.is_some_and(|l| l <= 0.0 || engine.value_of(sel.iter().map(|a| a.index())) == engine.max_value())
    };
    while !met(&res.sites) {
        let Some(a) = next(&res.sites) else {
            if let Some(target) = stop.lambda {
                let all = Deployment::full(&ctx.instance.sites);
                return Err(Error::Infeasible { target, achievable: min_of(&ctx.values(objective, &all)?) });
            }
            break;
        };
        let w = ctx.instance.sites[a.index()].cost;
        if stop.budget.is_some_and(|b| res.cost + w > b) {
            break;
        }
        res.cost += w;
        res.sites.push(a);
        res.evaluations += 1;
    }
    let dep = res.deployment(ctx.instance);
    res.values = ctx.values(objective, &dep)?;
    res.min_value = min_of(&res.values);
    res.feasible = stop.lambda.map_or(true, |l| res.min_value >= l - VERIFY_TOL);
    Ok(res)
}

/// Uniformly random additions from `Â`.
pub fn baseline_random(ctx: &Context, objective: &Objective, stop: Stop, seed: u64) -> Result<PlanResult> {
    let mut order = reachable_sites(ctx);
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut it = order.into_iter();
    grow(ctx, objective, stop, "rand", |_| it.next())
}

/// Random start, then repeatedly the site farthest (in graph distance between
/// the sites' nearest nodes) from everything already chosen.
pub fn baseline_maxmin_distance(ctx: &Context, objective: &Objective, stop: Stop, seed: u64) -> Result<PlanResult> {
    let cands = reachable_sites(ctx);
    let net = &ctx.instance.network;
    let snapped: Vec<_> = cands.iter().map(|a| net.nearest_node(ctx.instance.sites[a.index()].position)).collect();
    let dist: Vec<Vec<f64>> = snapped.iter().map(|n| dijkstra(net, RouteMetric::Distance, *n)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken = vec![false; cands.len()];
    grow(ctx, objective, stop, "dist", |sel| {
        if cands.is_empty() || taken.iter().all(|t| *t) {
            return None;
        }
        let pick = if sel.is_empty() {
            rng.gen_range(0..cands.len())
        } else {
            let chosen: Vec<usize> = (0..cands.len()).filter(|i| taken[*i]).collect();
            let mut best: Option<(usize, f64)> = None;
            for i in (0..cands.len()).filter(|i| !taken[*i]) {
                let d = chosen.iter().map(|j| dist[*j][snapped[i].index()]).fold(f64::INFINITY, f64::min);
                if best.map_or(true, |(_, b)| d > b) {
                    best = Some((i, d));
                }
            }
            best?.0
        };
        taken[pick] = true;
        Some(cands[pick])
    })
}
