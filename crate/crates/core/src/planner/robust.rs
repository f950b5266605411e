use std::collections::HashSet;

use super::engine::{quantize_cap, RunOptions};
use super::{
    build_engine, fill_from_run, maxopp_budget, min_of, site_elements, table_for, throughput_term, Certificate, Context,
    GreedyOptions, PlanResult, Probe, Term, VERIFY_TOL,
};
use crate::ids::SiteId;
use crate::metrics::{Deployment, Objective, RateBasis};
use crate::scenario::{mean_speed_scenario, pivot_search, worst_case_overall, worst_case_values, PivotItem, Scenario};
use crate::{Error, Result};

/// Largest `|A_p|` for which the per-path subset enumeration is attempted.
pub const DEFAULT_ENUM_CAP: usize = 12;

fn pessimistic(ctx: &Context) -> Scenario {
    Scenario {
        label: "worst".into(),
        speed: ctx.model.speed.iter().map(|v| v.lo).collect(),
        density: ctx.model.density.iter().map(|h| h.hi).collect(),
        rate: ctx.model.rate.iter().map(|r| r.lo).collect(),
    }
}

fn certify(ctx: &Context, res: &mut PlanResult, basis: RateBasis) -> Result<()> {
    let dep = res.deployment(ctx.instance);
    let w = worst_case_overall(ctx.index, &dep, ctx.movements, &ctx.model, basis)
        .ok_or_else(|| Error::Invalid("movement set is empty".into()))?;
    res.values = worst_case_values(ctx.index, &dep, ctx.movements, &ctx.model, basis)
        .iter()
        .zip(&ctx.factors)
        .map(|(v, f)| v * f)
        .collect();
    res.min_value = min_of(&res.values);
    res.certificate = Some(Certificate { value: w.value, path: w.path, scenario: w.scenario });
    Ok(())
}

fn full_worst(ctx: &Context, basis: RateBasis) -> f64 {
    let all = Deployment::full(&ctx.instance.sites);
    let v = worst_case_values(ctx.index, &all, ctx.movements, &ctx.model, basis);
    min_of(&v.iter().zip(&ctx.factors).map(|(v, f)| v * f).collect::<Vec<_>>())
}

/// Robust min-cost over the per-path worst cases of every subset of the
/// sites touching that path.
pub fn robust_mincost_enum(ctx: &Context, lambda: f64, basis: RateBasis, cap: usize, opts: &GreedyOptions) -> Result<PlanResult> {
    let base = pessimistic(ctx);
    let table = table_for(ctx, &base, basis)?;
    let mut terms: Vec<Term> = Vec::new();
    for (p, path) in ctx.movements.paths.iter().enumerate() {
        let mut touching: Vec<SiteId> = path
            .edges
            .iter()
            .flat_map(|e| ctx.index.edge_subsegments(*e))
            .flat_map(|l| ctx.index.subsegment(*l).covering_sites.iter().copied())
            .collect();
        touching.sort();
        touching.dedup();
        if touching.len() > cap {
            return Err(Error::CapExceeded { path: path.label.clone(), count: touching.len(), cap });
        }
        // per edge: (d_e, [(d_l * r_l, bitmask of touching sites covering l)])
        let edges: Vec<(f64, Vec<(f64, u32)>)> = path
            .edges
            .iter()
            .map(|e| {
                let subs = ctx.index.edge_subsegments(*e);
                let d_e = subs.iter().map(|l| ctx.index.subsegment(*l).length).sum();
                let pieces = subs
                    .iter()
                    .map(|l| {
                        let s = ctx.index.subsegment(*l);
                        let bits = s
                            .covering_sites
                            .iter()
                            .map(|a| 1u32 << touching.binary_search(a).expect("covering site touches the path"))
                            .fold(0, |m, b| m | b);
                        (s.length * table.rate(*l), bits)
                    })
                    .collect();
                (d_e, pieces)
            })
            .collect();
        let mut seen: HashSet<Vec<bool>> = HashSet::new();
        for subset in 0u32..(1u32 << touching.len()) {
            let items: Vec<PivotItem> = path
                .edges
                .iter()
                .zip(&edges)
                .map(|(e, (d_e, pieces))| {
                    let mass: f64 = pieces.iter().filter(|(_, b)| b & subset != 0).map(|(m, _)| m).sum();
                    let v = ctx.model.speed[e.index()];
                    PivotItem { edge: *e, rate: mass / d_e, slow: d_e / v.lo, fast: d_e / v.hi }
                })
                .collect();
            let (_, slow, _) = pivot_search(&items);
            if !seen.insert(slow.clone()) {
                continue;
            }
            let mut speed = base.speed.clone();
            for (it, s) in items.iter().zip(&slow) {
                let v = ctx.model.speed[it.edge.index()];
                speed[it.edge.index()] = if *s { v.lo } else { v.hi };
            }
            terms.push(throughput_term(ctx, p, |e| speed[e], &table, 0));
        }
    }
    let mut res = PlanResult::new("robust-enum");
    res.target = Some(lambda);
    res.preexisting = opts.initial.clone();
    if lambda > 0.0 {
        let elements = site_elements(ctx, |s| s.cost);
        let engine = build_engine(ctx, &terms, &elements, lambda);
        let run = engine.run(&RunOptions {
            lazy: !opts.naive,
            initial: opts.initial.iter().map(|a| a.index()).collect(),
            budget: None,
        });
        if run.full_value != run.max_value {
            return Err(Error::Infeasible { target: lambda, achievable: full_worst(ctx, basis) });
        }
        fill_from_run(&mut res, &run, &elements);
    }
    certify(ctx, &mut res, basis)?;
    res.feasible = res.min_value >= lambda - VERIFY_TOL;
    Ok(res)
}

/// Robust min-cost through the mean-speed scenario with an inflated target.
pub fn robust_mincost_meanspeed(ctx: &Context, lambda: f64, tau: f64, basis: RateBasis, opts: &GreedyOptions) -> Result<PlanResult> {
    if !(tau > 0.0) {
        return Err(Error::Usage("tau must be positive".into()));
    }
    let mut res = PlanResult::new("robust-meanspeed");
    res.target = Some(lambda);
    res.preexisting = opts.initial.clone();
    if lambda <= 0.0 {
        certify(ctx, &mut res, basis)?;
        res.feasible = true;
        res.lambda0 = Some(lambda);
        return Ok(res);
    }
    let achievable = full_worst(ctx, basis);
    if achievable < lambda - VERIFY_TOL {
        return Err(Error::Infeasible { target: lambda, achievable });
    }
    let beta = ctx.model.beta();
    let k0 = mean_speed_scenario(&ctx.model);
    let objective = Objective::Throughput { scenario: k0, basis };
    let terms = super::objective_terms(ctx, &objective)?;
    let elements = site_elements(ctx, |s| s.cost);
    let mut engine = build_engine(ctx, &terms, &elements, lambda);
    let steps = ((beta - 1.0) / tau - 1e-9).ceil().max(0.0) as usize;
    for i in 0..=steps {
        let lambda0 = ((1.0 + i as f64 * tau) * lambda).min(beta * lambda);
        engine.set_cap(quantize_cap(lambda0));
        let run = engine.run(&RunOptions {
            lazy: !opts.naive,
            initial: opts.initial.iter().map(|a| a.index()).collect(),
            budget: None,
        });
        let sites = run.selected().map(|e| elements[e].site).chain(opts.initial.iter().copied());
        let dep = Deployment::new(sites, &ctx.instance.sites)?;
        let worst = worst_case_values(ctx.index, &dep, ctx.movements, &ctx.model, basis);
        let worst = min_of(&worst.iter().zip(&ctx.factors).map(|(v, f)| v * f).collect::<Vec<_>>());
        let ok = worst >= lambda - VERIFY_TOL;
        res.evaluations += run.evaluations;
        res.probes.push(Probe { lambda: lambda0, cost: run.cost, accepted: ok, evaluations: run.evaluations, worst_case: Some(worst) });
        if ok {
            let evals = res.evaluations;
            fill_from_run(&mut res, &run, &elements);
            res.evaluations = evals;
            res.lambda0 = Some(lambda0);
            res.nominal = Some(min_of(&ctx.values(&objective, &dep)?));
            certify(ctx, &mut res, basis)?;
            res.feasible = true;
            return Ok(res);
        }
    }
    Err(Error::Infeasible { target: lambda, achievable })
}

/// Budgeted max-min under the mean-speed scenario, certified by the worst case.
pub fn robust_maxopp(ctx: &Context, budget: f64, delta: f64, basis: RateBasis, opts: &GreedyOptions) -> Result<PlanResult> {
    let k0 = mean_speed_scenario(&ctx.model);
    let objective = Objective::Throughput { scenario: k0, basis };
    let mut res = maxopp_budget(ctx, &objective, budget, delta, opts)?;
    res.method = "robust-maxopp".into();
    let k0_values = std::mem::take(&mut res.values);
    res.nominal = Some(min_of(&k0_values));
    certify(ctx, &mut res, basis)?;
    Ok(res)
}
