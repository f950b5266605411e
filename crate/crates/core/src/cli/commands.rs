use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::artifacts::{self, Artifacts};
use super::{
    BaselineMethod, Cli, Command, InputArgs, MetricArg, ObjectiveArgs, Outcome, PolicyArg, Preset, RateLevel,
    RobustMethod, TwoStageMethod,
};
use crate::deploy::{parse_deployment, DeploymentFile};
use crate::geometry::{parse_instance, partition_edges, Instance, PartitionIndex};
use crate::metrics::{
    average_throughput_with, contact_opportunity_distance, contact_opportunity_time, Objective, RateBasis, RateTable,
};
use crate::paths::{generate_paths, normalize_demands, parse_paths, reduce_paths, MovementSet, Normalization, RouteMetric};
use crate::planner::{self, Context, GreedyOptions, PlanResult, Stop, TwoStageOptions, TwoStageResult};
use crate::scenario::{mean_scenario, parse_scenarios, sample_scenarios, worst_case_overall, Scenario, UncertaintyModel};
use crate::simulator::{self, ccdf, Policy, SimOptions};
use crate::synth::{grid_network, GridSpec};
use crate::{Error, Result};

/// Offset between the learning and test scenario streams.
const TEST_SEED_OFFSET: u64 = 0x9e37_79b9;

struct Loaded {
    inst: Instance,
    moves: MovementSet,
    index: PartitionIndex,
    norm: Normalization,
}

impl Loaded {
    fn ctx(&self) -> Context<'_> {
        Context::new(&self.inst, &self.index, &self.moves).with_normalization(&self.norm)
    }

    fn site_labels(&self, sites: &[crate::SiteId]) -> Vec<String> {
        sites.iter().map(|a| self.inst.sites[a.index()].label.clone()).collect()
    }
}

fn load(input: &InputArgs, art: &mut Artifacts, seed: u64, lambda: Option<f64>) -> Result<Loaded> {
    let inst = parse_instance(&art.input(&input.network)?)?;
    let mut moves = match &input.paths {
        Some(p) => parse_paths(&art.input(p)?, &inst.network)?,
        None => {
            let min = input
                .min_length
                .ok_or_else(|| Error::Usage("either --paths or --min-length is required".into()))?;
            generate_paths(&inst.network, min, input.num_paths, seed, RouteMetric::Distance)?
        }
    };
    if let Some(l) = lambda {
        check_nonneg("--lambda", l)?;
        moves = moves.with_default_demand(l);
    }
    if input.reduce {
        let r = reduce_paths(&moves);
        if let Some(why) = &r.skipped {
            eprintln!("note: path reduction skipped: {why}");
        }
        moves = r.movements;
    }
    let norm = match lambda {
        Some(l) if l > 0.0 => normalize_demands(&moves)?,
        Some(l) => Normalization::uniform(l, moves.len()),
        None => Normalization::uniform(0.0, moves.len()),
    };
    let index = partition_edges(&inst.network, &inst.sites)?;
    Ok(Loaded { inst, moves, index, norm })
}

fn check_nonneg(flag: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Usage(format!("{flag} must be a finite nonnegative number, got {v}")))
    }
}

fn check_pos(flag: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Usage(format!("{flag} must be positive, got {v}")))
    }
}

fn first_scenario(path: Option<&Path>, inst: &Instance, art: &mut Artifacts) -> Result<Scenario> {
    match path {
        Some(p) => {
            let ks = parse_scenarios(&art.input(p)?, inst)?;
            ks.into_iter().next().ok_or_else(|| Error::Invalid(format!("{} holds no scenario", p.display())))
        }
        None => Ok(mean_scenario(&UncertaintyModel::from_instance(inst))),
    }
}

fn objective(args: &ObjectiveArgs, inst: &Instance, art: &mut Artifacts) -> Result<Objective> {
    if args.metric == MetricArg::D {
        return Ok(Objective::Distance);
    }
    let scenario = first_scenario(args.scenario.as_deref(), inst, art)?;
    Ok(match args.metric {
        MetricArg::D => unreachable!(),
        MetricArg::T => Objective::Time(scenario),
        MetricArg::Gamma => Objective::Throughput {
            scenario,
            basis: args.rate_basis.map_or(RateBasis::AllCandidates, RateBasis::from),
        },
    })
}

fn read_deployment(path: &Path, inst: &Instance, art: &mut Artifacts) -> Result<DeploymentFile> {
    parse_deployment(&art.input(path)?, inst)
}

fn csv_values(l: &Loaded, values: &[f64]) -> String {
    let per = (values.len() / l.moves.len().max(1)).max(1);
    let mut s = String::from("path_id,value\n");
    for (i, v) in values.iter().enumerate() {
        let p = &l.moves.paths[i / per];
        if per == 1 {
            writeln!(s, "{},{v}", p.label).unwrap();
        } else {
            writeln!(s, "{}#{},{v}", p.label, i % per).unwrap();
        }
    }
    s
}

#[derive(Serialize)]
struct PlanReport<'a> {
    command: &'a str,
    sites: Vec<String>,
    preexisting: Vec<String>,
    paths: usize,
    target: f64,
    result: &'a PlanResult,
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize") + "\n"
}

fn finish_plan(name: &str, l: &Loaded, plan: &PlanResult, art: &mut Artifacts, out: &mut Outcome) {
    art.add("deployment.txt", DeploymentFile::from_plan(plan).to_text(&l.inst));
    art.add("values.csv", csv_values(l, &plan.values));
    let report = PlanReport {
        command: name,
        sites: l.site_labels(&plan.sites),
        preexisting: l.site_labels(&plan.preexisting),
        paths: l.moves.len(),
        target: l.norm.lambda,
        result: plan,
    };
    art.add("report.json", json(&report));
    println!(
        "{name}: {} sites, cost {}, min value {}{}",
        plan.sites.len(),
        plan.cost,
        plan.min_value,
        if plan.feasible { "" } else { " (target not reached)" }
    );
    out.set("cost", plan.cost);
    out.set("min_value", plan.min_value);
    out.set("sites", plan.sites.len() as f64);
    out.set("feasible", plan.feasible as u8 as f64);
    out.set("evaluations", plan.evaluations as f64);
    if let Some(l0) = plan.lambda0 {
        out.set("lambda0", l0);
    }
}

pub fn dispatch(cli: Cli, command: Vec<String>) -> Result<Outcome> {
    let seed = cli.seed;
    let mut art = Artifacts::default();
    let mut out = Outcome::default();
    match cli.command {
        Command::Partition { input } => {
            let inst = parse_instance(&art.input(&input.network)?)?;
            let index = partition_edges(&inst.network, &inst.sites)?;
            let mut s = String::from("subsegment,edge,start,end,length,sites\n");
            for sub in index.subsegments() {
                let sites: Vec<&str> = sub.covering_sites.iter().map(|a| inst.sites[a.index()].label.as_str()).collect();
                let edge = &inst.network.edge(sub.parent_edge).label;
                writeln!(s, "{},{edge},{},{},{},{}", sub.id.0, sub.start, sub.end, sub.length, sites.join(";")).unwrap();
            }
            art.add("subsegments.csv", s);
            println!("partition: {} subsegments on {} edges", index.subsegments().len(), index.edge_count());
            out.set("subsegments", index.subsegments().len() as f64);
        }
        Command::Evaluate { input, deployment, scenario, rate_basis } => {
            let l = load(&input, &mut art, seed, None)?;
            let dep = read_deployment(&deployment, &l.inst, &mut art)?.base(&l.inst)?;
            let k = first_scenario(scenario.as_deref(), &l.inst, &mut art)?;
            let table = RateTable::for_basis(&l.index, &dep, &k, rate_basis.into());
            let mut s = String::from("path_id,eta_d,eta_t,gamma\n");
            let (mut md, mut mt, mut mg) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
            for p in &l.moves.paths {
                let d = contact_opportunity_distance(&l.index, p, &dep);
                let t = contact_opportunity_time(&l.index, p, &dep, &k)?;
                let g = average_throughput_with(&l.index, p, &dep, &k, &table)?;
                writeln!(s, "{},{d},{t},{g}", p.label).unwrap();
                (md, mt, mg) = (md.min(d), mt.min(t), mg.min(g));
            }
            art.add("evaluate.csv", s);
            println!("evaluate: {} paths, min eta_d {md}, min eta_t {mt}, min gamma {mg}", l.moves.len());
            out.set("min_eta_d", md);
            out.set("min_eta_t", mt);
            out.set("min_gamma", mg);
            out.set("cost", dep.cost());
        }
        Command::PlanMincost { input, objective: oa, lambda, preexisting, naive } => {
            let l = load(&input, &mut art, seed, Some(lambda))?;
            let obj = objective(&oa, &l.inst, &mut art)?;
            let initial = match &preexisting {
                Some(p) => read_deployment(p, &l.inst, &mut art)?.base(&l.inst)?.sites().to_vec(),
                None => Vec::new(),
            };
            let plan = planner::greedy_mincost(&l.ctx(), &obj, l.norm.lambda, &GreedyOptions { naive, initial })?;
            finish_plan("plan-mincost", &l, &plan, &mut art, &mut out);
        }
        Command::PlanMaxopp { input, objective: oa, budget, delta, naive } => {
            check_nonneg("--budget", budget)?;
            check_pos("--delta", delta)?;
            let l = load(&input, &mut art, seed, None)?;
            let obj = objective(&oa, &l.inst, &mut art)?;
            let plan = planner::maxopp_budget(&l.ctx(), &obj, budget, delta, &GreedyOptions { naive, ..Default::default() })?;
            finish_plan("plan-maxopp", &l, &plan, &mut art, &mut out);
        }
        Command::PlanRobust { input, method, lambda, budget, tau, delta, cap, rate_basis, naive } => {
            let l = load(&input, &mut art, seed, lambda)?;
            let ctx = l.ctx();
            let opts = GreedyOptions { naive, ..Default::default() };
            let basis = rate_basis.into();
            let plan = match (lambda, budget) {
                (_, Some(b)) => {
                    check_nonneg("--budget", b)?;
                    planner::robust_maxopp(&ctx, b, delta, basis, &opts)?
                }
                (Some(_), None) => match method {
                    RobustMethod::Enum => planner::robust_mincost_enum(&ctx, l.norm.lambda, basis, cap, &opts)?,
                    RobustMethod::Meanspeed => {
                        check_pos("--tau", tau)?;
                        planner::robust_mincost_meanspeed(&ctx, l.norm.lambda, tau, basis, &opts)?
                    }
                },
                (None, None) => return Err(Error::Usage("plan-robust needs --lambda or --budget".into())),
            };
            if let Some(c) = &plan.certificate {
                art.add("worst.scn", c.scenario.to_text(&l.inst));
            }
            finish_plan("plan-robust", &l, &plan, &mut art, &mut out);
        }
        Command::PlanTwostage { input, method, lambda, samples, test_samples, inflation, rate_basis, no_prune } => {
            check_pos("--lambda", lambda)?;
            let mut l = load(&input, &mut art, seed, None)?;
            if let Some(f) = inflation {
                check_pos("--inflation", f)?;
                for s in &mut l.inst.sites {
                    s.second_stage_cost = f * s.first_stage_cost;
                }
            }
            if samples == 0 {
                return Err(Error::Usage("--samples must be at least 1".into()));
            }
            let ctx = l.ctx();
            let opts = TwoStageOptions { basis: rate_basis.into(), prune: !no_prune, ..Default::default() };
            let learning = sample_scenarios(&ctx.model, samples, seed);
            let r = match method {
                TwoStageMethod::Saa => planner::twostage_saa(&ctx, lambda, &learning, &opts)?,
                TwoStageMethod::Exp => {
                    let s0 = planner::twostage_expected(&ctx, lambda, &opts)?;
                    let mut r = planner::augment(&ctx, &s0.sites, &learning, lambda, &opts)?;
                    r.method = "exp".into();
                    r
                }
                TwoStageMethod::Sec => planner::augment(&ctx, &[], &learning, lambda, &opts)?,
            };
            let test = if test_samples > 0 {
                let ks = sample_scenarios(&ctx.model, test_samples, seed.wrapping_add(TEST_SEED_OFFSET));
                Some(planner::augment(&ctx, &r.first_stage, &ks, lambda, &opts)?)
            } else {
                None
            };
            art.add("deployment.txt", DeploymentFile::from_twostage(&r).to_text(&l.inst));
            #[derive(Serialize)]
            struct Report<'a> {
                command: &'a str,
                first_stage: Vec<String>,
                learning: &'a TwoStageResult,
                test: Option<&'a TwoStageResult>,
            }
            art.add(
                "report.json",
                json(&Report { command: "plan-twostage", first_stage: l.site_labels(&r.first_stage), learning: &r, test: test.as_ref() }),
            );
            println!(
                "plan-twostage {}: first stage {} sites (cost {}), mean second stage {}, total {}",
                r.method,
                r.first_stage.len(),
                r.first_cost,
                r.second_cost_mean,
                r.total
            );
            out.set("total", r.total);
            out.set("cost", r.total);
            out.set("first_cost", r.first_cost);
            out.set("second_cost_mean", r.second_cost_mean);
            if let Some(t) = &test {
                println!("test: mean second stage {}, total {}", t.second_cost_mean, t.total);
                out.set("test_total", t.total);
            }
        }
        Command::WorstCase { input, deployment, rate_basis } => {
            let l = load(&input, &mut art, seed, None)?;
            let dep = read_deployment(&deployment, &l.inst, &mut art)?.base(&l.inst)?;
            let model = UncertaintyModel::from_instance(&l.inst);
            let w = worst_case_overall(&l.index, &dep, &l.moves, &model, rate_basis.into())
                .ok_or_else(|| Error::Invalid("no paths to evaluate".into()))?;
            let text = w.scenario.to_text(&l.inst);
            let label = &l.moves.paths[w.path.index()].label;
            art.add("worst.scn", text.clone());
            art.add("worst.csv", format!("path_id,gamma\n{label},{}\n", w.value));
            print!("{text}");
            println!("value {} path {label}", w.value);
            out.set("min_value", w.value);
        }
        Command::Baseline { input, objective: oa, method, lambda, budget } => {
            if let Some(b) = budget {
                check_nonneg("--budget", b)?;
            }
            let l = load(&input, &mut art, seed, lambda)?;
            let obj = objective(&oa, &l.inst, &mut art)?;
            let stop = Stop { lambda: lambda.map(|_| l.norm.lambda), budget };
            let plan = match method {
                BaselineMethod::Rand => planner::baseline_random(&l.ctx(), &obj, stop, seed)?,
                BaselineMethod::Dist => planner::baseline_maxmin_distance(&l.ctx(), &obj, stop, seed)?,
            };
            finish_plan("baseline", &l, &plan, &mut art, &mut out);
        }
        Command::Simulate { input, deployment, trace, users, duration, timestep, min_leg, policy, rates } => {
            check_pos("--timestep", timestep)?;
            let inst = parse_instance(&art.input(&input.network)?)?;
            let index = partition_edges(&inst.network, &inst.sites)?;
            let dep = read_deployment(&deployment, &inst, &mut art)?.base(&inst)?;
            let tr = match &trace {
                Some(p) => simulator::parse_trace(&art.input(p)?, &inst.network)?,
                None => {
                    check_pos("--duration", duration)?;
                    let t = simulator::generate_mobility(&inst.network, users, duration, min_leg, seed)?;
                    art.add("trace.txt", t.to_text(&inst.network));
                    t
                }
            };
            let r: Vec<f64> = inst
                .sites
                .iter()
                .map(|s| match rates {
                    RateLevel::Lo => s.rate.lo,
                    RateLevel::Mid => s.rate.mid(),
                    RateLevel::Hi => s.rate.hi,
                })
                .collect();
            let policy = match policy {
                PolicyArg::Least => Policy::LeastLoaded,
                PolicyArg::Random => Policy::Random,
            };
            let rep = simulator::evaluate_throughput(&inst.network, &index, &tr, &dep, &r, &SimOptions { policy, timestep, seed })?;
            let node = |n: crate::NodeId| inst.network.node(n).label.as_str();
            let mut s = String::from("user,from,to,start,end,complete,mean_rate\n");
            for g in &rep.legs {
                writeln!(s, "{},{},{},{},{},{},{}", g.user, node(g.from), node(g.to), g.start, g.end, g.complete, g.mean_rate).unwrap();
            }
            art.add("sim_legs.csv", s);
            let mut s = String::from("from,to,legs,mean_rate\n");
            for p in &rep.paths {
                writeln!(s, "{},{},{},{}", node(p.from), node(p.to), p.legs, p.mean_rate).unwrap();
            }
            art.add("sim_paths.csv", s);
            let mut s = String::from("user,mean_rate\n");
            for (u, v) in rep.user_mean.iter().enumerate() {
                writeln!(s, "{u},{v}").unwrap();
            }
            art.add("sim_users.csv", s);
            let mut s = String::from("edge,density\n");
            for (e, h) in inst.network.edges().iter().zip(&rep.density) {
                writeln!(s, "{},{h}", e.label).unwrap();
            }
            art.add("sim_density.csv", s);
            let mut s = String::from("x,ccdf\n");
            let legs: Vec<f64> = rep.legs.iter().filter(|g| g.complete).map(|g| g.mean_rate).collect();
            for (x, f) in ccdf(&legs) {
                writeln!(s, "{x},{f}").unwrap();
            }
            art.add("sim_ccdf.csv", s);
            #[derive(Serialize)]
            struct Report<'a> {
                command: &'a str,
                policy: Policy,
                timestep: f64,
                duration: f64,
                users: usize,
                ticks: usize,
                legs: crate::simulator::Summary,
                min_path_rate: Option<f64>,
                associated_mean: f64,
                capacity: f64,
                peak_total: f64,
            }
            art.add(
                "report.json",
                json(&Report {
                    command: "simulate",
                    policy: rep.policy,
                    timestep: rep.timestep,
                    duration: rep.duration,
                    users: rep.user_mean.len(),
                    ticks: rep.ticks,
                    legs: rep.leg_summary,
                    min_path_rate: rep.min_path_rate(),
                    associated_mean: rep.associated_mean,
                    capacity: rep.capacity,
                    peak_total: rep.peak_total,
                }),
            );
            println!(
                "simulate: {} users, {} complete legs, mean leg rate {}, min path rate {}",
                rep.user_mean.len(),
                rep.leg_summary.count,
                rep.leg_summary.mean,
                rep.min_path_rate().unwrap_or(0.0)
            );
            out.set("mean_rate", rep.leg_summary.mean);
            out.set("min_value", rep.min_path_rate().unwrap_or(0.0));
            out.set("associated_mean", rep.associated_mean);
        }
        Command::Sweep { flag, values, seeds, y, jobs, inner } => {
            super::sweep::sweep(&flag, &values, seed, seeds, &y, jobs, &inner, &cli.out, &mut art)?;
        }
        Command::Replay { manifest } => {
            let m = artifacts::load_manifest(&manifest)?;
            artifacts::verify_inputs(&m)?;
            let mut args = m.command.clone();
            args.push("--out".into());
            args.push(cli.out.display().to_string());
            super::run_args(&args)?;
            let bad = artifacts::diff_outputs(&m, &cli.out)?;
            if !bad.is_empty() {
                let names: Vec<String> = bad.iter().map(|p| p.display().to_string()).collect();
                return Err(Error::Numeric(format!("replay differs in {}", names.join(", "))));
            }
            println!("replay: {} outputs identical", m.outputs.len());
            return Ok(out);
        }
        Command::Synth { preset, rows, cols, num_paths, min_length, inflation } => {
            let mut spec = match preset {
                Preset::Desk => GridSpec::desk(),
                Preset::Small => GridSpec::small(),
                Preset::Tiny => GridSpec::tiny(),
            };
            spec.rows = rows.unwrap_or(spec.rows);
            spec.cols = cols.unwrap_or(spec.cols);
            if spec.rows < 2 || spec.cols < 2 {
                return Err(Error::Usage("--rows and --cols must be at least 2".into()));
            }
            if let Some(f) = inflation {
                check_pos("--inflation", f)?;
                spec = spec.with_inflation(f);
            }
            let inst = grid_network(&spec, seed);
            art.add("network.txt", inst.to_text());
            if num_paths > 0 {
                let min = min_length.unwrap_or(spec.min_path_length());
                let moves = generate_paths(&inst.network, min, num_paths, seed, RouteMetric::Distance)?;
                art.add("paths.txt", moves.to_text(&inst.network));
            }
            println!(
                "synth: {} nodes, {} edges, {} sites",
                inst.network.nodes().len(),
                inst.network.edges().len(),
                inst.sites.len()
            );
        }
    }
    art.write(&cli.out, command, seed)?;
    Ok(out)
}
