use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Scenario, UncertaintyModel};
use crate::geometry::{Interval, PartitionIndex};
use crate::ids::{EdgeId, PathId};
use crate::metrics::{covered_mask, edge_rates, Deployment, RateBasis, RateTable};
use crate::paths::{MovementPath, MovementSet};

/// One path edge as seen by the pivot search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotItem {
    pub edge: EdgeId,
    /// Average rate `r_e(S)`.
    pub rate: f64,
    /// Travel time at the lowest speed, `t¹_e = d_e / v¹_e`.
    pub slow: f64,
    /// Travel time at the highest speed, `t²_e = d_e / v²_e`.
    pub fast: f64,
}

/// Minimizes `Σ r_e t_e / Σ t_e` over boundary times: for every pivot, edges
/// no faster than the pivot are slow and the rest fast. Returns the chosen
/// pivot's position, per-item `is_slow` flags, and the value. Pivots are
/// tried in ascending edge id and only a strictly smaller value replaces the
/// incumbent.
pub fn pivot_search(items: &[PivotItem]) -> (usize, Vec<bool>, f64) {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by_key(|&i| items[i].edge);
    let mut best: Option<(usize, f64)> = None;
    for &p in &order {
        let pivot = items[p].rate;
        let (mut num, mut den) = (0.0, 0.0);
        for it in items {
            let t = if it.rate <= pivot { it.slow } else { it.fast };
            num += it.rate * t;
            den += t;
        }
        let v = if den > 0.0 { num / den } else { 0.0 };
        if best.map_or(true, |(_, b)| v < b) {
            best = Some((p, v));
        }
    }
    let (p, v) = best.unwrap_or((0, 0.0));
    let flags = items.iter().map(|it| items.get(p).map_or(true, |piv| it.rate <= piv.rate)).collect();
    (p, flags, v)
}

/// Result of a worst-case search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub scenario: Scenario,
    pub path: PathId,
    pub value: f64,
}

/// Upper densities, lower rates and lower speeds everywhere.
fn pessimistic_base(model: &UncertaintyModel) -> Scenario {
    Scenario {
        label: "worst".into(),
        speed: model.speed.iter().map(|v| v.lo).collect(),
        density: model.density.iter().map(|h| h.hi).collect(),
        rate: model.rate.iter().map(|r| r.lo).collect(),
    }
}

fn for_path_with(
    index: &PartitionIndex,
    path: &MovementPath,
    model: &UncertaintyModel,
    covered: &[bool],
    table: &RateTable,
) -> (Vec<(EdgeId, f64)>, f64) {
    let items: Vec<PivotItem> = path
        .edges
        .iter()
        .zip(edge_rates(index, path, covered, table))
        .map(|(e, (rate, d_e))| {
            let v = model.speed[e.index()];
            PivotItem { edge: *e, rate, slow: d_e / v.lo, fast: d_e / v.hi }
        })
        .collect();
    let (_, slow, value) = pivot_search(&items);
    let speeds = items
        .iter()
        .zip(slow)
        .map(|(it, s)| {
            let v = model.speed[it.edge.index()];
            (it.edge, if s { v.lo } else { v.hi })
        })
        .collect();
    (speeds, value)
}

/// Worst-case scenario for one path under deployment `dep`.
///
/// Densities sit at their upper and rates at their lower bounds; path edges
/// take the speed chosen by [`pivot_search`], all other edges their lower
/// speed.
pub fn worst_case_for_path(
    index: &PartitionIndex,
    dep: &Deployment,
    path: &MovementPath,
    model: &UncertaintyModel,
    basis: RateBasis,
) -> (Scenario, f64) {
    let mut k = pessimistic_base(model);
    let covered = covered_mask(index, dep);
    let table = RateTable::for_basis(index, dep, &k, basis);
    let (speeds, value) = for_path_with(index, path, model, &covered, &table);
    for (e, v) in speeds {
        k.speed[e.index()] = v;
    }
    k.label = format!("worst(S,{})", path.label);
    (k, value)
}

/// Minimum of [`worst_case_for_path`] over all paths; ties go to the lowest path id.
pub fn worst_case_overall(
    index: &PartitionIndex,
    dep: &Deployment,
    movements: &MovementSet,
    model: &UncertaintyModel,
    basis: RateBasis,
) -> Option<WorstCase> {
    let base = pessimistic_base(model);
    let covered = covered_mask(index, dep);
    let table = RateTable::for_basis(index, dep, &base, basis);
    let values: Vec<(Vec<(EdgeId, f64)>, f64)> = movements
        .paths
        .par_iter()
        .map(|p| for_path_with(index, p, model, &covered, &table))
        .collect();
    let (i, (speeds, value)) = values
        .into_iter()
        .enumerate()
        .reduce(|best, cur| if cur.1 .1 < best.1 .1 { cur } else { best })?;
    let mut k = base;
    for (e, v) in speeds {
        k.speed[e.index()] = v;
    }
    let path = &movements.paths[i];
    k.label = format!("worst(S,{})", path.label);
    Some(WorstCase { scenario: k, path: path.id, value })
}

/// Worst-case value of every path, in path order.
pub fn worst_case_values(
    index: &PartitionIndex,
    dep: &Deployment,
    movements: &MovementSet,
    model: &UncertaintyModel,
    basis: RateBasis,
) -> Vec<f64> {
    let base = pessimistic_base(model);
    let covered = covered_mask(index, dep);
    let table = RateTable::for_basis(index, dep, &base, basis);
    movements.paths.par_iter().map(|p| for_path_with(index, p, model, &covered, &table).1).collect()
}

/// Contact opportunity in time with per-subsegment speed intervals: uncovered
/// subsegments at their lower speed, covered ones at their upper speed.
/// `intervals` follow the path's subsegments in `L_p` edge order.
pub fn worst_case_time_special(
    index: &PartitionIndex,
    dep: &Deployment,
    path: &MovementPath,
    intervals: &[Interval],
) -> crate::Result<(Vec<f64>, f64)> {
    let covered = covered_mask(index, dep);
    let subs: Vec<_> = path.edges.iter().flat_map(|e| index.edge_subsegments(*e).iter().copied()).collect();
    if subs.len() != intervals.len() {
        return Err(crate::Error::Invalid(format!("expected {} subsegment intervals, got {}", subs.len(), intervals.len())));
    }
    let speeds: Vec<f64> = subs.iter().zip(intervals).map(|(l, iv)| if covered[l.index()] { iv.hi } else { iv.lo }).collect();
    let value = crate::metrics::contact_opportunity_time_per_subsegment(index, path, dep, &speeds)?;
    Ok((speeds, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::geometry::partition_edges;
    use crate::metrics::average_throughput_with;
    use crate::paths::parse_paths;

    fn t1_setup() -> (crate::geometry::Instance, MovementSet, PartitionIndex, UncertaintyModel) {
        let (inst, moves) = fixtures::t1();
        let idx = partition_edges(&inst.network, &inst.sites).unwrap();
        let model = UncertaintyModel::from_instance(&inst);
        (inst, moves, idx, model)
    }

    fn dep(inst: &crate::geometry::Instance, labels: &[&str]) -> Deployment {
        Deployment::new(labels.iter().map(|l| inst.site_by_label(l).unwrap()), &inst.sites).unwrap()
    }

    #[test]
    fn t1_single_site() {
        let (inst, moves, idx, model) = t1_setup();
        let (k, v) = worst_case_for_path(&idx, &dep(&inst, &["a1"]), &moves.paths[0], &model, RateBasis::Deployment);
        assert_eq!(k.speed, vec![1.0, 0.5, 0.5]);
        assert!((v - 0.2).abs() < 1e-12);
    }

    #[test]
    fn t1_counterexample_values() {
        let (inst, moves, idx, model) = t1_setup();
        let expect = [(&["a1"][..], 0.2), (&["a1", "a3"][..], 0.5), (&["a1", "a2"][..], 0.5), (&["a1", "a2", "a3"][..], 1.0)];
        for (s, want) in expect {
            for basis in [RateBasis::Deployment, RateBasis::AllCandidates, RateBasis::Exclusive] {
                let w = worst_case_overall(&idx, &dep(&inst, s), &moves, &model, basis).unwrap();
                assert!((w.value - want).abs() < 1e-12, "{s:?} {basis:?} {}", w.value);
            }
        }
    }

    #[test]
    fn three_edge_pivot_example() {
        let items: Vec<PivotItem> = [0.0, 1.0, 2.0]
            .iter()
            .enumerate()
            .map(|(i, r)| PivotItem { edge: EdgeId::from_index(i), rate: *r, slow: 2.0, fast: 1.0 })
            .collect();
        let (p, slow, v) = pivot_search(&items);
        assert_eq!(p, 0);
        assert_eq!(slow, vec![true, false, false]);
        assert!((v - 0.75).abs() < 1e-15);
        // brute force over the 8 boundary assignments
        let mut best = f64::INFINITY;
        for bits in 0..8 {
            let t: Vec<f64> = (0..3).map(|i| if bits >> i & 1 == 1 { 2.0 } else { 1.0 }).collect();
            let g = (0..3).map(|i| items[i].rate * t[i]).sum::<f64>() / t.iter().sum::<f64>();
            best = best.min(g);
        }
        assert_eq!(best, v);
    }

    #[test]
    fn empty_deployment_is_zero() {
        let (inst, moves, idx, model) = t1_setup();
        let (_, v) = worst_case_for_path(&idx, &Deployment::empty(&inst.sites), &moves.paths[0], &model, RateBasis::Deployment);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn overall_picks_uncovered_path_and_lowest_id() {
        let (inst, _, idx, model) = t1_setup();
        let moves = parse_paths("path cov a n1\npath unc n2 b\n", &inst.network).unwrap();
        let w = worst_case_overall(&idx, &dep(&inst, &["a1"]), &moves, &model, RateBasis::Deployment).unwrap();
        assert_eq!((w.path, w.value), (PathId(1), 0.0));

        let moves = parse_paths("path p a n1 n2 b\npath q b n2 n1 a\n", &inst.network).unwrap();
        let w = worst_case_overall(&idx, &dep(&inst, &["a1"]), &moves, &model, RateBasis::Deployment).unwrap();
        assert_eq!(w.path, PathId(0));
        assert!((w.value - 0.2).abs() < 1e-12);
        let single = parse_paths("path p a n1 n2 b\n", &inst.network).unwrap();
        let one = worst_case_overall(&idx, &dep(&inst, &["a1"]), &single, &model, RateBasis::Deployment).unwrap();
        let direct = worst_case_for_path(&idx, &dep(&inst, &["a1"]), &single.paths[0], &model, RateBasis::Deployment);
        assert_eq!(one.scenario, direct.0);
    }

    #[test]
    fn returned_scenario_reproduces_the_value() {
        let (inst, moves, idx, model) = t1_setup();
        let s = dep(&inst, &["a1", "a3"]);
        let (k, v) = worst_case_for_path(&idx, &s, &moves.paths[0], &model, RateBasis::Deployment);
        k.validate(&model).unwrap();
        let table = RateTable::for_basis(&idx, &s, &k, RateBasis::Deployment);
        let g = average_throughput_with(&idx, &moves.paths[0], &s, &k, &table).unwrap();
        assert!((g - v).abs() < 1e-12);
    }

    #[test]
    fn time_special_case() {
        let (inst, moves, idx, _) = t1_setup();
        let iv = vec![Interval::new(0.5, 1.0); 3];
        let (v, eta) = worst_case_time_special(&idx, &dep(&inst, &["a1"]), &moves.paths[0], &iv).unwrap();
        assert_eq!(v, vec![1.0, 0.5, 0.5]);
        assert!((eta - 0.2).abs() < 1e-12);
        let (v, eta) = worst_case_time_special(&idx, &Deployment::full(&inst.sites), &moves.paths[0], &iv).unwrap();
        assert_eq!((v, eta), (vec![1.0; 3], 1.0));
        let (_, eta) = worst_case_time_special(&idx, &Deployment::empty(&inst.sites), &moves.paths[0], &iv).unwrap();
        assert_eq!(eta, 0.0);
    }
}
