//! Contact-opportunity and throughput metrics, the load/rate model and the
//! truncated multi-path objective.

mod load;

pub use load::{load_profile, LoadProfile, RateBasis, RateTable};

use serde::{Deserialize, Serialize};

use crate::geometry::{CandidateSite, PartitionIndex};
use crate::ids::{SiteId, SubsegmentId};
use crate::paths::{MovementPath, MovementSet};
use crate::scenario::Scenario;
use crate::{Error, Result};

/// A set of deployed sites with its single-stage cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    sites: Vec<SiteId>,
    mask: Vec<bool>,
    cost: f64,
}

impl Deployment {
    pub fn new(sites: impl IntoIterator<Item = SiteId>, all: &[CandidateSite]) -> Result<Self> {
        let mut mask = vec![false; all.len()];
        for a in sites {
            if a.index() >= all.len() {
                return Err(Error::UnknownId { kind: "site", id: format!("#{}", a.0) });
            }
            mask[a.index()] = true;
        }
        Ok(Self::from_mask(mask, all))
    }

    pub fn from_mask(mask: Vec<bool>, all: &[CandidateSite]) -> Self {
        let sites: Vec<SiteId> = (0..mask.len()).filter(|&i| mask[i]).map(SiteId::from_index).collect();
        let cost = sites.iter().map(|a| all[a.index()].cost).fold(0.0, |a, b| a + b);
        Deployment { sites, mask, cost }
    }

    pub fn empty(all: &[CandidateSite]) -> Self {
        Self::from_mask(vec![false; all.len()], all)
    }

    pub fn full(all: &[CandidateSite]) -> Self {
        Self::from_mask(vec![true; all.len()], all)
    }

    /// Deployed sites in ascending id order.
    pub fn sites(&self) -> &[SiteId] {
        &self.sites
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, a: SiteId) -> bool {
        self.mask.get(a.index()).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// `w(S)`.
    pub fn cost(&self) -> f64 {
        self.cost
    }
}

/// Membership mask of `L_S` over all subsegments.
pub fn covered_mask(index: &PartitionIndex, dep: &Deployment) -> Vec<bool> {
    index
        .subsegments()
        .iter()
        .map(|l| l.covering_sites.iter().any(|a| dep.contains(*a)))
        .collect()
}

fn path_subs<'a>(index: &'a PartitionIndex, path: &'a MovementPath) -> impl Iterator<Item = SubsegmentId> + 'a {
    path.edges.iter().flat_map(move |e| index.edge_subsegments(*e).iter().copied())
}

fn check_speed(v: f64, what: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numeric(format!("nonpositive speed {v} on {what}")))
    }
}

/// `η^d_p(S)`: covered fraction of the path's length.
pub fn contact_opportunity_distance(index: &PartitionIndex, path: &MovementPath, dep: &Deployment) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for l in path_subs(index, path) {
        let s = index.subsegment(l);
        den += s.length;
        if s.covering_sites.iter().any(|a| dep.contains(*a)) {
            num += s.length;
        }
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// `η^t_p(S)` with the scenario's per-edge speeds.
pub fn contact_opportunity_time(index: &PartitionIndex, path: &MovementPath, dep: &Deployment, scenario: &Scenario) -> Result<f64> {
    let speeds = path_subs(index, path)
        .map(|l| scenario.speed[index.subsegment(l).parent_edge.index()])
        .collect::<Vec<_>>();
    contact_opportunity_time_per_subsegment(index, path, dep, &speeds)
}

/// `η^t_p(S)` with one speed per subsegment of the path, in `L_p` edge order.
pub fn contact_opportunity_time_per_subsegment(
    index: &PartitionIndex,
    path: &MovementPath,
    dep: &Deployment,
    speeds: &[f64],
) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    let subs: Vec<SubsegmentId> = path_subs(index, path).collect();
    if subs.len() != speeds.len() {
        return Err(Error::Invalid(format!("expected {} subsegment speeds, got {}", subs.len(), speeds.len())));
    }
    for (l, v) in subs.into_iter().zip(speeds) {
        let s = index.subsegment(l);
        let t = s.length / check_speed(*v, &format!("subsegment #{}", l.0))?;
        den += t;
        if s.covering_sites.iter().any(|a| dep.contains(*a)) {
            num += t;
        }
    }
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

/// Per-edge average rate `r_e(S)` along a path, in path edge order, together
/// with the edge lengths.
pub fn edge_rates(index: &PartitionIndex, path: &MovementPath, covered: &[bool], table: &RateTable) -> Vec<(f64, f64)> {
    path.edges
        .iter()
        .map(|e| {
            let mut d_e = 0.0;
            let mut mass = 0.0;
            for l in index.edge_subsegments(*e) {
                let s = index.subsegment(*l);
                d_e += s.length;
                if covered[l.index()] {
                    mass += s.length * table.rate(*l);
                }
            }
            (mass / d_e, d_e)
        })
        .collect()
}

/// `γ_p(S)` in the per-edge form, with rates taken from `table`.
pub fn average_throughput_with(
    index: &PartitionIndex,
    path: &MovementPath,
    dep: &Deployment,
    scenario: &Scenario,
    table: &RateTable,
) -> Result<f64> {
    let covered = covered_mask(index, dep);
    let mut num = 0.0;
    let mut den = 0.0;
    for (e, (r_e, d_e)) in path.edges.iter().zip(edge_rates(index, path, &covered, table)) {
        let t = d_e / check_speed(scenario.speed[e.index()], &format!("edge #{}", e.0))?;
        num += r_e * t;
        den += t;
    }
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

/// `γ_p(S)` with the load induced by `S` itself.
pub fn average_throughput(index: &PartitionIndex, path: &MovementPath, dep: &Deployment, scenario: &Scenario) -> Result<f64> {
    let table = RateTable::from_profile(&load_profile(index, dep, scenario));
    average_throughput_with(index, path, dep, scenario, &table)
}

/// `γ_p(S)` in the per-subsegment form, one speed per subsegment in `L_p` edge order.
pub fn average_throughput_per_subsegment(
    index: &PartitionIndex,
    path: &MovementPath,
    dep: &Deployment,
    table: &RateTable,
    speeds: &[f64],
) -> Result<f64> {
    let subs: Vec<SubsegmentId> = path_subs(index, path).collect();
    if subs.len() != speeds.len() {
        return Err(Error::Invalid(format!("expected {} subsegment speeds, got {}", subs.len(), speeds.len())));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (l, v) in subs.into_iter().zip(speeds) {
        let s = index.subsegment(l);
        let t = s.length / check_speed(*v, &format!("subsegment #{}", l.0))?;
        den += t;
        if s.covering_sites.iter().any(|a| dep.contains(*a)) {
            num += table.rate(l) * t;
        }
    }
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

/// Per-path metric selector.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    Distance,
    Time(Scenario),
    /// Throughput under one scenario with rates from the given basis.
    Throughput { scenario: Scenario, basis: RateBasis },
    /// One term per (path, scenario) pair.
    ThroughputSet { scenarios: Vec<Scenario>, basis: RateBasis },
}

impl Objective {
    /// Metric values `m_p(S)`, one per path (and per scenario for
    /// [`Objective::ThroughputSet`], scenario-major within each path).
    pub fn values(&self, index: &PartitionIndex, movements: &MovementSet, dep: &Deployment) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        match self {
            Objective::Distance => {
                for p in &movements.paths {
                    out.push(contact_opportunity_distance(index, p, dep));
                }
            }
            Objective::Time(k) => {
                for p in &movements.paths {
                    out.push(contact_opportunity_time(index, p, dep, k)?);
                }
            }
            Objective::Throughput { scenario, basis } => {
                let table = RateTable::for_basis(index, dep, scenario, *basis);
                for p in &movements.paths {
                    out.push(average_throughput_with(index, p, dep, scenario, &table)?);
                }
            }
            Objective::ThroughputSet { scenarios, basis } => {
                let tables: Vec<RateTable> = scenarios.iter().map(|k| RateTable::for_basis(index, dep, k, *basis)).collect();
                for p in &movements.paths {
                    for (k, t) in scenarios.iter().zip(&tables) {
                        out.push(average_throughput_with(index, p, dep, k, t)?);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn terms_per_path(&self) -> usize {
        match self {
            Objective::ThroughputSet { scenarios, .. } => scenarios.len(),
            _ => 1,
        }
    }
}

/// `Σ_p min{f_p · m_p(S), λ}`, where `f_p` are optional demand factors.
pub fn truncated_objective(
    index: &PartitionIndex,
    movements: &MovementSet,
    dep: &Deployment,
    lambda: f64,
    objective: &Objective,
    factors: Option<&[f64]>,
) -> Result<f64> {
    let vals = objective.values(index, movements, dep)?;
    let per = objective.terms_per_path();
    Ok(vals
        .iter()
        .enumerate()
        .map(|(i, m)| (m * factors.map_or(1.0, |f| f[i / per])).min(lambda))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::geometry::partition_edges;
    use crate::paths::parse_paths;
    use crate::scenario::Scenario;
    use proptest::prelude::*;

    fn dep(inst: &crate::geometry::Instance, labels: &[&str]) -> Deployment {
        Deployment::new(labels.iter().map(|l| inst.site_by_label(l).unwrap()), &inst.sites).unwrap()
    }

    fn t1_scenario(speeds: [f64; 3]) -> Scenario {
        Scenario { label: "t".into(), speed: speeds.to_vec(), density: vec![1.0; 3], rate: vec![1.0; 3] }
    }

    #[test]
    fn distance_fraction_by_hand() {
        let net = "node a 0 0\nnode b 100 0\nnode c 300 0\nnode d 600 0\nedge e1 a b\nedge e2 b c\nedge e3 c d\n\
                   site s1 50 0 poly 0 -1 100 -1 100 1 0 1\nsite s3 450 0 poly 300 -1 600 -1 600 1 300 1\n";
        let inst = crate::geometry::parse_instance(net).unwrap();
        let idx = partition_edges(&inst.network, &inst.sites).unwrap();
        let p = parse_paths("path p a b c d\n", &inst.network).unwrap();
        let d = contact_opportunity_distance(&idx, &p.paths[0], &Deployment::full(&inst.sites));
        assert!((d - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(contact_opportunity_distance(&idx, &p.paths[0], &Deployment::empty(&inst.sites)), 0.0);
    }

    #[test]
    fn all_covered_is_one() {
        let (inst, moves) = fixtures::t1();
        let idx = partition_edges(&inst.network, &inst.sites).unwrap();
        let all = Deployment::full(&inst.sites);
        assert_eq!(contact_opportunity_distance(&idx, &moves.paths[0], &all), 1.0);
        let t = contact_opportunity_time(&idx, &moves.paths[0], &all, &t1_scenario([0.7, 0.5, 1.0])).unwrap();
        assert_eq!(t, 1.0);
    }

    #[test]
    fn truncation_examples() {
        let (inst, moves) = fixtures::t3();
        let idx = partition_edges(&inst.network, &inst.sites).unwrap();
        let s = dep(&inst, &["a", "b"]);
        let v = truncated_objective(&idx, &moves, &s, 0.6, &Objective::Distance, None).unwrap();
        assert!((v - 1.1).abs() < 1e-12);
        let v = truncated_objective(&idx, &moves, &Deployment::empty(&inst.sites), 0.6, &Objective::Distance, None).unwrap();
        assert_eq!(v, 0.0);
        // two paths at 0.8 each truncated at 0.5
        let s = dep(&inst, &["a", "b", "c"]);
        let v = truncated_objective(&idx, &moves, &s, 0.5, &Objective::Distance, None).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let v = truncated_objective(&idx, &moves, &s, 0.5, &Objective::Distance, Some(&[1.0, 0.5])).unwrap();
        assert!((v - 0.9).abs() < 1e-12);
    }

    #[test]
    fn time_uniform_speed_matches_distance() {
        let (inst, moves) = fixtures::overlap();
        let idx = partition_edges(&inst.network, &inst.sites).unwrap();
        let s = dep(&inst, &["a2"]);
        let k = Scenario { label: "u".into(), speed: vec![4.0], density: vec![1.0], rate: vec![1.0; 2] };
        let t = contact_opportunity_time(&idx, &moves.paths[0], &s, &k).unwrap();
        assert!((t - contact_opportunity_distance(&idx, &moves.paths[0], &s)).abs() < 1e-15);
    }

    #[test]
    fn t1_appendix_values() {
        let (inst, moves) = fixtures::t1();
        let idx = partition_edges(&inst.network, &inst.sites).unwrap();
        let p = &moves.paths[0];
        let k = t1_scenario([1.0, 0.5, 0.5]);
        let s = dep(&inst, &["a1"]);
        assert!((contact_opportunity_time(&idx, p, &s, &k).unwrap() - 0.2).abs() < 1e-15);
        assert!((average_throughput(&idx, p, &s, &k).unwrap() - 0.2).abs() < 1e-15);
        let all = dep(&inst, &["a1", "a2", "a3"]);
        assert!((average_throughput(&idx, p, &all, &t1_scenario([0.6; 3])).unwrap() - 1.0).abs() < 1e-15);
        let two = dep(&inst, &["a1", "a2"]);
        assert!((average_throughput(&idx, p, &two, &t1_scenario([1.0, 1.0, 0.5])).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn nonpositive_speed_is_numeric_error() {
        let (inst, moves) = fixtures::t1();
        let idx = partition_edges(&inst.network, &inst.sites).unwrap();
        let e = contact_opportunity_time(&idx, &moves.paths[0], &Deployment::full(&inst.sites), &t1_scenario([1.0, 0.0, 1.0]));
        assert!(matches!(e, Err(Error::Numeric(_))));
    }

    fn random_case(seed: u64) -> (crate::geometry::Instance, MovementSet, PartitionIndex) {
        let spec = crate::synth::GridSpec::tiny();
        let inst = crate::synth::grid_network(&spec, seed);
        let moves = crate::paths::generate_paths(&inst.network, spec.min_path_length(), 4, seed, Default::default()).unwrap();
        let idx = partition_edges(&inst.network, &inst.sites).unwrap();
        (inst, moves, idx)
    }

    fn masks(n: usize, s_bits: u32, extra: u32, a: usize) -> (Vec<bool>, Vec<bool>, usize) {
        let a = a % n;
        let s: Vec<bool> = (0..n).map(|i| s_bits >> i & 1 == 1 && i != a).collect();
        let t: Vec<bool> = (0..n).map(|i| (s[i] || extra >> i & 1 == 1) && i != a).collect();
        (s, t, a)
    }

    fn with(mask: &[bool], a: usize) -> Vec<bool> {
        let mut m = mask.to_vec();
        m[a] = true;
        m
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn fixed_scenario_metrics_are_submodular_and_monotone(seed in 0u64..1000, sb in any::<u32>(), xb in any::<u32>(), a in 0usize..64, ks in any::<u64>()) {
            let (inst, moves, idx) = random_case(seed);
            let n = inst.sites.len();
            let (s, t, a) = masks(n, sb, xb, a);
            let model = crate::scenario::UncertaintyModel::new(&inst.network, &inst.sites);
            let k = crate::scenario::sample_scenarios(&model, 1, ks).remove(0);
            let eval = |m: &[bool]| -> Vec<f64> {
                let d = Deployment::from_mask(m.to_vec(), &inst.sites);
                let mut v = Objective::Distance.values(&idx, &moves, &d).unwrap();
                v.extend(Objective::Time(k.clone()).values(&idx, &moves, &d).unwrap());
                for basis in [RateBasis::AllCandidates, RateBasis::Exclusive] {
                    v.extend(Objective::Throughput { scenario: k.clone(), basis }.values(&idx, &moves, &d).unwrap());
                }
                v
            };
            let (fs, fsa, ft, fta) = (eval(&s), eval(&with(&s, a)), eval(&t), eval(&with(&t, a)));
            let empty = eval(&vec![false; n]);
            for i in 0..fs.len() {
                prop_assert!(fsa[i] - fs[i] >= fta[i] - ft[i] - 1e-12);
                prop_assert!(fs[i] <= ft[i] + 1e-12);
                prop_assert_eq!(empty[i], 0.0);
            }
        }

        #[test]
        fn per_edge_and_per_subsegment_forms_agree(seed in 0u64..1000, sb in any::<u32>(), ks in any::<u64>()) {
            let (inst, moves, idx) = random_case(seed);
            let n = inst.sites.len();
            let d = Deployment::from_mask((0..n).map(|i| sb >> (i % 32) & 1 == 1).collect(), &inst.sites);
            let model = crate::scenario::UncertaintyModel::new(&inst.network, &inst.sites);
            let k = crate::scenario::sample_scenarios(&model, 1, ks).remove(0);
            let table = load_profile(&idx, &d, &k);
            let table = RateTable::from_profile(&table);
            for p in &moves.paths {
                let speeds: Vec<f64> = p.edges.iter().flat_map(|e| idx.edge_subsegments(*e).iter().map(|_| k.speed[e.index()])).collect();
                let a = average_throughput_with(&idx, p, &d, &k, &table).unwrap();
                let b = average_throughput_per_subsegment(&idx, p, &d, &table, &speeds).unwrap();
                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
            }
        }

        #[test]
        fn unit_rate_and_light_load_reduces_to_time(seed in 0u64..1000, sb in any::<u32>(), ks in any::<u64>()) {
            let (inst, moves, idx) = random_case(seed);
            let n = inst.sites.len();
            let d = Deployment::from_mask((0..n).map(|i| sb >> (i % 32) & 1 == 1).collect(), &inst.sites);
            let model = crate::scenario::UncertaintyModel::new(&inst.network, &inst.sites);
            let mut k = crate::scenario::sample_scenarios(&model, 1, ks).remove(0);
            k.rate.iter_mut().for_each(|r| *r = 1.0);
            k.density.iter_mut().for_each(|h| *h = 1e-6);
            for p in &moves.paths {
                let g = average_throughput(&idx, p, &d, &k).unwrap();
                let t = contact_opportunity_time(&idx, p, &d, &k).unwrap();
                prop_assert!((g - t).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn truncated_feasibility_equivalence_by_enumeration() {
        for seed in 0..5 {
            let (inst, moves, idx) = random_case(seed);
            let n = inst.sites.len().min(10);
            let lambda = 0.3;
            for bits in 0u32..(1 << n) {
                let mut m = vec![false; inst.sites.len()];
                (0..n).for_each(|i| m[i] = bits >> i & 1 == 1);
                let d = Deployment::from_mask(m, &inst.sites);
                let vals = Objective::Distance.values(&idx, &moves, &d).unwrap();
                let f = truncated_objective(&idx, &moves, &d, lambda, &Objective::Distance, None).unwrap();
                let all_ok = vals.iter().all(|v| *v >= lambda);
                assert_eq!(all_ok, (f - lambda * moves.len() as f64).abs() < 1e-12, "seed {seed} bits {bits}");
            }
        }
    }
}
