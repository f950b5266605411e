//! Traffic and capacity uncertainty: interval model, special scenarios,
//! worst-case search and sampling.

mod worst;

pub use worst::{
    pivot_search, worst_case_for_path, worst_case_overall, worst_case_time_special, worst_case_values, PivotItem,
    WorstCase,
};

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{CandidateSite, Instance, Interval, RoadNetwork};
use crate::{Error, Result};

/// Interval bounds for every uncertain quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyModel {
    pub speed: Vec<Interval>,
    pub density: Vec<Interval>,
    pub rate: Vec<Interval>,
}

impl UncertaintyModel {
    pub fn new(net: &RoadNetwork, sites: &[CandidateSite]) -> Self {
        UncertaintyModel {
            speed: net.edges().iter().map(|e| e.speed).collect(),
            density: net.edges().iter().map(|e| e.density).collect(),
            rate: sites.iter().map(|s| s.rate).collect(),
        }
    }

    pub fn from_instance(inst: &Instance) -> Self {
        Self::new(&inst.network, &inst.sites)
    }

    /// `β = max_e v²_e / v¹_e`.
    pub fn beta(&self) -> f64 {
        self.speed.iter().map(|v| v.hi / v.lo).fold(1.0, f64::max)
    }

    /// Replaces density bounds with `[lo·ĥ_e, hi·ĥ_e]`, keeping a positive floor.
    pub fn with_estimated_density(&self, estimate: &[f64], lo: f64, hi: f64, floor: f64) -> Self {
        let mut m = self.clone();
        for (iv, h) in m.density.iter_mut().zip(estimate) {
            let h = h.max(floor);
            *iv = Interval::new(lo * h, hi * h);
        }
        m
    }
}

/// One assignment of speeds, densities and rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub label: String,
    /// `v_e` per edge, m/s.
    pub speed: Vec<f64>,
    /// `h_e` per edge, users/m.
    pub density: Vec<f64>,
    /// `r_a` per site, Mbps.
    pub rate: Vec<f64>,
}

impl Scenario {
    pub fn validate(&self, model: &UncertaintyModel) -> Result<()> {
        let inside = |iv: &Interval, v: f64| v >= iv.lo * (1.0 - 1e-12) && v <= iv.hi * (1.0 + 1e-12);
        let groups: [(&str, &[Interval], &[f64]); 3] =
            [("speed", &model.speed, &self.speed), ("density", &model.density, &self.density), ("rate", &model.rate, &self.rate)];
        for (what, ivs, vals) in groups {
            if ivs.len() != vals.len() {
                return Err(Error::Invalid(format!("scenario `{}` has {} {what} values, expected {}", self.label, vals.len(), ivs.len())));
            }
            for (i, (iv, v)) in ivs.iter().zip(vals).enumerate() {
                if !inside(iv, *v) {
                    return Err(Error::Invalid(format!(
                        "scenario `{}`: {what} #{i} = {v} outside [{}, {}]",
                        self.label, iv.lo, iv.hi
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_text(&self, inst: &Instance) -> String {
        let mut out = String::new();
        writeln!(out, "label {}", self.label).unwrap();
        for (e, v) in inst.network.edges().iter().zip(&self.speed) {
            writeln!(out, "speed {} {v}", e.label).unwrap();
        }
        for (e, h) in inst.network.edges().iter().zip(&self.density) {
            writeln!(out, "density {} {h}", e.label).unwrap();
        }
        for (s, r) in inst.sites.iter().zip(&self.rate) {
            writeln!(out, "rate {} {r}", s.label).unwrap();
        }
        out
    }
}

/// `k₀`: midpoint speeds, upper densities, lower rates.
pub fn mean_speed_scenario(model: &UncertaintyModel) -> Scenario {
    Scenario {
        label: "k0".into(),
        speed: model.speed.iter().map(Interval::mid).collect(),
        density: model.density.iter().map(|h| h.hi).collect(),
        rate: model.rate.iter().map(|r| r.lo).collect(),
    }
}

/// `k⁰`: every quantity at its midpoint.
pub fn mean_scenario(model: &UncertaintyModel) -> Scenario {
    Scenario {
        label: "k^0".into(),
        speed: model.speed.iter().map(Interval::mid).collect(),
        density: model.density.iter().map(Interval::mid).collect(),
        rate: model.rate.iter().map(Interval::mid).collect(),
    }
}

fn draw(rng: &mut ChaCha8Rng, iv: &Interval) -> f64 {
    iv.lo + (iv.hi - iv.lo) * rng.gen::<f64>()
}

/// `n` independent scenarios with every quantity uniform on its interval.
pub fn sample_scenarios(model: &UncertaintyModel, n: usize, seed: u64) -> Vec<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| Scenario {
            label: format!("sample#{i}"),
            speed: model.speed.iter().map(|iv| draw(&mut rng, iv)).collect(),
            density: model.density.iter().map(|iv| draw(&mut rng, iv)).collect(),
            rate: model.rate.iter().map(|iv| draw(&mut rng, iv)).collect(),
        })
        .collect()
}

/// Parses one or more scenarios. Each `label` record starts a new scenario
/// and runs to the end of its line; unspecified values take their interval
/// midpoint.
pub fn parse_scenarios(text: &str, inst: &Instance) -> Result<Vec<Scenario>> {
    let model = UncertaintyModel::from_instance(inst);
    let mut out: Vec<Scenario> = Vec::new();
    let fresh = |label: String| Scenario { label, ..mean_scenario(&model) };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks[0] == "label" {
            // labels may contain `#`, so take the rest of the raw line
            let label = raw.trim_start()["label".len()..].trim().to_string();
            if label.is_empty() {
                return Err(Error::parse(line, "expected scenario label"));
            }
            out.push(fresh(label));
            continue;
        }
        if toks.len() != 3 {
            return Err(Error::parse(line, format!("expected `{} <id> <value>`", toks[0])));
        }
        let v: f64 = toks[2].parse().map_err(|_| Error::parse(line, format!("bad number `{}`", toks[2])))?;
        if out.is_empty() {
            out.push(fresh(format!("scenario#{}", out.len())));
        }
        let k = out.last_mut().unwrap();
        let (slot, iv) = match toks[0] {
            "speed" | "density" => {
                let e = inst.network.edge_by_label(toks[1]).ok_or_else(|| Error::parse(line, format!("unknown edge `{}`", toks[1])))?;
                if toks[0] == "speed" {
                    (&mut k.speed[e.index()], model.speed[e.index()])
                } else {
                    (&mut k.density[e.index()], model.density[e.index()])
                }
            }
            "rate" => {
                let a = inst.site_by_label(toks[1]).ok_or_else(|| Error::parse(line, format!("unknown site `{}`", toks[1])))?;
                (&mut k.rate[a.index()], model.rate[a.index()])
            }
            other => return Err(Error::parse(line, format!("unknown record `{other}`"))),
        };
        if !(v >= iv.lo * (1.0 - 1e-12) && v <= iv.hi * (1.0 + 1e-12)) {
            return Err(Error::parse(line, format!("{} {v} outside [{}, {}]", toks[0], iv.lo, iv.hi)));
        }
        *slot = v;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn model(v: (f64, f64), h: (f64, f64), r: (f64, f64)) -> UncertaintyModel {
        UncertaintyModel {
            speed: vec![Interval::new(v.0, v.1)],
            density: vec![Interval::new(h.0, h.1)],
            rate: vec![Interval::new(r.0, r.1)],
        }
    }

    #[test]
    fn special_scenarios() {
        let m = model((10.0, 20.0), (1.0, 3.0), (5.0, 10.0));
        let k0 = mean_speed_scenario(&m);
        assert_eq!((k0.speed[0], k0.density[0], k0.rate[0]), (15.0, 3.0, 5.0));
        assert_eq!(k0.label, "k0");
        let km = mean_scenario(&m);
        assert_eq!((km.speed[0], km.density[0], km.rate[0]), (15.0, 2.0, 7.5));
        assert_eq!(km.label, "k^0");
        assert_eq!(m.beta(), 2.0);
    }

    #[test]
    fn degenerate_intervals_sample_identically() {
        let m = model((12.0, 12.0), (0.5, 0.5), (3.0, 3.0));
        let s = sample_scenarios(&m, 5, 9);
        assert!(s.iter().all(|k| k.speed == s[0].speed && k.density == s[0].density && k.rate == s[0].rate));
        assert_eq!(s[3].label, "sample#3");
    }

    #[test]
    fn sampling_is_seeded_and_unbiased() {
        let m = model((10.0, 20.0), (1.0, 3.0), (5.0, 10.0));
        assert_eq!(sample_scenarios(&m, 10, 4), sample_scenarios(&m, 10, 4));
        let s = sample_scenarios(&m, 1000, 4);
        let mean = s.iter().map(|k| k.speed[0]).sum::<f64>() / 1000.0;
        assert!((mean - 15.0).abs() <= 0.3, "{mean}");
        for k in &s {
            k.validate(&m).unwrap();
        }
    }

    #[test]
    fn scenario_file_round_trip() {
        let (inst, _) = fixtures::t1();
        let m = UncertaintyModel::from_instance(&inst);
        let k = sample_scenarios(&m, 1, 2).remove(0);
        let back = parse_scenarios(&k.to_text(&inst), &inst).unwrap();
        assert_eq!(back, vec![k]);
        let partial = parse_scenarios("label hot\nspeed e2 0.5\n", &inst).unwrap();
        assert_eq!(partial[0].speed, vec![0.75, 0.5, 0.75]);
        assert!(parse_scenarios("speed e2 3\n", &inst).is_err());
        assert!(parse_scenarios("speed zz 0.6\n", &inst).is_err());
    }
}
