//! Greedy weighted covering over truncated additive terms.
//!
//! Each term owns weighted slots; an element covers a set of slots and a
//! term's value is `min(Σ covered slot weights, cap)`. The sum over terms is
//! monotone submodular in the selected elements. Weights are stored as
//! integers so that marginal gains are exact and lazy evaluation reproduces
//! the naive selection sequence.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

/// Fixed-point scale of slot weights.
pub const SCALE: f64 = (1u64 << 40) as f64;

/// Slack subtracted from every target so values that reach it up to
/// rounding count as reaching it.
pub const FEAS_TOL: f64 = 1e-9;

pub fn quantize_cap(lambda: f64) -> i64 {
    ((lambda - FEAS_TOL).max(0.0) * SCALE).round() as i64
}

/// Rounds each weight on its own so equal weights stay equal and ties keep
/// breaking by id. The summed rounding error stays far below `FEAS_TOL`.
pub fn quantize_weights(w: &[f64]) -> Vec<i64> {
    w.iter().map(|x| (x * SCALE).round() as i64).collect()
}

#[derive(Debug, Clone)]
pub struct Engine {
    slot_term: Vec<u32>,
    slot_weight: Vec<i64>,
    term_cap: Vec<i64>,
    /// Slots of each element, sorted by term.
    elem_slots: Vec<Vec<u32>>,
    costs: Vec<f64>,
}

/// One greedy pick.
#[derive(Debug, Clone, PartialEq)]
pub struct Pick {
    pub element: usize,
    pub gain: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub lazy: bool,
    /// Elements selected before the run starts, at no cost.
    pub initial: Vec<usize>,
    /// Abort once the accumulated cost exceeds this.
    pub budget: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Run {
    pub picks: Vec<Pick>,
    pub cost: f64,
    pub value: i128,
    /// Value with every element selected.
    pub full_value: i128,
    /// Value at which every term is capped.
    pub max_value: i128,
    pub evaluations: u64,
    pub over_budget: bool,
}

impl Run {
    pub fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.picks.iter().map(|p| p.element)
    }

    /// Every term reached its cap.
    pub fn saturated(&self) -> bool {
        self.value == self.max_value
    }
}

struct State<'a> {
    engine: &'a Engine,
    covered: Vec<bool>,
    term_sum: Vec<i64>,
    value: i128,
}

impl<'a> State<'a> {
    fn new(engine: &'a Engine) -> Self {
        State { engine, covered: vec![false; engine.slot_term.len()], term_sum: vec![0; engine.term_cap.len()], value: 0 }
    }

    fn gain(&self, e: usize) -> i128 {
        let eng = self.engine;
        let slots = &eng.elem_slots[e];
        let mut gain = 0i128;
        let mut i = 0;
        while i < slots.len() {
            let t = eng.slot_term[slots[i] as usize] as usize;
            let mut add = 0i64;
            while i < slots.len() && eng.slot_term[slots[i] as usize] as usize == t {
                let s = slots[i] as usize;
                if !self.covered[s] {
                    add += eng.slot_weight[s];
                }
                i += 1;
            }
            if add > 0 {
                let cap = eng.term_cap[t];
                let cur = self.term_sum[t];
                gain += ((cur + add).min(cap) - cur.min(cap)) as i128;
            }
        }
        gain
    }

    fn add(&mut self, e: usize) {
        let eng = self.engine;
        for &s in &eng.elem_slots[e] {
            let s = s as usize;
            if !self.covered[s] {
                self.covered[s] = true;
                let t = eng.slot_term[s] as usize;
                let cap = eng.term_cap[t];
                let before = self.term_sum[t].min(cap);
                self.term_sum[t] += eng.slot_weight[s];
                self.value += (self.term_sum[t].min(cap) - before) as i128;
            }
        }
    }
}

#[derive(PartialEq)]
struct Key {
    ratio: f64,
    element: usize,
    gain: i128,
    round: usize,
}

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, o: &Self) -> Ordering {
        self.ratio.total_cmp(&o.ratio).then_with(|| o.element.cmp(&self.element))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

fn ratio(gain: i128, cost: f64) -> f64 {
    let g = gain as f64 / SCALE;
    if cost > 0.0 {
        g / cost
    } else if g > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

impl Engine {
    /// `terms[t]` lists `(slot key, weight)` pairs; `covers[e]` lists the slot
    /// keys element `e` covers. Slot keys are `(term, position in term)`.
    pub fn new(terms: Vec<(Vec<i64>, i64)>, covers: Vec<Vec<(u32, u32)>>, costs: Vec<f64>) -> Self {
        let mut offset = Vec::with_capacity(terms.len());
        let mut slot_term = Vec::new();
        let mut slot_weight = Vec::new();
        let mut term_cap = Vec::with_capacity(terms.len());
        for (t, (w, cap)) in terms.into_iter().enumerate() {
            offset.push(slot_term.len() as u32);
            slot_term.extend(std::iter::repeat(t as u32).take(w.len()));
            slot_weight.extend(w);
            term_cap.push(cap);
        }
        let elem_slots = covers
            .into_iter()
            .map(|c| {
                let mut s: Vec<u32> = c.into_iter().map(|(t, i)| offset[t as usize] + i).collect();
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        Engine { slot_term, slot_weight, term_cap, elem_slots, costs }
    }

    pub fn element_count(&self) -> usize {
        self.costs.len()
    }

    pub fn term_count(&self) -> usize {
        self.term_cap.len()
    }

    pub fn cost(&self, e: usize) -> f64 {
        self.costs[e]
    }

    pub fn set_cap(&mut self, cap: i64) {
        self.term_cap.iter_mut().for_each(|c| *c = cap);
    }

    pub fn max_value(&self) -> i128 {
        self.term_cap.iter().map(|c| *c as i128).sum()
    }

    /// Objective with the given elements selected.
    pub fn value_of(&self, elements: impl IntoIterator<Item = usize>) -> i128 {
        let mut st = State::new(self);
        for e in elements {
            st.add(e);
        }
        st.value
    }

    /// Uncapped covered weight per term for a selection.
    pub fn term_sums(&self, elements: impl IntoIterator<Item = usize>) -> Vec<i64> {
        let mut st = State::new(self);
        for e in elements {
            st.add(e);
        }
        st.term_sum
    }

    /// Cost-effectiveness greedy until the value equals the all-elements value.
    pub fn run(&self, opts: &RunOptions) -> Run {
        let full_value = self.value_of(0..self.element_count());
        let mut st = State::new(self);
        let mut in_set = vec![false; self.element_count()];
        for &e in &opts.initial {
            in_set[e] = true;
            st.add(e);
        }
        let mut run = Run {
            picks: Vec::new(),
            cost: 0.0,
            value: st.value,
            full_value,
            max_value: self.max_value(),
            evaluations: 0,
            over_budget: false,
        };
        let mut heap = BinaryHeap::new();
        if opts.lazy {
            for e in 0..self.element_count() {
                if !in_set[e] {
                    heap.push(Key { ratio: f64::INFINITY, element: e, gain: 0, round: usize::MAX });
                }
            }
        }
        let mut round = 0;
        while st.value < full_value {
            let best = if opts.lazy {
                self.lazy_pick(&st, &mut heap, round, &mut run.evaluations)
            } else {
                self.naive_pick(&st, &in_set, &mut run.evaluations)
            };
            let Some((e, gain)) = best else { break };
            in_set[e] = true;
            st.add(e);
            run.cost += self.costs[e];
            run.picks.push(Pick { element: e, gain: gain as f64 / SCALE, ratio: ratio(gain, self.costs[e]) });
            round += 1;
            if opts.budget.is_some_and(|b| run.cost > b) {
                run.over_budget = true;
                break;
            }
        }
        run.value = st.value;
        run
    }

    fn naive_pick(&self, st: &State, in_set: &[bool], evals: &mut u64) -> Option<(usize, i128)> {
        let cands: Vec<usize> = (0..self.element_count()).filter(|e| !in_set[*e]).collect();
        *evals += cands.len() as u64;
        let scored: Vec<(usize, i128)> = cands.par_iter().map(|&e| (e, st.gain(e))).collect();
        let mut best: Option<(usize, i128, f64)> = None;
        for (e, g) in scored {
            if g <= 0 {
                continue;
            }
            let r = ratio(g, self.costs[e]);
            if best.map_or(true, |(_, _, br)| r > br) {
                best = Some((e, g, r));
            }
        }
        best.map(|(e, g, _)| (e, g))
    }

    fn lazy_pick(&self, st: &State, heap: &mut BinaryHeap<Key>, round: usize, evals: &mut u64) -> Option<(usize, i128)> {
        while let Some(top) = heap.pop() {
            if top.round == round {
                return Some((top.element, top.gain));
            }
            *evals += 1;
            let g = st.gain(top.element);
            if g > 0 {
                heap.push(Key { ratio: ratio(g, self.costs[top.element]), element: top.element, gain: g, round });
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn build(seed: u64, n_elem: usize, n_terms: usize, cap: f64) -> Engine {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut terms = Vec::new();
        let mut covers = vec![Vec::new(); n_elem];
        for t in 0..n_terms {
            let k = rng.gen_range(1..8);
            let raw: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
            let total: f64 = raw.iter().sum();
            let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
            for i in 0..k {
                for e in 0..n_elem {
                    if rng.gen_bool(0.25) {
                        covers[e].push((t as u32, i as u32));
                    }
                }
            }
            terms.push((quantize_weights(&w), quantize_cap(cap)));
        }
        let costs = (0..n_elem).map(|_| [1.0, 2.0, 3.0][rng.gen_range(0..3)]).collect();
        Engine::new(terms, covers, costs)
    }

    #[test]
    fn quantized_weights_keep_ties() {
        let q = quantize_weights(&[1.0 / 3.0; 3]);
        assert!(q.iter().all(|&x| x == q[0]));
        let err = (q.iter().sum::<i64>() - SCALE as i64).abs();
        assert!(err < 2 && (err as f64) < FEAS_TOL * SCALE);
    }

    #[test]
    fn initial_elements_are_free() {
        let eng = build(3, 6, 5, 0.5);
        let run = eng.run(&RunOptions { lazy: true, initial: vec![0, 1], budget: None });
        assert!(run.picks.iter().all(|p| p.element > 1));
        assert_eq!(run.value, run.full_value);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn lazy_matches_naive(seed in any::<u64>(), n in 2usize..30, t in 1usize..12, cap in 0.05f64..1.0) {
            let eng = build(seed, n, t, cap);
            let a = eng.run(&RunOptions { lazy: true, ..Default::default() });
            let b = eng.run(&RunOptions { lazy: false, ..Default::default() });
            prop_assert_eq!(a.picks, b.picks);
            prop_assert_eq!(a.value, a.full_value);
        }

        #[test]
        fn gains_are_submodular(seed in any::<u64>(), n in 3usize..20, t in 1usize..10, cap in 0.05f64..1.0, sb in any::<u32>(), xb in any::<u32>(), a in 0usize..20) {
            let eng = build(seed, n, t, cap);
            let a = a % n;
            let s: Vec<usize> = (0..n).filter(|i| sb >> i & 1 == 1 && *i != a).collect();
            let tt: Vec<usize> = (0..n).filter(|i| (sb | xb) >> i & 1 == 1 && *i != a).collect();
            let gs = eng.value_of(s.iter().copied().chain([a])) - eng.value_of(s.iter().copied());
            let gt = eng.value_of(tt.iter().copied().chain([a])) - eng.value_of(tt.iter().copied());
            prop_assert!(gs >= gt);
            prop_assert!(gt >= 0);
        }
    }
}
