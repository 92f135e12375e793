use super::path::random_in_n;
use super::{apply, transition, QueueVector, RandomTape, StepEffect, TapeEvent};
use crate::error::{Error, Result};
use crate::params::Params;
use crate::rng::{child_seed, seeded, SimRng};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Tracks the difference a − b of one pair incrementally.
#[derive(Debug, Clone)]
struct DiffTracker {
    diff: BTreeMap<usize, i64>,
    l1: u64,
    /// |diff| value → number of queues with that |diff|.
    abs_hist: BTreeMap<u64, u64>,
    positive: u64,
    negative: u64,
}

impl DiffTracker {
    fn new(a: &QueueVector, b: &QueueVector) -> Self {
        let mut t = DiffTracker {
            diff: BTreeMap::new(),
            l1: 0,
            abs_hist: BTreeMap::new(),
            positive: 0,
            negative: 0,
        };
        for q in 0..a.n() {
            let d = a[q] as i64 - b[q] as i64;
            if d != 0 {
                t.set(q, 0, d);
            }
        }
        t
    }

    fn set(&mut self, q: usize, old: i64, new: i64) {
        if old != 0 {
            let a = old.unsigned_abs();
            self.l1 -= a;
            let c = self.abs_hist.get_mut(&a).expect("tracked value");
            *c -= 1;
            if *c == 0 {
                self.abs_hist.remove(&a);
            }
            if old > 0 {
                self.positive -= 1;
            } else {
                self.negative -= 1;
            }
        }
        if new != 0 {
            let a = new.unsigned_abs();
            self.l1 += a;
            *self.abs_hist.entry(a).or_insert(0) += 1;
            if new > 0 {
                self.positive += 1;
            } else {
                self.negative += 1;
            }
            self.diff.insert(q, new);
        } else {
            self.diff.remove(&q);
        }
    }

    /// Applies a change of `delta` to a[q] (sign = +1) or b[q] (sign = −1).
    fn shift(&mut self, q: usize, delta: i64) {
        let old = self.diff.get(&q).copied().unwrap_or(0);
        self.set(q, old, old + delta);
    }

    fn linf(&self) -> u64 {
        self.abs_hist.keys().next_back().copied().unwrap_or(0)
    }

    fn coalesced(&self) -> bool {
        self.diff.is_empty()
    }

    fn a_le_b(&self) -> bool {
        self.positive == 0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoupledOptions {
    /// Pairs (a, b) of state indices to track; consecutive pairs by default.
    pub pairs: Option<Vec<(usize, usize)>>,
    /// Record distance series every this many steps (0 = never).
    pub record_every: u64,
    /// Stop as soon as every tracked pair has coalesced.
    pub stop_when_coalesced: bool,
    pub cap: Option<u32>,
}

impl Default for CoupledOptions {
    fn default() -> Self {
        CoupledOptions { pairs: None, record_every: 1, stop_when_coalesced: false, cap: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairTrace {
    pub a: usize,
    pub b: usize,
    pub coalesced_at: Option<u64>,
    /// (t, ‖X^a_t − X^b_t‖₁, ‖X^a_t − X^b_t‖∞) at recorded times.
    pub distance: Vec<(u64, u64, u64)>,
    /// (t, W_t) for pairs that start adjacent.
    pub w: Vec<(u64, u32)>,
    pub adjacent_at_start: bool,
    pub ordered_at_start: bool,
    /// Steps at which the ℓ₁ or ℓ∞ distance grew (should stay 0).
    pub l1_increases: u64,
    pub linf_increases: u64,
    /// Steps at which an initially ordered pair lost its order.
    pub order_violations: u64,
    /// Steps at which an initially adjacent pair was neither adjacent nor equal.
    pub adjacency_violations: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoupledRun {
    pub tape_seed: u64,
    pub steps: u64,
    pub final_states: Vec<QueueVector>,
    pub pairs: Vec<PairTrace>,
}

impl CoupledRun {
    pub fn violations(&self) -> u64 {
        self.pairs
            .iter()
            .map(|p| p.l1_increases + p.linf_increases + p.order_violations + p.adjacency_violations)
            .sum()
    }

    /// One row per recorded (pair, t).
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["a", "b", "step", "l1", "linf", "W"]).map_err(io)?;
        for p in &self.pairs {
            for (i, &(t, l1, linf)) in p.distance.iter().enumerate() {
                let w = p.w.get(i).filter(|(tw, _)| *tw == t).map(|(_, w)| w.to_string()).unwrap_or_default();
                wr.write_record([
                    p.a.to_string(),
                    p.b.to_string(),
                    t.to_string(),
                    l1.to_string(),
                    linf.to_string(),
                    w,
                ])
                .map_err(io)?;
            }
        }
        wr.flush().map_err(|e| Error::Config(e.to_string()))
    }
}

fn io(e: csv::Error) -> Error {
    Error::Config(e.to_string())
}

fn w_of(x: &QueueVector, y: &QueueVector, t: &DiffTracker) -> u32 {
    t.diff.keys().map(|&q| x[q].max(y[q])).max().unwrap_or(0)
}

/// Runs all `states` on one tape for `horizon` steps, checking contraction,
/// order preservation and adjacency at every step.
pub fn run_coupled(
    states: &[QueueVector],
    tape: &RandomTape,
    horizon: u64,
    opts: &CoupledOptions,
) -> Result<CoupledRun> {
    let n = states.first().map(|s| s.n()).ok_or_else(|| Error::Config("no states".into()))?;
    if states.iter().any(|s| s.n() != n) || tape.n != n {
        return Err(Error::Config("coupled states must share n with the tape".into()));
    }
    let pair_list: Vec<(usize, usize)> =
        opts.pairs.clone().unwrap_or_else(|| (1..states.len()).map(|i| (i - 1, i)).collect());
    if pair_list.iter().any(|&(a, b)| a >= states.len() || b >= states.len()) {
        return Err(Error::Config("pair index out of range".into()));
    }
    let mut xs = states.to_vec();
    let mut trackers: Vec<DiffTracker> =
        pair_list.iter().map(|&(a, b)| DiffTracker::new(&xs[a], &xs[b])).collect();
    let mut traces: Vec<PairTrace> = pair_list
        .iter()
        .zip(&trackers)
        .map(|(&(a, b), tr)| PairTrace {
            a,
            b,
            coalesced_at: tr.coalesced().then_some(0),
            distance: Vec::new(),
            w: Vec::new(),
            adjacent_at_start: tr.l1 == 1,
            ordered_at_start: tr.a_le_b(),
            l1_increases: 0,
            linf_increases: 0,
            order_violations: 0,
            adjacency_violations: 0,
        })
        .collect();
    let record = |t: u64, traces: &mut [PairTrace], trackers: &[DiffTracker], xs: &[QueueVector]| {
        for (tr, pt) in trackers.iter().zip(traces.iter_mut()) {
            pt.distance.push((t, tr.l1, tr.linf()));
            if pt.adjacent_at_start {
                pt.w.push((t, w_of(&xs[pt.a], &xs[pt.b], tr)));
            }
        }
    };
    if opts.record_every > 0 {
        record(0, &mut traces, &trackers, &xs);
    }
    // involvement[s] = list of (tracker index, sign)
    let mut involvement: Vec<Vec<(usize, i64)>> = vec![Vec::new(); xs.len()];
    for (i, &(a, b)) in pair_list.iter().enumerate() {
        involvement[a].push((i, 1));
        involvement[b].push((i, -1));
    }
    let mut effects: Vec<StepEffect> = vec![StepEffect::Idle; xs.len()];
    let mut steps = 0;
    for t in 0..horizon {
        if opts.stop_when_coalesced && traces.iter().all(|p| p.coalesced_at.is_some()) {
            break;
        }
        let ev = tape.event(t);
        for (s, x) in xs.iter().enumerate() {
            effects[s] = transition(x, &ev, opts.cap);
        }
        let before: Vec<(u64, u64)> = trackers.iter().map(|tr| (tr.l1, tr.linf())).collect();
        for (s, x) in xs.iter_mut().enumerate() {
            apply(x, effects[s]);
            if let Some((q, delta)) = effects[s].change() {
                for &(i, sign) in &involvement[s] {
                    trackers[i].shift(q, sign * delta as i64);
                }
            }
        }
        steps = t + 1;
        for (i, (tr, pt)) in trackers.iter().zip(traces.iter_mut()).enumerate() {
            let (l1, linf) = (tr.l1, tr.linf());
            if l1 > before[i].0 {
                pt.l1_increases += 1;
            }
            if linf > before[i].1 {
                pt.linf_increases += 1;
            }
            if pt.ordered_at_start && !tr.a_le_b() {
                pt.order_violations += 1;
            }
            if pt.adjacent_at_start && l1 > 1 {
                pt.adjacency_violations += 1;
            }
            if pt.coalesced_at.is_none() && tr.coalesced() {
                pt.coalesced_at = Some(steps);
            }
        }
        if opts.record_every > 0 && steps % opts.record_every == 0 {
            record(steps, &mut traces, &trackers, &xs);
        }
    }
    Ok(CoupledRun { tape_seed: tape.seed, steps, final_states: xs, pairs: traces })
}

/// The effects of one event on two states, scanning D_t once.
fn transition_pair(x: &QueueVector, y: &QueueVector, ev: &TapeEvent) -> (StepEffect, StepEffect) {
    if ev.arrival {
        let (mut bx, mut by) = (usize::MAX, usize::MAX);
        let (mut lx, mut ly) = (u32::MAX, u32::MAX);
        for q in ev.choices() {
            if x[q] < lx {
                lx = x[q];
                bx = q;
            }
            if y[q] < ly {
                ly = y[q];
                by = q;
            }
            if lx == 0 && ly == 0 {
                break;
            }
        }
        (StepEffect::Arrival(bx), StepEffect::Arrival(by))
    } else {
        let q = ev.departure;
        let e = |v: &QueueVector| if v[q] > 0 { StepEffect::Departure(q) } else { StepEffect::Idle };
        (e(x), e(y))
    }
}

/// First t with X^x_t = X^y_t, or None if that does not happen by `horizon`.
pub fn coalescence_time(x: &QueueVector, y: &QueueVector, tape: &RandomTape, horizon: u64) -> Result<Option<u64>> {
    if x.n() != y.n() || tape.n != x.n() {
        return Err(Error::Config("coalescence pair must share n with the tape".into()));
    }
    let (mut x, mut y) = (x.clone(), y.clone());
    let mut support: BTreeSet<usize> = (0..x.n()).filter(|&q| x[q] != y[q]).collect();
    if support.is_empty() {
        return Ok(Some(0));
    }
    for t in 0..horizon {
        let ev = tape.event(t);
        let (ex, ey) = transition_pair(&x, &y, &ev);
        apply(&mut x, ex);
        apply(&mut y, ey);
        for q in [ex, ey].iter().filter_map(|e| e.change()).map(|(q, _)| q) {
            if x[q] == y[q] {
                support.remove(&q);
            } else {
                support.insert(q);
            }
        }
        if support.is_empty() {
            return Ok(Some(t + 1));
        }
    }
    Ok(None)
}

/// Coupled run of every state of a path; returns each edge's coalescence time.
pub fn edge_coalescence_times(path: &super::Path, tape: &RandomTape, horizon: u64) -> Result<Vec<Option<u64>>> {
    let states = path.states();
    let opts = CoupledOptions { record_every: 0, stop_when_coalesced: true, ..Default::default() };
    let run = run_coupled(&states, tape, horizon, &opts)?;
    Ok(run.pairs.iter().map(|p| p.coalesced_at).collect())
}

/// How each replica's starting pair is produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum PairSource {
    /// Run `base` for `burn_in` steps on a private tape, then pair the result
    /// x with x + e_q for a uniform queue q.
    AdjacentAfterBurnIn { base: QueueVector, burn_in: u64 },
    /// x uniform-ish in 𝒩^ε (see `random_in_n`), y = x + e_q with y ∈ 𝒩^ε.
    AdjacentInN { params: Params, eps: f64 },
    /// The same pair in every replica.
    Fixed { x: QueueVector, y: QueueVector },
    /// The x → 0 → y path: every edge coalesces once X^0 meets both X^x and
    /// X^y, since the path is sandwiched between 0 and x (resp. y).
    ThroughEmpty { x: QueueVector, y: QueueVector },
}

impl PairSource {
    fn n(&self) -> Result<usize> {
        Ok(match self {
            PairSource::AdjacentAfterBurnIn { base, .. } => base.n(),
            PairSource::AdjacentInN { params, .. } => params.n_usize()?,
            PairSource::Fixed { x, .. } | PairSource::ThroughEmpty { x, .. } => x.n(),
        })
    }

    fn sample(&self, d: u64, lambda: f64, seed: u64) -> Result<(QueueVector, QueueVector)> {
        let mut rng: SimRng = seeded(child_seed(seed, 0));
        match self {
            PairSource::AdjacentAfterBurnIn { base, burn_in } => {
                let tape = RandomTape::new(child_seed(seed, 1), base.n(), d, lambda)?;
                let mut x = base.clone();
                for t in 0..*burn_in {
                    super::step_vector(&mut x, &tape.event(t));
                }
                let mut y = x.clone();
                y.bump(rng.random_range(0..x.n()), 1);
                Ok((x, y))
            }
            PairSource::AdjacentInN { params, eps } => {
                for _ in 0..1000 {
                    let x = random_in_n(params, *eps, &mut rng)?;
                    let mut y = x.clone();
                    y.bump(rng.random_range(0..x.n()), 1);
                    if crate::model::in_n_eps(&y.to_profile(), params, *eps) {
                        return Ok((x, y));
                    }
                }
                Err(Error::Refused("no adjacent pair inside N^eps found".into()))
            }
            PairSource::Fixed { x, y } | PairSource::ThroughEmpty { x, y } => Ok((x.clone(), y.clone())),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoalescenceStats {
    pub n: usize,
    pub d: u64,
    pub lambda: f64,
    pub horizon: u64,
    /// Per replica; None = censored at the horizon.
    pub times: Vec<Option<u64>>,
    pub coalesced: usize,
    /// (quantile level, value); None when the quantile lies beyond the
    /// horizon.
    pub quantiles: Vec<(f64, Option<u64>)>,
}

impl CoalescenceStats {
    pub fn median(&self) -> Option<u64> {
        quantile(&self.times, 0.5)
    }

    /// Fraction of replicas not yet coalesced at time t, an upper bound for
    /// the total variation distance between the two coupled laws.
    pub fn not_coalesced_by(&self, t: u64) -> f64 {
        let m = self.times.iter().filter(|x| x.is_none_or(|v| v > t)).count();
        m as f64 / self.times.len().max(1) as f64
    }
}

/// Lower empirical quantile with censored values sorted last.
fn quantile(times: &[Option<u64>], p: f64) -> Option<u64> {
    if times.is_empty() {
        return None;
    }
    let mut v: Vec<u64> = times.iter().map(|t| t.unwrap_or(u64::MAX)).collect();
    v.sort_unstable();
    let idx = ((p * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
    (v[idx] != u64::MAX).then_some(v[idx])
}

/// Coalescence times of `replicas` independent pairs, in parallel.
pub fn coalescence_stats(
    d: u64,
    lambda: f64,
    source: &PairSource,
    replicas: usize,
    horizon: u64,
    seed: u64,
) -> Result<CoalescenceStats> {
    let n = source.n()?;
    let times: Vec<Option<u64>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| -> Result<Option<u64>> {
            let s = child_seed(seed, r);
            let (x, y) = source.sample(d, lambda, s)?;
            let tape = RandomTape::new(child_seed(s, 2), n, d, lambda)?;
            if let PairSource::ThroughEmpty { .. } = source {
                let zero = QueueVector::zeros(n);
                let a = coalescence_time(&zero, &x, &tape, horizon)?;
                let b = coalescence_time(&zero, &y, &tape, horizon)?;
                Ok(a.zip(b).map(|(a, b)| a.max(b)))
            } else {
                coalescence_time(&x, &y, &tape, horizon)
            }
        })
        .collect::<Result<_>>()?;
    let quantiles = [0.1, 0.25, 0.5, 0.75, 0.9].iter().map(|&p| (p, quantile(&times, p))).collect();
    Ok(CoalescenceStats {
        n,
        d,
        lambda,
        horizon,
        coalesced: times.iter().filter(|t| t.is_some()).count(),
        times,
        quantiles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tape(seed: u64, n: usize, d: u64, lambda: f64) -> RandomTape {
        RandomTape::new(seed, n, d, lambda).unwrap()
    }

    #[test]
    fn identical_starts() {
        let x = QueueVector::new(vec![1, 2, 0, 4]).unwrap();
        let run = run_coupled(&[x.clone(), x], &tape(1, 4, 2, 0.8), 100, &Default::default()).unwrap();
        let p = &run.pairs[0];
        assert_eq!(p.coalesced_at, Some(0));
        assert!(p.distance.iter().all(|&(_, a, b)| a == 0 && b == 0));
    }

    #[test]
    fn adjacent_pairs_stay_neighbours() {
        for seed in 0..20 {
            let x = QueueVector::new(vec![1, 0, 3, 2, 2, 0, 1, 1]).unwrap();
            let mut y = x.clone();
            y.bump(2, 1);
            let tp = tape(seed, 8, 3, 0.7);
            let run = run_coupled(&[x.clone(), y.clone()], &tp, 5_000, &Default::default()).unwrap();
            assert_eq!(run.violations(), 0);
            let p = &run.pairs[0];
            assert!(p.distance.iter().all(|&(_, l1, _)| l1 <= 1));
            assert_eq!(p.distance.len(), p.w.len());
            // agrees with the fast path
            assert_eq!(coalescence_time(&x, &y, &tp, 5_000).unwrap(), p.coalesced_at);
        }
    }

    #[test]
    fn general_pairs_contract() {
        let x = QueueVector::new(vec![5, 0, 0, 1, 7, 2]).unwrap();
        let y = QueueVector::new(vec![0, 4, 1, 1, 0, 3]).unwrap();
        let z = QueueVector::new(vec![6, 4, 1, 2, 7, 3]).unwrap();
        let opts = CoupledOptions { pairs: Some(vec![(0, 1), (0, 2), (1, 2)]), ..Default::default() };
        for seed in 0..10 {
            let run = run_coupled(&[x.clone(), y.clone(), z.clone()], &tape(seed, 6, 2, 0.9), 3_000, &opts).unwrap();
            assert_eq!(run.violations(), 0);
            assert!(run.pairs[1].ordered_at_start && run.pairs[2].ordered_at_start);
            assert!(!run.pairs[0].ordered_at_start);
        }
    }

    #[test]
    fn mixed_n_is_a_config_error() {
        let x = QueueVector::zeros(3);
        let y = QueueVector::zeros(4);
        assert!(matches!(
            run_coupled(&[x, y], &tape(0, 3, 2, 0.5), 10, &Default::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn through_empty_matches_edges() {
        let x = QueueVector::new(vec![2, 0, 1, 1]).unwrap();
        let y = QueueVector::new(vec![0, 2, 0, 1]).unwrap();
        let path = super::super::path_through_empty(&x, &y).unwrap();
        for seed in 0..10 {
            let tp = tape(seed, 4, 2, 0.6);
            let edges = edge_coalescence_times(&path, &tp, 100_000).unwrap();
            let all = edges.iter().map(|t| t.unwrap()).max().unwrap();
            let zero = QueueVector::zeros(4);
            let a = coalescence_time(&zero, &x, &tp, 100_000).unwrap().unwrap();
            let b = coalescence_time(&zero, &y, &tp, 100_000).unwrap().unwrap();
            assert_eq!(all, a.max(b));
        }
    }

    #[test]
    fn quantiles_with_censoring() {
        let t = vec![Some(3), None, Some(1), Some(2)];
        assert_eq!(quantile(&t, 0.5), Some(2));
        assert_eq!(quantile(&t, 0.9), None);
        assert_eq!(quantile(&t, 0.1), Some(1));
    }
}
