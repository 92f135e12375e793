//! Monte Carlo experiments for the walk tail bounds, each paired with its
//! exact oracle when the walk is on a lattice.

use super::oracle::{crossing_dp, drifts_down_dp, exact_tail, hitting_dp, return_time_dp};
use super::{CrossingSpec, Direction, DriftsDownSpec, HittingSpec, JumpLaw, ReturnWalkSpec};
use crate::error::{Error, Result};
use crate::rng::{child_seed, seeded, SimRng};
use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Slack on the drift-ceiling check for the jump law.
const MEAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Tail {
    Binomial { n: u64, p: f64 },
    Poisson { mu: f64 },
}

impl Tail {
    pub fn mean(&self) -> f64 {
        match *self {
            Tail::Binomial { n, p } => n as f64 * p,
            Tail::Poisson { mu } => mu,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkVerdict {
    pub experiment: String,
    pub bound: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub trials: u64,
    pub oracle: Option<f64>,
    /// empirical ≤ bound + 3σ
    pub bound_ok: bool,
    /// |empirical − oracle| ≤ 4σ
    pub oracle_ok: bool,
    /// oracle ≤ bound, decided without noise
    pub oracle_within_bound: bool,
}

impl WalkVerdict {
    fn new(experiment: String, bound: f64, hits: u64, trials: u64, oracle: Option<f64>) -> Self {
        let p = hits as f64 / trials as f64;
        let stderr = (p * (1.0 - p) / trials as f64).sqrt();
        let bound_ok = p <= bound + 3.0 * stderr;
        let (oracle_ok, oracle_within_bound) = match oracle {
            Some(o) => {
                let s = stderr.max((o * (1.0 - o) / trials as f64).sqrt());
                ((p - o).abs() <= 4.0 * s + 1e-12, o <= bound * (1.0 + 1e-12))
            }
            None => (true, true),
        };
        WalkVerdict {
            experiment,
            bound,
            empirical: p,
            stderr,
            trials,
            oracle,
            bound_ok,
            oracle_ok,
            oracle_within_bound,
        }
    }

    pub fn pass(&self) -> bool {
        self.bound_ok && self.oracle_ok && self.oracle_within_bound
    }
}

pub fn write_verdicts_csv<W: Write>(out: W, verdicts: &[WalkVerdict]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["experiment-id", "bound", "empirical", "stderr", "trials", "exact-oracle", "verdict"])?;
    for v in verdicts {
        w.write_record([
            v.experiment.clone(),
            format!("{:e}", v.bound),
            format!("{:e}", v.empirical),
            format!("{:e}", v.stderr),
            v.trials.to_string(),
            v.oracle.map(|o| format!("{o:e}")).unwrap_or_default(),
            if v.pass() { "pass" } else { "fail" }.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn count_hits<F>(trials: u64, seed: u64, event: F) -> u64
where
    F: Fn(&mut SimRng) -> bool + Sync,
{
    (0..trials)
        .into_par_iter()
        .filter(|&t| event(&mut seeded(child_seed(seed, t))))
        .count() as u64
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    Ok(())
}

fn check_ceiling(law: &JumpLaw, dir: Direction, v: f64) -> Result<()> {
    law.validate()?;
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::Config(format!("drift ceiling v = {v} must lie in (0, 1]")));
    }
    let mean = dir.sign() * law.mean();
    if mean > -v + MEAN_TOL {
        return Err(Error::Precondition(format!(
            "jump mean {mean} (drift-down frame) exceeds the ceiling −{v}"
        )));
    }
    Ok(())
}

/// The walk started at r₀ stays above r₁ (below, for `Up`) for m steps, on
/// the good event. Bound exp(−v²m/8).
pub fn hitting_bound_experiment(
    id: &str,
    spec: &HittingSpec,
    trials: u64,
    seed: u64,
) -> Result<WalkVerdict> {
    check_trials(trials)?;
    check_ceiling(&spec.law, spec.direction, spec.v)?;
    let sg = spec.direction.sign();
    let gap = sg * (spec.r0 - spec.r1);
    if gap < 0.0 || spec.v * (spec.m as f64) < 2.0 * gap {
        return Err(Error::Precondition(format!(
            "need v·m ≥ 2(r₀ − r₁) ≥ 0, got v·m = {}, gap = {gap}",
            spec.v * spec.m as f64
        )));
    }
    let bound = (-spec.v * spec.v * spec.m as f64 / 8.0).exp();
    let hits = count_hits(trials, seed, |rng| {
        let mut o = 0.0;
        if o <= -gap {
            return false;
        }
        for i in 0..spec.m {
            if !spec.schedule.holds(i, o) {
                return false;
            }
            o += sg * spec.law.sample(rng);
            if o <= -gap {
                return false;
            }
        }
        true
    });
    Ok(WalkVerdict::new(id.into(), bound, hits, trials, hitting_dp(spec)))
}

/// The walk leaves [h₀−b, h₀+a) through the top, on the good event. Bound
/// exp(−2va).
pub fn crossing_bound_experiment(
    id: &str,
    spec: &CrossingSpec,
    trials: u64,
    seed: u64,
) -> Result<WalkVerdict> {
    check_trials(trials)?;
    check_ceiling(&spec.law, spec.direction, spec.v)?;
    if spec.a < 0.0 || spec.b < 0.0 {
        return Err(Error::Config("band widths must be non-negative".into()));
    }
    let sg = spec.direction.sign();
    let bound = (-2.0 * spec.v * spec.a).exp();
    let hits = count_hits(trials, seed, |rng| {
        let mut o = 0.0;
        if o >= spec.a {
            return true;
        }
        for i in 0..spec.max_steps {
            if !spec.schedule.holds(i, o) {
                return false;
            }
            o += sg * spec.law.sample(rng);
            if o >= spec.a {
                return true;
            }
            if o < -spec.b {
                return false;
            }
        }
        false
    });
    Ok(WalkVerdict::new(id.into(), bound, hits, trials, crossing_dp(spec)))
}

/// Both parts of the drifts-down lemma with T* = 0 and S the whole line:
/// P(T₁ > m) ≤ exp(−v²m/8) and P(T₂ ≤ s) ≤ s·exp(−ρv).
pub fn drifts_down_experiment(
    id: &str,
    spec: &DriftsDownSpec,
    trials: u64,
    seed: u64,
) -> Result<[WalkVerdict; 2]> {
    check_trials(trials)?;
    check_ceiling(&spec.above, spec.direction, spec.v)?;
    spec.below.validate()?;
    let sg = spec.direction.sign();
    let (c, h) = (sg * spec.c as f64, sg * spec.h as f64);
    if spec.rho < 2 {
        return Err(Error::Precondition(format!("ρ = {} must be at least 2", spec.rho)));
    }
    if spec.v * (spec.m as f64) < 2.0 * (c - h) {
        return Err(Error::Precondition("need v·m ≥ 2(c − h)".into()));
    }
    let jump = |g: f64, rng: &mut SimRng| {
        let law = if g > h { &spec.above } else { &spec.below };
        sg * law.sample(rng)
    };

    let hits1 = count_hits(trials, seed, |rng| {
        let mut g = c;
        for t in 0..=spec.m {
            if g <= h {
                return false;
            }
            if t < spec.m {
                g += jump(g, rng);
            }
        }
        true
    });
    let rho = spec.rho as f64;
    let hits2 = count_hits(trials, child_seed(seed, u64::MAX), |rng| {
        let mut g = c;
        let mut after = g <= h;
        for _ in 0..spec.s {
            g += jump(g, rng);
            if after && g >= h + rho {
                return true;
            }
            after |= g <= h;
        }
        false
    });
    let oracle = drifts_down_dp(spec);
    let b1 = (-spec.v * spec.v * spec.m as f64 / 8.0).exp();
    let b2 = spec.s as f64 * (-rho * spec.v).exp();
    Ok([
        WalkVerdict::new(format!("{id}-i"), b1, hits1, trials, oracle.map(|o| o.0)),
        WalkVerdict::new(format!("{id}-ii"), b2, hits2, trials, oracle.map(|o| o.1)),
    ])
}

/// The walk from S₀ avoids 0 at steps 1..m. Bound
/// 1{S₀ > ⌊m/16⌋} + 3·exp(−δ^{k₀−1}m/(200k₀)).
pub fn return_time_experiment(
    id: &str,
    spec: &ReturnWalkSpec,
    trials: u64,
    seed: u64,
) -> Result<WalkVerdict> {
    check_trials(trials)?;
    if !(spec.delta > 0.0 && spec.delta <= 0.75) || spec.k0 < 1 {
        return Err(Error::Config(format!(
            "need δ ∈ (0, 3/4] and k₀ ≥ 1, got δ = {}, k₀ = {}",
            spec.delta, spec.k0
        )));
    }
    let start_term = if spec.s0 > spec.m / 16 { 1.0 } else { 0.0 };
    let k0 = spec.k0 as f64;
    let bound =
        start_term + 3.0 * (-spec.delta.powf(k0 - 1.0) * spec.m as f64 / (200.0 * k0)).exp();
    let hits = count_hits(trials, seed, |rng| {
        let mut s = spec.s0;
        for _ in 0..spec.m {
            let (pd, pu) = spec.probs(s);
            let u = rng.random::<f64>();
            if u < pd {
                s -= 1;
            } else if u < pd + pu {
                s += 1;
            }
            if s == 0 {
                return false;
            }
        }
        true
    });
    Ok(WalkVerdict::new(id.into(), bound, hits, trials, Some(return_time_dp(spec))))
}

/// Lower tail P(Z ≤ (1−ε)μ) against exp(−ε²μ/2).
pub fn chernoff_check(id: &str, tail: Tail, eps: f64, trials: u64, seed: u64) -> Result<WalkVerdict> {
    check_trials(trials)?;
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Config(format!("ε = {eps} must lie in [0, 1)")));
    }
    let mu = tail.mean();
    let cut = ((1.0 - eps) * mu + 1e-9 * mu.max(1.0)).floor();
    let hits = match tail {
        Tail::Binomial { n, p } => {
            let dist = Binomial::new(n, p).map_err(|e| Error::Config(e.to_string()))?;
            count_hits(trials, seed, |rng| (dist.sample(rng) as f64) <= cut)
        }
        Tail::Poisson { mu } => {
            let dist = Poisson::new(mu).map_err(|e| Error::Config(e.to_string()))?;
            count_hits(trials, seed, |rng| dist.sample(rng) <= cut)
        }
    };
    let bound = (-eps * eps * mu / 2.0).exp();
    Ok(WalkVerdict::new(id.into(), bound, hits, trials, Some(exact_tail(tail, eps))))
}
