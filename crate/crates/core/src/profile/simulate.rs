use super::{Profile, ProfileChain, StepOutcome};
use crate::error::{Error, Result};
use crate::model::coefficients::CoefficientTable;
use crate::model::functionals::{p_functional, q_functional};
use crate::model::occupancy::Occupancy;
use crate::model::sets::{SetId, SetLedger};
use crate::params::Params;
use crate::rng::seeded;
use crate::vector::{apply, transition, QueueVector, RandomTape, StepEffect};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Version tag of the observation CSV layout.
pub const OBSERVATION_SCHEMA: &str = "observations/v1";

/// What to record and how often.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObserverConfig {
    /// Record every `interval` steps; 0 records only the first and last state.
    pub interval: u64,
    /// Record u_1..u_levels.
    pub levels: usize,
    pub q_indices: Vec<u32>,
    pub p_functional: bool,
    pub sets: Vec<SetId>,
    /// Tolerance for set predicates; defaults to the model ε.
    pub set_epsilon: Option<f64>,
    /// ℓ and g of the ledger sets; default k.
    pub ell: Option<f64>,
    pub g: Option<f64>,
    pub cap: Option<usize>,
}

impl Default for ObserverConfig {
    fn default() -> Self {
        ObserverConfig {
            interval: 1,
            levels: 5,
            q_indices: Vec::new(),
            p_functional: false,
            sets: Vec::new(),
            set_epsilon: None,
            ell: None,
            g: None,
            cap: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub step: u64,
    pub u: Vec<f64>,
    pub q: Vec<f64>,
    pub p: Option<f64>,
    pub max_len: usize,
    pub sets: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationLog {
    pub levels: usize,
    pub q_indices: Vec<u32>,
    pub p_functional: bool,
    pub sets: Vec<SetId>,
    pub rows: Vec<Observation>,
    pub final_profile: Profile,
    pub arrivals: u64,
    pub departures: u64,
    pub idle: u64,
    pub blocked: u64,
}

impl ObservationLog {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["step".to_string()];
        h.extend((1..=self.levels).map(|j| format!("u_{j}")));
        h.extend(self.q_indices.iter().map(|j| format!("Q_{j}")));
        if self.p_functional {
            h.push("P".into());
        }
        h.push("max_len".into());
        h.extend(self.sets.iter().map(|s| format!("in_{s}")));
        h
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Config(format!("csv write failed: {e}"));
        out.write_record(self.header()).map_err(io)?;
        for r in &self.rows {
            let mut rec = vec![r.step.to_string()];
            rec.extend(r.u.iter().map(|x| x.to_string()));
            rec.extend(r.q.iter().map(|x| x.to_string()));
            if let Some(p) = r.p {
                rec.push(p.to_string());
            }
            rec.push(r.max_len.to_string());
            rec.extend(r.sets.iter().map(|&b| (b as u8).to_string()));
            out.write_record(rec).map_err(io)?;
        }
        out.flush().map_err(|e| Error::Config(e.to_string()))
    }

    /// Column means over the recorded rows.
    pub fn summary(&self) -> serde_json::Value {
        let m = self.rows.len().max(1) as f64;
        let mean = |f: &dyn Fn(&Observation) -> Vec<f64>| -> Vec<f64> {
            let mut acc = Vec::new();
            for r in &self.rows {
                let v = f(r);
                acc.resize(v.len(), 0.0);
                for (a, x) in acc.iter_mut().zip(v) {
                    *a += x / m;
                }
            }
            acc
        };
        serde_json::json!({
            "schema": OBSERVATION_SCHEMA,
            "observations": self.rows.len(),
            "mean_u": mean(&|r| r.u.clone()),
            "mean_q": mean(&|r| r.q.clone()),
            "max_len_seen": self.rows.iter().map(|r| r.max_len).max().unwrap_or(0),
            "arrivals": self.arrivals,
            "departures": self.departures,
            "idle_departures": self.idle,
            "blocked_arrivals": self.blocked,
        })
    }
}

struct Recorder<'a> {
    cfg: &'a ObserverConfig,
    table: Option<CoefficientTable>,
    ledger: Option<SetLedger>,
    eps: f64,
}

impl<'a> Recorder<'a> {
    fn new(params: &Params, cfg: &'a ObserverConfig) -> Result<Self> {
        if let Some(&j) = cfg.q_indices.iter().find(|&&j| j == 0 || j > params.k) {
            return Err(Error::Config(format!("observer requests Q_{j} but k = {}", params.k)));
        }
        let needs_table = !cfg.q_indices.is_empty() || cfg.p_functional || !cfg.sets.is_empty();
        let table = if needs_table { Some(CoefficientTable::new(params.lambda_d(), params.k)?) } else { None };
        let k = params.k as f64;
        let ledger = if cfg.sets.is_empty() {
            None
        } else {
            Some(SetLedger::new(params, cfg.ell.unwrap_or(k), cfg.g.unwrap_or(k))?)
        };
        Ok(Recorder { cfg, table, ledger, eps: cfg.set_epsilon.unwrap_or(params.epsilon) })
    }

    fn observe(&self, step: u64, x: &Profile) -> Observation {
        let t = self.table.as_ref();
        Observation {
            step,
            u: (1..=self.cfg.levels).map(|j| x.tail(j)).collect(),
            q: self.cfg.q_indices.iter().map(|&j| q_functional(x, j, t.unwrap()).unwrap()).collect(),
            p: self.cfg.p_functional.then(|| p_functional(x, t.unwrap())),
            max_len: x.max_len(),
            sets: match &self.ledger {
                Some(l) => {
                    let snap = l.snapshot(x);
                    self.cfg.sets.iter().map(|&id| l.contains_snapshot(&snap, id, self.eps)).collect()
                }
                None => Vec::new(),
            },
        }
    }
}

/// Runs the profile chain for `steps` steps and records observations.
/// Deterministic in (params, initial, steps, seed, observers).
pub fn simulate(
    params: &Params,
    initial: Profile,
    steps: u64,
    seed: u64,
    observers: &ObserverConfig,
) -> Result<ObservationLog> {
    let rec = Recorder::new(params, observers)?;
    let mut chain = ProfileChain::new(initial, params.lambda, params.d, observers.cap)?;
    let mut rng = seeded(seed);
    let mut rows = vec![rec.observe(0, chain.profile())];
    let (mut arrivals, mut departures, mut idle, mut blocked) = (0, 0, 0, 0);
    for t in 1..=steps {
        match chain.step(&mut rng) {
            StepOutcome::Arrival { .. } => arrivals += 1,
            StepOutcome::Departure { .. } => departures += 1,
            StepOutcome::IdleDeparture => idle += 1,
            StepOutcome::BlockedArrival { .. } => blocked += 1,
        }
        let due = if observers.interval == 0 { t == steps } else { t % observers.interval == 0 || t == steps };
        if due {
            rows.push(rec.observe(t, chain.profile()));
        }
    }
    Ok(ObservationLog {
        levels: observers.levels,
        q_indices: observers.q_indices.clone(),
        p_functional: observers.p_functional,
        sets: observers.sets.clone(),
        rows,
        final_profile: chain.into_profile(),
        arrivals,
        departures,
        idle,
        blocked,
    })
}

/// [`simulate`] driven by the queue-vector engine on a counter-based tape.
/// Same observations and log layout; `seed` keys the tape.
pub fn simulate_vector(
    params: &Params,
    initial: &QueueVector,
    steps: u64,
    seed: u64,
    observers: &ObserverConfig,
) -> Result<ObservationLog> {
    let rec = Recorder::new(params, observers)?;
    let cap = observers.cap.map(|c| c.min(u32::MAX as usize) as u32);
    if let Some(c) = cap {
        if initial.linf() > c {
            return Err(Error::Domain(format!("initial state exceeds the cap {c}")));
        }
    }
    let tape = RandomTape::new(seed, initial.n(), params.d, params.lambda)?;
    let mut x = initial.clone();
    let mut prof = x.to_profile();
    let mut rows = vec![rec.observe(0, &prof)];
    let (mut arrivals, mut departures, mut idle, mut blocked) = (0, 0, 0, 0);
    for t in 1..=steps {
        let e = transition(&x, &tape.event(t - 1), cap);
        match e {
            StepEffect::Arrival(q) => {
                arrivals += 1;
                prof.raise(x[q] as usize);
            }
            StepEffect::Departure(q) => {
                departures += 1;
                prof.lower(x[q] as usize);
            }
            StepEffect::Idle => idle += 1,
            StepEffect::Blocked(_) => blocked += 1,
        }
        apply(&mut x, e);
        let due = if observers.interval == 0 { t == steps } else { t % observers.interval == 0 || t == steps };
        if due {
            rows.push(rec.observe(t, &prof));
        }
    }
    Ok(ObservationLog {
        levels: observers.levels,
        q_indices: observers.q_indices.clone(),
        p_functional: observers.p_functional,
        sets: observers.sets.clone(),
        rows,
        final_profile: prof,
        arrivals,
        departures,
        idle,
        blocked,
    })
}

/// Time-averaged tail fractions over a long run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeAverages {
    pub burn_in: u64,
    pub steps: u64,
    /// Mean of u_j, j = 1..=levels.
    pub tail: Vec<f64>,
    /// Mean of 1 − u_j, computed from integer accumulators.
    pub deficit: Vec<f64>,
    pub max_len_seen: usize,
    pub final_profile: Profile,
}

/// Averages u_1..u_levels over the `steps` states that follow a burn-in.
/// Accumulation is lazy: a level's count is integrated only when it changes.
pub fn time_average(
    chain: &mut ProfileChain,
    burn_in: u64,
    steps: u64,
    levels: usize,
    seed: u64,
) -> TimeAverages {
    let mut rng = seeded(seed);
    for _ in 0..burn_in {
        chain.step(&mut rng);
    }
    let mut acc = vec![0u128; levels + 1];
    let mut last = vec![0u64; levels + 1];
    let mut max_len_seen = chain.profile().max_len();
    for t in 0..steps {
        let (j, before) = match chain.step(&mut rng) {
            StepOutcome::Arrival { level } => {
                let j = level + 1;
                (j, chain.profile().tail_count(j) - 1)
            }
            StepOutcome::Departure { level } => (level, chain.profile().tail_count(level) + 1),
            _ => continue,
        };
        max_len_seen = max_len_seen.max(chain.profile().max_len());
        if j <= levels {
            acc[j] += before as u128 * (t + 1 - last[j]) as u128;
            last[j] = t + 1;
        }
    }
    let n = chain.profile().n_queues() as u128;
    let total = n * steps.max(1) as u128;
    let mut tail = Vec::with_capacity(levels);
    let mut deficit = Vec::with_capacity(levels);
    for j in 1..=levels {
        acc[j] += chain.profile().tail_count(j) as u128 * (steps - last[j]) as u128;
        tail.push(acc[j] as f64 / total as f64);
        deficit.push((total - acc[j]) as f64 / total as f64);
    }
    TimeAverages {
        burn_in,
        steps,
        tail,
        deficit,
        max_len_seen,
        final_profile: chain.profile().clone(),
    }
}
