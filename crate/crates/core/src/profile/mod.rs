//! The chain on queue-length profiles (histograms).
//!
//! By exchangeability of equal-length queues the profile process is an exact
//! image of the queue-vector process, and it steps in O(max length).

mod instrument;
mod simulate;

pub use instrument::{hitting_exit_instrument, StageTimes, Timing};
pub use simulate::{
    simulate, simulate_vector, time_average, ObservationLog, ObserverConfig, Observation, TimeAverages,
    OBSERVATION_SCHEMA,
};

use crate::error::{Error, Result};
use crate::model::occupancy::Occupancy;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Histogram state. Internally stores `ge[i]`, the number of queues of length
/// at least i (so `ge[0] = n`), which is the one array a step changes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Profile {
    ge: Vec<u64>,
}

impl Profile {
    pub fn empty(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("n must be at least 1".into()));
        }
        Ok(Profile { ge: vec![n, 0] })
    }

    /// From `counts[i]` = number of queues of length exactly i.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let mut ge = vec![0u64; counts.len() + 1];
        for i in (0..counts.len()).rev() {
            ge[i] = ge[i + 1] + counts[i];
        }
        if ge.is_empty() || ge[0] == 0 {
            return Err(Error::Domain("profile must contain at least one queue".into()));
        }
        let mut p = Profile { ge };
        p.trim();
        Ok(p)
    }

    /// From `tail[j-1]` = number of queues with length ≥ j, j = 1..=L.
    pub fn from_tail_counts(n: u64, tail: &[u64]) -> Result<Self> {
        let mut ge = Vec::with_capacity(tail.len() + 2);
        ge.push(n);
        ge.extend_from_slice(tail);
        ge.push(0);
        if n == 0 || ge.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Domain("tail counts must be non-increasing and at most n".into()));
        }
        let mut p = Profile { ge };
        p.trim();
        Ok(p)
    }

    pub fn from_lengths(lengths: &[u32]) -> Result<Self> {
        let top = lengths.iter().copied().max().unwrap_or(0) as usize;
        let mut counts = vec![0u64; top + 1];
        for &l in lengths {
            counts[l as usize] += 1;
        }
        Profile::from_counts(&counts)
    }

    fn trim(&mut self) {
        while self.ge.len() > 2 && self.ge[self.ge.len() - 2] == 0 {
            self.ge.pop();
        }
        if *self.ge.last().unwrap() != 0 {
            self.ge.push(0);
        }
    }

    pub fn n_queues(&self) -> u64 {
        self.ge[0]
    }

    /// Number of queues with length ≥ i.
    pub fn tail_count(&self, i: usize) -> u64 {
        self.ge.get(i).copied().unwrap_or(0)
    }

    /// Number of queues with length exactly i.
    pub fn count(&self, i: usize) -> u64 {
        self.tail_count(i) - self.tail_count(i + 1)
    }

    pub fn counts(&self) -> Vec<u64> {
        (0..self.ge.len() - 1).map(|i| self.count(i)).collect()
    }

    /// ‖x‖₁.
    pub fn total(&self) -> u64 {
        self.ge[1..].iter().sum()
    }

    /// Moves one queue from length `level` to `level + 1`.
    pub(crate) fn raise(&mut self, level: usize) {
        if level + 2 >= self.ge.len() {
            self.ge.resize(level + 3, 0);
        }
        self.ge[level + 1] += 1;
    }

    /// Moves one queue from length `level ≥ 1` to `level − 1`.
    pub(crate) fn lower(&mut self, level: usize) {
        self.ge[level] -= 1;
        if self.ge[level] == 0 && level + 2 == self.ge.len() {
            self.ge.pop();
        }
    }
}

impl Occupancy for Profile {
    fn n(&self) -> f64 {
        self.ge[0] as f64
    }
    fn tail(&self, i: usize) -> f64 {
        self.tail_count(i) as f64 / self.ge[0] as f64
    }
    fn deficit(&self, i: usize) -> f64 {
        (self.ge[0] - self.tail_count(i)) as f64 / self.ge[0] as f64
    }
    fn max_len(&self) -> usize {
        self.ge.len() - 2
    }
    fn level(&self, i: usize) -> f64 {
        self.count(i) as f64 / self.ge[0] as f64
    }
    fn mass(&self) -> f64 {
        self.total() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepOutcome {
    /// A customer joined a queue of length `level`.
    Arrival { level: usize },
    /// A queue of length `level ≥ 1` served one customer.
    Departure { level: usize },
    /// The potential departure hit an empty queue.
    IdleDeparture,
    /// Capped chains only: the arrival would have exceeded the cap.
    BlockedArrival { level: usize },
}

/// x^d with exact results at 0 and 1.
#[inline]
pub(crate) fn pow_d(count: u64, n: u64, d: f64) -> f64 {
    if count == 0 {
        0.0
    } else if count == n {
        1.0
    } else if d == 1.0 {
        count as f64 / n as f64
    } else {
        (d * (count as f64 / n as f64).ln()).exp()
    }
}

/// A profile together with the transition law and a cache of u_j^d.
#[derive(Debug, Clone)]
pub struct ProfileChain {
    profile: Profile,
    d: f64,
    p_arrival: f64,
    cap: Option<usize>,
    pow: Vec<f64>,
}

impl ProfileChain {
    pub fn new(profile: Profile, lambda: f64, d: u64, cap: Option<usize>) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda) || d == 0 {
            return Err(Error::Domain(format!("need 0 ≤ λ < 1 and d ≥ 1 (λ = {lambda}, d = {d})")));
        }
        if let Some(c) = cap {
            if profile.max_len() > c {
                return Err(Error::Precondition(format!("initial profile exceeds cap {c}")));
            }
        }
        let mut chain = ProfileChain {
            profile,
            d: d as f64,
            p_arrival: lambda / (1.0 + lambda),
            cap,
            pow: Vec::new(),
        };
        chain.refresh();
        Ok(chain)
    }

    fn refresh(&mut self) {
        let n = self.profile.ge[0];
        self.pow = self.profile.ge.iter().map(|&c| pow_d(c, n, self.d)).collect();
    }

    #[inline]
    fn set_pow(&mut self, i: usize) {
        let n = self.profile.ge[0];
        if self.pow.len() < self.profile.ge.len() {
            self.pow.resize(self.profile.ge.len(), 0.0);
        }
        self.pow[i] = pow_d(self.profile.ge[i], n, self.d);
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn into_profile(self) -> Profile {
        self.profile
    }

    /// Reverts the effect of the step that returned `outcome`.
    pub fn undo(&mut self, outcome: StepOutcome) {
        match outcome {
            StepOutcome::Arrival { level } => self.profile.lower(level + 1),
            StepOutcome::Departure { level } => self.profile.raise(level - 1),
            _ => return,
        }
        self.refresh();
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> StepOutcome {
        if rng.random::<f64>() < self.p_arrival {
            // J = max{j : U < u_j^d}; u_0^d = 1
            let u = rng.random::<f64>();
            let mut j = 0;
            while j + 1 < self.pow.len() && u < self.pow[j + 1] {
                j += 1;
            }
            if matches!(self.cap, Some(c) if j >= c) {
                return StepOutcome::BlockedArrival { level: j };
            }
            self.profile.raise(j);
            self.set_pow(j + 1);
            StepOutcome::Arrival { level: j }
        } else {
            let n = self.profile.ge[0];
            let r = rng.random_range(0..n);
            let ge = &self.profile.ge;
            let mut i = 0;
            while i + 1 < ge.len() && r < ge[i + 1] {
                i += 1;
            }
            if i == 0 {
                return StepOutcome::IdleDeparture;
            }
            self.profile.lower(i);
            if i < self.profile.ge.len() {
                self.set_pow(i);
            }
            self.pow.truncate(self.profile.ge.len());
            StepOutcome::Departure { level: i }
        }
    }
}

/// One transition of `profile`, recomputing u_j^d on the fly.
pub fn step<R: Rng + ?Sized>(profile: &mut Profile, lambda: f64, d: u64, rng: &mut R) -> Result<StepOutcome> {
    let mut chain = ProfileChain::new(std::mem::replace(profile, Profile { ge: vec![1, 0] }), lambda, d, None)?;
    let out = chain.step(rng);
    *profile = chain.into_profile();
    Ok(out)
}
