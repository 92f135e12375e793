//! Synthetic random walks with bounded jumps and a drift ceiling, used to
//! check the tail bounds for hitting, crossing and return times against
//! simulation and exact dynamic-programming oracles.

mod experiments;
mod oracle;

pub use experiments::{
    chernoff_check, crossing_bound_experiment, drifts_down_experiment, hitting_bound_experiment,
    return_time_experiment, write_verdicts_csv, Tail, WalkVerdict,
};
pub use oracle::{
    crossing_dp, crossing_gamblers_ruin, drifts_down_dp, exact_tail, hitting_dp, return_time_dp,
};

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Law of one jump Z, |Z| ≤ 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum JumpLaw {
    Deterministic(f64),
    /// ±1 with P(−1) = p_down.
    PlusMinus { p_down: f64 },
    /// −1, 0, +1 with probabilities p_down, 1 − p_down − p_up, p_up.
    Lazy { p_down: f64, p_up: f64 },
    /// Uniform on [lo, hi] ⊆ [−1, 1].
    Uniform { lo: f64, hi: f64 },
}

impl JumpLaw {
    /// ±1 walk with mean exactly −v.
    pub fn with_drift(v: f64) -> Self {
        JumpLaw::PlusMinus { p_down: (1.0 + v) / 2.0 }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            JumpLaw::Deterministic(z) => z,
            JumpLaw::PlusMinus { p_down } => 1.0 - 2.0 * p_down,
            JumpLaw::Lazy { p_down, p_up } => p_up - p_down,
            JumpLaw::Uniform { lo, hi } => (lo + hi) / 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            JumpLaw::Deterministic(z) => z.abs() <= 1.0,
            JumpLaw::PlusMinus { p_down } => (0.0..=1.0).contains(&p_down),
            JumpLaw::Lazy { p_down, p_up } => p_down >= 0.0 && p_up >= 0.0 && p_down + p_up <= 1.0,
            JumpLaw::Uniform { lo, hi } => -1.0 <= lo && lo <= hi && hi <= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid jump law {self:?}")))
        }
    }

    /// (P(−1), P(0), P(+1)) for laws on {−1, 0, 1}.
    pub fn lattice(&self) -> Option<[f64; 3]> {
        match *self {
            JumpLaw::Deterministic(-1.0) => Some([1.0, 0.0, 0.0]),
            JumpLaw::Deterministic(0.0) => Some([0.0, 1.0, 0.0]),
            JumpLaw::Deterministic(1.0) => Some([0.0, 0.0, 1.0]),
            JumpLaw::PlusMinus { p_down } => Some([p_down, 0.0, 1.0 - p_down]),
            JumpLaw::Lazy { p_down, p_up } => Some([p_down, 1.0 - p_down - p_up, p_up]),
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            JumpLaw::Deterministic(z) => z,
            JumpLaw::PlusMinus { p_down } => {
                if rng.random::<f64>() < p_down {
                    -1.0
                } else {
                    1.0
                }
            }
            JumpLaw::Lazy { p_down, p_up } => {
                let u = rng.random::<f64>();
                if u < p_down {
                    -1.0
                } else if u < p_down + p_up {
                    1.0
                } else {
                    0.0
                }
            }
            JumpLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }

    /// The law of −Z.
    pub fn mirrored(&self) -> Self {
        match *self {
            JumpLaw::Deterministic(z) => JumpLaw::Deterministic(-z),
            JumpLaw::PlusMinus { p_down } => JumpLaw::PlusMinus { p_down: 1.0 - p_down },
            JumpLaw::Lazy { p_down, p_up } => JumpLaw::Lazy { p_down: p_up, p_up: p_down },
            JumpLaw::Uniform { lo, hi } => JumpLaw::Uniform { lo: -hi, hi: -lo },
        }
    }
}

/// The good events E_i, as predicates on (i, current value).
///
/// Once E fails the walk is driven upward deterministically: the drift
/// hypothesis only covers steps taken on E.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Schedule {
    Always,
    /// E_i fails for every i ≥ step.
    FailAfter(u64),
    /// E_i fails once the walk has reached `level` (offset from the start).
    FailAbove(f64),
}

impl Schedule {
    pub(crate) fn holds(&self, i: u64, offset: f64) -> bool {
        match *self {
            Schedule::Always => true,
            Schedule::FailAfter(s) => i < s,
            Schedule::FailAbove(level) => offset < level,
        }
    }
}

/// Which way the drift points. `Up` is the mirror image of `Down`: every
/// jump and every level is negated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Down,
    Up,
}

impl Direction {
    pub(crate) fn sign(self) -> f64 {
        match self {
            Direction::Down => 1.0,
            Direction::Up => -1.0,
        }
    }
}

/// Hitting a lower value r₁ from r₀ within m steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingSpec {
    /// Law of the jumps in the walk's own frame (drift down for `Down`,
    /// drift up for `Up`).
    pub law: JumpLaw,
    pub v: f64,
    pub r0: f64,
    pub r1: f64,
    pub m: u64,
    pub schedule: Schedule,
    pub direction: Direction,
}

/// First exit from the band [h₀−b, h₀+a) started at h₀.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingSpec {
    pub law: JumpLaw,
    pub v: f64,
    pub a: f64,
    pub b: f64,
    pub schedule: Schedule,
    /// Walks still inside the band after this many steps count as not
    /// crossing.
    pub max_steps: u64,
    pub direction: Direction,
}

/// A Markov walk F with drift ≤ −v at F ≥ h, started at c; a different law
/// applies below h.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftsDownSpec {
    pub above: JumpLaw,
    pub below: JumpLaw,
    pub v: f64,
    pub c: i64,
    pub h: i64,
    pub rho: i64,
    pub m: u64,
    pub s: u64,
    pub direction: Direction,
}

/// Down-probability profile of the return-time walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ReturnLaw {
    /// P(−1) = δ below k₀ and 3/4 from k₀ on; the rest of the mass goes up.
    Tight,
    /// P(−1) = 3/4 at every positive level.
    ThreeQuarters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnWalkSpec {
    pub delta: f64,
    pub k0: u32,
    pub s0: u64,
    pub m: u64,
    pub law: ReturnLaw,
}

impl ReturnWalkSpec {
    /// (P(−1), P(+1)) at level s ≥ 1. Level 0 is absorbing, so a walk
    /// started at 0 has hit 0 at step 1.
    pub(crate) fn probs(&self, s: u64) -> (f64, f64) {
        if s == 0 {
            return (0.0, 0.0);
        }
        let down = match self.law {
            ReturnLaw::Tight if s < self.k0 as u64 => self.delta,
            _ => 0.75,
        };
        (down, 1.0 - down)
    }
}
