//! Full queue-vector chain driven by a shared random tape, with coupling,
//! coalescence, path construction and relaxation experiments.

mod coupling;
mod path;
mod relaxation;
mod tape;

pub use coupling::{
    coalescence_stats, coalescence_time, edge_coalescence_times, run_coupled, CoalescenceStats,
    CoupledOptions, CoupledRun, PairSource, PairTrace,
};
pub use path::{
    path_in_n, path_through_empty, random_in_n, validate_path, Move, Path, PathCheck,
};
pub use relaxation::{deficient_start, relaxation_experiment, RelaxationReport};
pub use tape::{RandomTape, TapeEvent};

use crate::error::{Error, Result};
use crate::profile::Profile;
use serde::{Deserialize, Serialize};
use std::ops::Index;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QueueVector {
    lengths: Vec<u32>,
}

impl QueueVector {
    pub fn new(lengths: Vec<u32>) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::Domain("a queue vector needs at least one queue".into()));
        }
        Ok(QueueVector { lengths })
    }

    pub fn zeros(n: usize) -> Self {
        QueueVector { lengths: vec![0; n.max(1)] }
    }

    /// Canonical vector of a profile: lengths in non-decreasing order.
    pub fn from_profile(p: &Profile) -> Self {
        let mut lengths = Vec::with_capacity(p.n_queues() as usize);
        for (len, &c) in p.counts().iter().enumerate() {
            lengths.extend(std::iter::repeat_n(len as u32, c as usize));
        }
        QueueVector { lengths }
    }

    pub fn n(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[u32] {
        &self.lengths
    }

    /// ‖x‖₁.
    pub fn l1(&self) -> u64 {
        self.lengths.iter().map(|&l| l as u64).sum()
    }

    /// ‖x‖∞.
    pub fn linf(&self) -> u32 {
        self.lengths.iter().copied().max().unwrap_or(0)
    }

    pub fn to_profile(&self) -> Profile {
        Profile::from_lengths(&self.lengths).expect("non-empty vector")
    }

    /// Componentwise x ≤ y.
    pub fn le(&self, other: &QueueVector) -> bool {
        self.lengths.iter().zip(&other.lengths).all(|(a, b)| a <= b)
    }

    pub fn l1_distance(&self, other: &QueueVector) -> u64 {
        self.lengths.iter().zip(&other.lengths).map(|(&a, &b)| (a as i64 - b as i64).unsigned_abs()).sum()
    }

    pub fn linf_distance(&self, other: &QueueVector) -> u64 {
        self.lengths
            .iter()
            .zip(&other.lengths)
            .map(|(&a, &b)| (a as i64 - b as i64).unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    /// Adds `delta` ∈ {−1, +1} customers to queue `q`.
    pub fn bump(&mut self, q: usize, delta: i8) {
        if delta > 0 {
            self.lengths[q] += 1;
        } else {
            self.lengths[q] -= 1;
        }
    }
}

impl Index<usize> for QueueVector {
    type Output = u32;
    fn index(&self, q: usize) -> &u32 {
        &self.lengths[q]
    }
}

/// What one tape event does to one state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepEffect {
    Arrival(usize),
    Departure(usize),
    Idle,
    /// Capped chains: the arrival would exceed the cap.
    Blocked(usize),
}

impl StepEffect {
    /// The changed queue and the change.
    pub fn change(&self) -> Option<(usize, i8)> {
        match *self {
            StepEffect::Arrival(q) => Some((q, 1)),
            StepEffect::Departure(q) => Some((q, -1)),
            _ => None,
        }
    }
}

/// The transition s_t(x; v, d, d̃) without mutating x: an arrival joins the
/// first queue of D_t attaining the minimum length; a departure serves D̃_t
/// if it is non-empty.
pub fn transition(x: &QueueVector, ev: &TapeEvent, cap: Option<u32>) -> StepEffect {
    if ev.arrival {
        let mut best = usize::MAX;
        let mut best_len = u32::MAX;
        for q in ev.choices() {
            let l = x.lengths[q];
            if l < best_len {
                best_len = l;
                best = q;
                if l == 0 {
                    break;
                }
            }
        }
        if matches!(cap, Some(c) if best_len >= c) {
            StepEffect::Blocked(best)
        } else {
            StepEffect::Arrival(best)
        }
    } else if x.lengths[ev.departure] > 0 {
        StepEffect::Departure(ev.departure)
    } else {
        StepEffect::Idle
    }
}

pub fn apply(x: &mut QueueVector, effect: StepEffect) {
    if let Some((q, delta)) = effect.change() {
        x.bump(q, delta);
    }
}

pub fn step_vector(x: &mut QueueVector, ev: &TapeEvent) -> StepEffect {
    let e = transition(x, ev, None);
    apply(x, e);
    e
}

pub fn step_vector_capped(x: &mut QueueVector, ev: &TapeEvent, cap: Option<u32>) -> StepEffect {
    let e = transition(x, ev, cap);
    apply(x, e);
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Finds a step whose event has the requested shape.
    fn find_event(tape: &RandomTape, pred: impl Fn(&TapeEvent) -> bool) -> TapeEvent {
        (0..1_000_000).map(|t| tape.event(t)).find(|e| pred(e)).unwrap()
    }

    #[test]
    fn first_minimum_rule() {
        // x = (2,0,1), D = (1,3,2) in 1-based indices → joins queue 2
        let tape = RandomTape::new(11, 3, 3, 0.9).unwrap();
        let ev = find_event(&tape, |e| e.arrival && e.choices().collect::<Vec<_>>() == vec![0, 2, 1]);
        let mut x = QueueVector::new(vec![2, 0, 1]).unwrap();
        assert_eq!(step_vector(&mut x, &ev), StepEffect::Arrival(1));
        assert_eq!(x.lengths(), &[2, 1, 1]);
        // equal lengths: the first listed is joined
        let mut y = QueueVector::new(vec![4, 4, 4]).unwrap();
        let first = ev.choices().next().unwrap();
        assert_eq!(step_vector(&mut y, &ev), StepEffect::Arrival(first));
    }

    #[test]
    fn departure_from_empty_is_idle() {
        let tape = RandomTape::new(2, 4, 2, 0.5).unwrap();
        let ev = find_event(&tape, |e| !e.arrival && e.departure == 3);
        let mut x = QueueVector::new(vec![1, 1, 1, 0]).unwrap();
        assert_eq!(step_vector(&mut x, &ev), StepEffect::Idle);
        assert_eq!(x.lengths(), &[1, 1, 1, 0]);
    }

    #[test]
    fn profile_round_trip() {
        let x = QueueVector::new(vec![3, 0, 1, 1]).unwrap();
        let p = x.to_profile();
        assert_eq!(p.counts(), vec![1, 2, 0, 1]);
        let y = QueueVector::from_profile(&p);
        assert_eq!(y.lengths(), &[0, 1, 1, 3]);
        assert_eq!(x.l1(), 5);
        assert_eq!(x.linf(), 3);
    }

    #[test]
    fn cap_blocks() {
        let tape = RandomTape::new(3, 2, 2, 0.9).unwrap();
        let mut x = QueueVector::new(vec![0, 0]).unwrap();
        for t in 0..10_000 {
            step_vector_capped(&mut x, &tape.event(t), Some(3));
            assert!(x.linf() <= 3);
        }
    }
}
