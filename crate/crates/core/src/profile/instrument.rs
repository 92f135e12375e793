use super::{Profile, ProfileChain};
use crate::error::Result;
use crate::model::sets::{SetId, SetLedger};
use crate::rng::seeded;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "step", rename_all = "lowercase")]
pub enum Timing {
    At(u64),
    /// Not observed by the horizon.
    Censored(u64),
}

impl Timing {
    pub fn value(&self) -> Option<u64> {
        match self {
            Timing::At(t) => Some(*t),
            Timing::Censored(_) => None,
        }
    }
}

/// Hitting time T_S = inf{t ≥ T_R : X_t ∈ S₀} and exit time
/// T_S† = inf{t ≥ T_S : X_t ∉ S₁} for one ledger stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTimes {
    pub entry_set: SetId,
    pub exit_set: SetId,
    pub hit: Timing,
    pub exit: Timing,
}

/// Runs the profile chain from `initial` for `horizon` steps and records the
/// hitting and exit times of every stage in `ledger.sequence()`.
pub fn hitting_exit_instrument(
    ledger: &SetLedger,
    initial: Profile,
    eps: f64,
    horizon: u64,
    seed: u64,
) -> Result<Vec<StageTimes>> {
    let params = &ledger.params;
    let stages = ledger.sequence();
    let mut hit: Vec<Option<u64>> = vec![None; stages.len()];
    let mut exit: Vec<Option<u64>> = vec![None; stages.len()];
    let mut next = 0usize;
    let mut chain = ProfileChain::new(initial, params.lambda, params.d, None)?;
    let mut rng = seeded(seed);
    for t in 0..=horizon {
        let snap = ledger.snapshot(chain.profile());
        for s in 0..next {
            if exit[s].is_none() && !ledger.contains_snapshot(&snap, stages[s].1, eps) {
                exit[s] = Some(t);
            }
        }
        while next < stages.len() && ledger.contains_snapshot(&snap, stages[next].0, eps) {
            hit[next] = Some(t);
            next += 1;
        }
        if next == stages.len() && exit.iter().all(Option::is_some) {
            break;
        }
        if t < horizon {
            chain.step(&mut rng);
        }
    }
    let timing = |v: Option<u64>| v.map_or(Timing::Censored(horizon), Timing::At);
    Ok(stages
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| StageTimes { entry_set: a, exit_set: b, hit: timing(hit[i]), exit: timing(exit[i]) })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sets::center_tail_counts;
    use crate::params::Params;

    #[test]
    fn censored_when_never_entered() {
        // Q_k of an empty system far exceeds (1+ε)n(1−λ)(λd)^{k−1}, so 𝒜₀ is hit at 0 and ℬ₀ is not
        let p = Params::with_k(1000, 10, 0.9, 0.1, 2).unwrap();
        let l = SetLedger::new(&p, 2.0, 2.0).unwrap();
        let times = hitting_exit_instrument(&l, Profile::empty(1000).unwrap(), 0.1, 10, 1).unwrap();
        assert_eq!(times[0].hit, Timing::At(0));
        assert_eq!(times[1].hit, Timing::Censored(10));
        assert_eq!(times[1].exit, Timing::Censored(10));
    }

    #[test]
    fn start_in_everything() {
        let p = Params::with_k(10_000, 30, 0.99, 0.1, 2).unwrap();
        let l = SetLedger::new(&p, 2.0, 2.0).unwrap();
        let x = Profile::from_tail_counts(10_000, &center_tail_counts(&p)).unwrap();
        assert!(l.contains(&x, SetId::I, 0.1));
        assert!(l.contains(&x, SetId::B0, 0.1));
        let times = hitting_exit_instrument(&l, x, 0.1, 50, 3).unwrap();
        assert!(times.iter().all(|s| s.hit == Timing::At(0)));
    }
}
