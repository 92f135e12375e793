use super::{step_vector, QueueVector, RandomTape};
use crate::drift::exact_drift_q;
use crate::error::{Error, Result};
use crate::model::{center_count, q_over_n, CoefficientTable, SetId, SetLedger};
use crate::params::Params;
use crate::profile::Profile;
use crate::rng::child_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A start z with Q_k(z) ≤ (1−9ε)n(1−λ)(λd)^{k−1}: every centre deficit
/// count n(1 − u*_j) is scaled by one factor f and rounded down, with f
/// chosen so that Q_k lands on the target from below.
pub fn deficient_start(params: &Params, table: &CoefficientTable) -> Result<Profile> {
    let n = params.n_usize()? as u64;
    let k = params.k;
    let eps = params.epsilon;
    if 9.0 * eps >= 1.0 {
        return Err(Error::Refused(format!("(1−9ε) ≤ 0 at ε = {eps}")));
    }
    let target = (1.0 - 9.0 * eps) * params.level_scale(k);
    let center: Vec<f64> = (1..=k).map(|j| n as f64 - center_count(params, j)).collect();
    let q_center: f64 = center.iter().enumerate().map(|(i, w)| table.beta(i as u32 + 1) * w).sum();
    if q_center <= 0.0 {
        return Err(Error::Refused("the centre has no deficit to scale".into()));
    }
    let f = target / q_center;
    let deficits: Vec<u64> = center.iter().map(|w| (f * w).floor() as u64).collect();
    // tail counts n·u_j = n − deficit_j, then u_{k+1} = 0
    let tails: Vec<u64> = deficits.iter().map(|&w| n - w.min(n)).collect();
    Profile::from_tail_counts(n, &tails)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationReport {
    pub feasible: bool,
    pub reason: Option<String>,
    pub epsilon: f64,
    /// n(1−λ)(λd)^{k−1}.
    pub scale: f64,
    /// (1−9ε)·scale.
    pub target: f64,
    pub start_qk: f64,
    pub start_in_i3: bool,
    pub start_in_h3: bool,
    /// Exact (not scaled) ΔQ_k at the start.
    pub start_drift: f64,
    pub horizon: u64,
    pub replicas: usize,
    /// (t, mean Q_k over replicas).
    pub trajectory: Vec<(u64, f64)>,
    /// Per-step ΔQ_k pooled over the steps taken from states in ℋ^{3ε}.
    pub steps_in_h3: u64,
    pub mean_increment: f64,
    pub stderr: f64,
    /// 2ε(1−λ).
    pub ceiling: f64,
}

impl RelaxationReport {
    /// Mean increment ≤ ceiling + 4 standard errors.
    pub fn within_ceiling(&self) -> bool {
        self.feasible && self.mean_increment <= self.ceiling + 4.0 * self.stderr
    }

    fn skipped(params: &Params, reason: String) -> Self {
        RelaxationReport {
            feasible: false,
            reason: Some(reason),
            epsilon: params.epsilon,
            scale: params.level_scale(params.k),
            target: f64::NAN,
            start_qk: f64::NAN,
            start_in_i3: false,
            start_in_h3: false,
            start_drift: f64::NAN,
            horizon: 0,
            replicas: 0,
            trajectory: Vec::new(),
            steps_in_h3: 0,
            mean_increment: f64::NAN,
            stderr: f64::NAN,
            ceiling: 2.0 * params.epsilon * params.gap(),
        }
    }
}

struct Trace {
    qk: Vec<f64>,
    sum: f64,
    sum_sq: f64,
    count: u64,
}

/// Runs the vector chain from the deficient start for t = n(λd)^{k−1} steps
/// and records Q_k. Sets are taken at 3ε with (ℓ, g) = (k, k).
pub fn relaxation_experiment(params: &Params, replicas: usize, record_every: u64, seed: u64) -> Result<RelaxationReport> {
    let ledger = match SetLedger::new(params, params.k as f64, params.k as f64) {
        Ok(l) => l,
        Err(e) => return Ok(RelaxationReport::skipped(params, e.to_string())),
    };
    let z = match deficient_start(params, &ledger.table) {
        Ok(z) => z,
        Err(e) => return Ok(RelaxationReport::skipped(params, e.to_string())),
    };
    let k = params.k;
    let n = params.n_f64();
    let eps3 = 3.0 * params.epsilon;
    let scale = params.level_scale(k);
    let horizon = (n * params.lambda_d().powi(k as i32 - 1)).ceil() as u64;
    let record_every = record_every.max(1);
    let qk_of = |p: &Profile| n * q_over_n(p, k, &ledger.table);
    let start = QueueVector::from_profile(&z);
    let nq = start.n();
    let traces: Vec<Trace> = (0..replicas.max(1) as u64)
        .into_par_iter()
        .map(|r| -> Result<Trace> {
            let tape = RandomTape::new(child_seed(seed, r), nq, params.d, params.lambda)?;
            let mut x = start.clone();
            let mut prof = z.clone();
            let mut q = qk_of(&prof);
            let mut tr = Trace { qk: vec![q], sum: 0.0, sum_sq: 0.0, count: 0 };
            for t in 0..horizon {
                let inside = ledger.contains(&prof, SetId::H, eps3);
                let before = x.clone();
                let e = step_vector(&mut x, &tape.event(t));
                if let Some((queue, delta)) = e.change() {
                    let level = before[queue] as usize;
                    if delta > 0 {
                        prof.raise(level);
                    } else {
                        prof.lower(level);
                    }
                }
                let q2 = qk_of(&prof);
                if inside {
                    let dq = q2 - q;
                    tr.sum += dq;
                    tr.sum_sq += dq * dq;
                    tr.count += 1;
                }
                q = q2;
                if (t + 1) % record_every == 0 || t + 1 == horizon {
                    tr.qk.push(q);
                }
            }
            Ok(tr)
        })
        .collect::<Result<_>>()?;
    let points = traces[0].qk.len();
    let times: Vec<u64> = std::iter::once(0)
        .chain((1..points).map(|i| (i as u64 * record_every).min(horizon)))
        .collect();
    let trajectory = times
        .iter()
        .enumerate()
        .map(|(i, &t)| (t, traces.iter().map(|tr| tr.qk[i]).sum::<f64>() / traces.len() as f64))
        .collect();
    let (s, s2, m) = traces.iter().fold((0.0, 0.0, 0u64), |(a, b, c), tr| (a + tr.sum, b + tr.sum_sq, c + tr.count));
    let (mean, stderr) = if m > 1 {
        let mf = m as f64;
        let mean = s / mf;
        let var = (s2 / mf - mean * mean).max(0.0) * mf / (mf - 1.0);
        (mean, (var / mf).sqrt())
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(RelaxationReport {
        feasible: true,
        reason: None,
        epsilon: params.epsilon,
        scale,
        target: (1.0 - 9.0 * params.epsilon) * scale,
        start_qk: qk_of(&z),
        start_in_i3: ledger.contains(&z, SetId::I, eps3),
        start_in_h3: ledger.contains(&z, SetId::H, eps3),
        start_drift: exact_drift_q(&z, k, &ledger.table, params.lambda, params.d),
        horizon,
        replicas: traces.len(),
        trajectory,
        steps_in_h3: m,
        mean_increment: mean,
        stderr,
        ceiling: 2.0 * params.epsilon * params.gap(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk() -> Params {
        Params::new(1_000, 5, 0.9, 1.0 / 30.0).unwrap()
    }

    #[test]
    fn start_meets_the_deficit() {
        let p = desk();
        let table = CoefficientTable::new(p.lambda_d(), p.k).unwrap();
        let z = deficient_start(&p, &table).unwrap();
        let scale = p.level_scale(2);
        let qk = 1000.0 * q_over_n(&z, 2, &table);
        assert!(qk <= (1.0 - 0.3) * scale);
        assert!(qk > (1.0 - 0.3) * scale - 2.0);
        assert_eq!(z.tail_count(3), 0);
    }

    #[test]
    fn trajectory_starts_at_start() {
        let r = relaxation_experiment(&desk(), 2, 100, 4).unwrap();
        assert!(r.feasible);
        assert_eq!(r.horizon, 4500);
        assert_eq!(r.trajectory[0], (0, r.start_qk));
        assert_eq!(r.trajectory.last().unwrap().0, 4500);
        assert!(r.start_in_h3);
        assert!(r.start_qk <= r.target);
    }

    #[test]
    fn infeasible_is_reported() {
        let p = Params::new(1_000, 5, 0.9, 0.12).unwrap();
        let r = relaxation_experiment(&p, 1, 1, 0).unwrap();
        assert!(!r.feasible);
        assert!(r.reason.is_some());
    }
}
