//! Property tests for the invariants that hold on every state.

use proptest::prelude::*;
use supermarket::drift::{exact_drift_mass, exact_drift_q, exact_drift_u};
use supermarket::model::{q_over_n, CoefficientTable, Occupancy};
use supermarket::profile::{Profile, ProfileChain, StepOutcome};
use supermarket::rng::seeded;
use supermarket::vector::{step_vector, QueueVector, RandomTape};

fn lengths() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..8, 1..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn steps_conserve_queues(ls in lengths(), d in 1u64..6, lambda in 0.0f64..0.99, seed in any::<u64>()) {
        let p = Profile::from_lengths(&ls).unwrap();
        let n = p.n_queues();
        let mut c = ProfileChain::new(p, lambda, d, None).unwrap();
        let mut rng = seeded(seed);
        for _ in 0..200 {
            let before = c.profile().total() as i64;
            let out = c.step(&mut rng);
            let after = c.profile().total() as i64;
            prop_assert_eq!(c.profile().counts().iter().sum::<u64>(), n);
            let expect = match out {
                StepOutcome::Arrival { .. } => 1,
                StepOutcome::Departure { .. } => -1,
                _ => 0,
            };
            prop_assert_eq!(after - before, expect);
        }
    }

    #[test]
    fn vector_and_profile_views_agree(ls in lengths(), seed in any::<u64>()) {
        let x = QueueVector::new(ls.clone()).unwrap();
        let p = Profile::from_lengths(&ls).unwrap();
        prop_assert_eq!(x.to_profile(), p.clone());
        prop_assert_eq!(x.l1(), p.total());
        prop_assert_eq!(x.linf() as usize, p.max_len());
        let mut y = x.clone();
        let tape = RandomTape::new(seed, ls.len(), 3, 0.7).unwrap();
        for t in 0..50 {
            step_vector(&mut y, &tape.event(t));
        }
        prop_assert_eq!(y.to_profile().n_queues(), ls.len() as u64);
    }

    #[test]
    fn mass_drift_identity(ls in lengths(), lambda in 0.0f64..0.99) {
        let p = Profile::from_lengths(&ls).unwrap();
        let lhs = exact_drift_mass(&p, lambda) * (1.0 + lambda) + p.tail(1);
        prop_assert!((lhs - lambda).abs() < 1e-12);
    }

    #[test]
    fn functional_drift_is_linear(ls in lengths(), lambda in 0.5f64..0.99, d in 8u64..40, k in 2u32..5) {
        let p = Profile::from_lengths(&ls).unwrap();
        let table = CoefficientTable::new(lambda * d as f64, k).unwrap();
        for j in 1..=k {
            let w = table.weights(j);
            let sum: f64 = w.iter().enumerate().map(|(i, c)| c * exact_drift_u(&p, i + 1, lambda, d)).sum();
            let direct = exact_drift_q(&p, j, &table, lambda, d);
            let n = p.n_queues() as f64;
            let scale = w.iter().cloned().fold(1.0, f64::max) * n;
            // Δu_i carries the 1/n, ΔQ_j does not: ΔQ_j = −n Σ w_i Δu_i
            prop_assert!((direct + n * sum).abs() <= 1e-12 * scale, "j={} {} {}", j, direct, -n * sum);
        }
    }

    #[test]
    fn functional_bound_chain(ls in prop::collection::vec(0u32..10, 1..60), ld in 4.0f64..1e4, k in 2u32..8) {
        let p = Profile::from_lengths(&ls).unwrap();
        let table = CoefficientTable::new(ld, k).unwrap();
        let tol = 1e-12;
        for j in 1..k.saturating_sub(1) {
            let lhs = q_over_n(&p, j + 1, &table);
            let rhs = p.deficit(j as usize + 1) + 2.0 * ld.sqrt() * q_over_n(&p, j, &table);
            prop_assert!(lhs <= rhs * (1.0 + tol) + tol);
        }
        let sum: f64 = (1..=k as usize).map(|i| p.deficit(i)).sum();
        let qk = q_over_n(&p, k, &table);
        prop_assert!(qk <= sum + tol);
        prop_assert!(sum <= p.deficit(k as usize) + q_over_n(&p, k - 1, &table) * (1.0 + tol) + tol);
        for j in 1..=k {
            prop_assert!(q_over_n(&p, j, &table) <= 2.0 * ld.powf((j - 1) as f64 / 2.0) * (1.0 + tol));
        }
    }

    #[test]
    fn one_queue_moves_functionals_by_at_most_gamma_one(
        ls in prop::collection::vec(0u32..8, 1..40), q in any::<prop::sample::Index>(), up in any::<bool>(),
        ld in 4.0f64..1e3, k in 2u32..6,
    ) {
        let table = CoefficientTable::new(ld, k).unwrap();
        let mut ms = ls.clone();
        let q = q.index(ls.len());
        if up { ms[q] += 1 } else if ms[q] > 0 { ms[q] -= 1 }
        let (a, b) = (Profile::from_lengths(&ls).unwrap(), Profile::from_lengths(&ms).unwrap());
        let n = ls.len() as f64;
        for j in 1..=k {
            let delta = n * (q_over_n(&a, j, &table) - q_over_n(&b, j, &table));
            prop_assert!(delta.abs() <= ld.powf((j - 1) as f64 / 2.0) * (1.0 + 1e-9));
        }
    }
}
