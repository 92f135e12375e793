//! Agreement between the profile engine, the vector engine and the exact
//! capped kernels.

use supermarket::oracle::{CappedChain, Representation};
use supermarket::profile::{simulate, ObserverConfig, Profile, ProfileChain};
use supermarket::rng::{child_seed, seeded};
use supermarket::vector::{run_coupled, step_vector, step_vector_capped, CoupledOptions, QueueVector, RandomTape};
use supermarket::Params;

fn lengths_of(p: &Profile) -> Vec<u32> {
    let mut v = Vec::new();
    for (l, &c) in p.counts().iter().enumerate() {
        v.extend(std::iter::repeat_n(l as u32, c as usize));
    }
    v
}

#[test]
fn profile_steps_match_exact_kernel() {
    let mut rng = seeded(1);
    for (n, d, cap) in [(1usize, 1u32, 3u32), (2, 2, 3), (3, 2, 2), (3, 1, 3), (2, 1, 1)] {
        let lambda = 0.7;
        let chain = CappedChain::build(n, cap, d, lambda, Representation::Profile).unwrap();
        for i in 0..chain.len() {
            let mut c = ProfileChain::new(chain.profile_of(i), lambda, d as u64, Some(cap as usize)).unwrap();
            let m = 40_000u64;
            let mut counts = vec![0u64; chain.len()];
            for _ in 0..m {
                let out = c.step(&mut rng);
                counts[chain.index_of(&lengths_of(c.profile())).unwrap()] += 1;
                c.undo(out);
            }
            for (j, &k) in counts.iter().enumerate() {
                let p = chain.prob(i, j);
                let f = k as f64 / m as f64;
                let s = (p * (1.0 - p) / m as f64).sqrt();
                assert!((f - p).abs() <= 4.0 * s + 1e-12, "n={n} d={d} L={cap} {i}->{j}: {f} vs {p}");
            }
        }
    }
}

#[test]
fn vector_steps_match_exact_kernel() {
    for (n, d, cap) in [(2usize, 2u32, 3u32), (3, 2, 2), (3, 3, 2)] {
        let lambda = 0.5;
        let chain = CappedChain::build(n, cap, d, lambda, Representation::Vector).unwrap();
        let tape = RandomTape::new(2 + n as u64, n, d as u64, lambda).unwrap();
        let mut t = 0;
        for i in 0..chain.len() {
            let m = 20_000u64;
            let mut counts = vec![0u64; chain.len()];
            for _ in 0..m {
                let mut y = QueueVector::new(chain.state(i).to_vec()).unwrap();
                step_vector_capped(&mut y, &tape.event(t), Some(cap));
                t += 1;
                counts[chain.index_of(y.lengths()).unwrap()] += 1;
            }
            for (j, &k) in counts.iter().enumerate() {
                let p = chain.prob(i, j);
                let f = k as f64 / m as f64;
                let s = (p * (1.0 - p) / m as f64).sqrt();
                assert!((f - p).abs() <= 4.0 * s + 1e-12, "{i}->{j}: {f} vs {p}");
            }
        }
    }
}

/// Two-sample Kolmogorov–Smirnov statistic.
fn ks(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn engines_agree_in_distribution() {
    let (n, d, lambda) = (20usize, 3u64, 0.8);
    let times = [25u64, 100, 400];
    let levels = [1usize, 2, 3];
    let replicas = 10_000u64;
    let mut prof = vec![vec![Vec::new(); levels.len()]; times.len()];
    let mut vect = prof.clone();
    for r in 0..replicas {
        let mut c = ProfileChain::new(Profile::empty(n as u64).unwrap(), lambda, d, None).unwrap();
        let mut rng = seeded(child_seed(10, r));
        let tape = RandomTape::new(child_seed(11, r), n, d, lambda).unwrap();
        let mut x = QueueVector::zeros(n);
        let mut t = 0;
        for (ti, &until) in times.iter().enumerate() {
            while t < until {
                c.step(&mut rng);
                step_vector(&mut x, &tape.event(t));
                t += 1;
            }
            let p = x.to_profile();
            for (li, &l) in levels.iter().enumerate() {
                prof[ti][li].push(c.profile().tail_count(l) as f64);
                vect[ti][li].push(p.tail_count(l) as f64);
            }
        }
    }
    // level 10⁻³ split over the comparisons
    let tests = (times.len() * levels.len()) as f64;
    let alpha = 1e-3 / tests;
    let crit = (-(alpha / 2.0).ln() / 2.0).sqrt() * (2.0 / replicas as f64).sqrt();
    for ti in 0..times.len() {
        for li in 0..levels.len() {
            let stat = ks(prof[ti][li].clone(), vect[ti][li].clone());
            assert!(stat <= crit, "t={} level={}: KS {stat} > {crit}", times[ti], levels[li]);
        }
    }
}

#[test]
fn simulation_is_deterministic() {
    let p = Params::with_k(500, 10, 0.9, 0.1, 2).unwrap();
    let cfg = ObserverConfig { interval: 97, levels: 4, q_indices: vec![1, 2], p_functional: true, ..Default::default() };
    let a = simulate(&p, Profile::empty(500).unwrap(), 50_000, 9, &cfg).unwrap();
    let b = simulate(&p, Profile::empty(500).unwrap(), 50_000, 9, &cfg).unwrap();
    assert_eq!(a, b);
    let c = simulate(&p, Profile::empty(500).unwrap(), 50_000, 10, &cfg).unwrap();
    assert_ne!(a.final_profile, c.final_profile);

    let tape = RandomTape::new(3, 50, 4, 0.9).unwrap();
    let states = vec![QueueVector::zeros(50), QueueVector::new(vec![2; 50]).unwrap()];
    let r1 = run_coupled(&states, &tape, 5_000, &CoupledOptions::default()).unwrap();
    let r2 = run_coupled(&states, &tape, 5_000, &CoupledOptions::default()).unwrap();
    assert_eq!(r1.final_states, r2.final_states);
    assert_eq!(r1.pairs[0].coalesced_at, r2.pairs[0].coalesced_at);
}
