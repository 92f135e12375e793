//! Exact computations on tiny capped chains: the one-step kernel, its
//! stationary law and total-variation mixing times. Arrivals that would push
//! a queue past the cap are no-ops.

use crate::error::{Error, Result};
use crate::profile::Profile;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::Write;

/// Refusal threshold on the number of states.
pub const MAX_STATES: u128 = 1_000_000;
/// Dense solves beyond this size are refused as well.
pub const MAX_DENSE: usize = 6_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    Profile,
    Vector,
}

#[derive(Debug, Clone)]
pub struct CappedChain {
    pub n: usize,
    pub cap: u32,
    pub d: u32,
    pub lambda: f64,
    pub representation: Representation,
    /// Vector states are length tuples; profile states are non-increasing
    /// length tuples.
    states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    rows: Vec<Vec<(usize, f64)>>,
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of states before building.
pub fn state_count(n: usize, cap: u32, repr: Representation) -> u128 {
    match repr {
        Representation::Vector => (cap as u128 + 1).saturating_pow(n as u32),
        Representation::Profile => binomial(n as u128 + cap as u128, n as u128),
    }
}

fn enumerate(n: usize, cap: u32, repr: Representation) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fn rec(pos: usize, hi: u32, cap: u32, sorted: bool, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        let top = if sorted { hi } else { cap };
        for l in 0..=top {
            cur[pos] = l;
            rec(pos + 1, l, cap, sorted, cur, out);
        }
    }
    rec(0, cap, cap, repr == Representation::Profile, &mut cur, &mut out);
    out
}

/// P(queue q is the first minimum of d uniform picks with replacement).
pub fn choice_probs(x: &[u32], d: u32) -> Vec<f64> {
    let n = x.len() as f64;
    x.iter()
        .map(|&l| {
            // q is chosen when some pick p hits it, every earlier pick is
            // strictly longer and every later pick is at least as long
            let longer = x.iter().filter(|&&y| y > l).count() as f64 / n;
            let at_least = x.iter().filter(|&&y| y >= l).count() as f64 / n;
            (0..d)
                .map(|p| longer.powi(p as i32) * at_least.powi((d - 1 - p) as i32) / n)
                .sum()
        })
        .collect()
}

fn sorted_desc(x: &[u32]) -> Vec<u32> {
    let mut s = x.to_vec();
    s.sort_unstable_by(|a, b| b.cmp(a));
    s
}

impl CappedChain {
    pub fn build(n: usize, cap: u32, d: u32, lambda: f64, repr: Representation) -> Result<Self> {
        if n == 0 || d == 0 || !(0.0..1.0).contains(&lambda) {
            return Err(Error::Domain(format!("need n, d ≥ 1 and 0 ≤ λ < 1 (n = {n}, d = {d}, λ = {lambda})")));
        }
        let count = state_count(n, cap, repr);
        if count > MAX_STATES {
            return Err(Error::StateSpace { states: count, limit: MAX_STATES });
        }
        let states = enumerate(n, cap, repr);
        let index: HashMap<_, _> = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let pa = lambda / (1.0 + lambda);
        let pd = 1.0 / (1.0 + lambda);
        let nf = n as f64;
        let rows = states
            .iter()
            .map(|x| {
                let mut row: HashMap<usize, f64> = HashMap::new();
                let mut add = |y: Vec<u32>, p: f64| {
                    if p > 0.0 {
                        *row.entry(index[&y]).or_insert(0.0) += p;
                    }
                };
                match repr {
                    Representation::Vector => {
                        for (q, c) in choice_probs(x, d).into_iter().enumerate() {
                            let mut y = x.clone();
                            if y[q] < cap {
                                y[q] += 1;
                            }
                            add(y, pa * c);
                        }
                        for q in 0..n {
                            let mut y = x.clone();
                            y[q] = y[q].saturating_sub(1);
                            add(y, pd / nf);
                        }
                    }
                    Representation::Profile => {
                        // x is sorted non-increasing; u_l = #{≥ l}/n
                        let ge = |l: u32| x.iter().filter(|&&y| y >= l).count();
                        let pow = |l: u32| (ge(l) as f64 / nf).powi(d as i32);
                        for l in 0..=cap {
                            let p = pow(l) - pow(l + 1);
                            if p <= 0.0 {
                                continue;
                            }
                            let mut y = x.clone();
                            if l < cap {
                                // the last queue at length l in sorted order
                                let pos = x.iter().position(|&v| v == l).unwrap();
                                y[pos] += 1;
                                y = sorted_desc(&y);
                            }
                            add(y, pa * p);
                        }
                        let mut l = 0;
                        while l <= cap {
                            let c = x.iter().filter(|&&v| v == l).count();
                            if c > 0 {
                                let mut y = x.clone();
                                if l > 0 {
                                    let pos = x.iter().rposition(|&v| v == l).unwrap();
                                    y[pos] -= 1;
                                    y = sorted_desc(&y);
                                }
                                add(y, pd * c as f64 / nf);
                            }
                            l += 1;
                        }
                    }
                }
                let mut r: Vec<(usize, f64)> = row.into_iter().collect();
                r.sort_by_key(|e| e.0);
                r
            })
            .collect();
        Ok(CappedChain { n, cap, d, lambda, representation: repr, states, index, rows })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, i: usize) -> &[u32] {
        &self.states[i]
    }

    /// Index of the state with these queue lengths; profile chains accept
    /// any order.
    pub fn index_of(&self, lengths: &[u32]) -> Option<usize> {
        match self.representation {
            Representation::Vector => self.index.get(lengths).copied(),
            Representation::Profile => self.index.get(&sorted_desc(lengths)).copied(),
        }
    }

    pub fn profile_of(&self, i: usize) -> Profile {
        Profile::from_lengths(&self.states[i]).expect("states are non-empty")
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.rows[i].iter().find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let k = self.len();
        let mut m = DMatrix::zeros(k, k);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, p) in r {
                m[(i, j)] = p;
            }
        }
        m
    }

    /// max_i |Σ_j P(i, j) − 1|.
    pub fn row_sum_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().map(|e| e.1).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// μP.
    pub fn push(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (i, r) in self.rows.iter().enumerate() {
            if mu[i] != 0.0 {
                for &(j, p) in r {
                    out[j] += mu[i] * p;
                }
            }
        }
        out
    }

    pub fn write_kernel_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["from", "to", "prob"])?;
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, p) in r {
                w.write_record([label(&self.states[i]), label(&self.states[j]), format!("{p:e}")])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_stationary_csv<W: Write>(&self, pi: &[f64], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["state", "prob"])?;
        for (s, p) in self.states.iter().zip(pi) {
            w.write_record([label(s), format!("{p:e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn label(s: &[u32]) -> String {
    s.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("-")
}

/// Solves πP = π, Σπ = 1 by a dense LU solve with one step of iterative
/// refinement.
pub fn stationary(chain: &CappedChain) -> Result<Vec<f64>> {
    let k = chain.len();
    if k > MAX_DENSE {
        return Err(Error::StateSpace { states: k as u128, limit: MAX_DENSE as u128 });
    }
    let mut a = chain.dense().transpose();
    for i in 0..k {
        a[(i, i)] -= 1.0;
    }
    for j in 0..k {
        a[(k - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(k);
    b[k - 1] = 1.0;
    let lu = a.clone().lu();
    let mut x = lu
        .solve(&b)
        .ok_or_else(|| Error::Singular("stationary system is singular (reducible chain?)".into()))?;
    let r = &b - &a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    let mut pi: Vec<f64> = x.iter().map(|&v| if v < 0.0 && v > -1e-14 { 0.0 } else { v }).collect();
    if pi.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::Singular("stationary solve produced negative mass".into()));
    }
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= s);
    let res = stationary_residual(chain, &pi);
    if res > 1e-12 {
        return Err(Error::Singular(format!("stationary residual {res:e} exceeds 1e-12")));
    }
    Ok(pi)
}

/// ‖πP − π‖_∞.
pub fn stationary_residual(chain: &CappedChain, pi: &[f64]) -> f64 {
    chain.push(pi).iter().zip(pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

pub fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// TV(δ_start P^t, π) for t = 0..=steps.
pub fn tv_curve(chain: &CappedChain, pi: &[f64], start: usize, steps: u64) -> Vec<f64> {
    let mut mu = vec![0.0; chain.len()];
    mu[start] = 1.0;
    let mut out = vec![tv(&mu, pi)];
    for _ in 0..steps {
        mu = chain.push(&mu);
        out.push(tv(&mu, pi));
    }
    out
}

/// Smallest t ≤ `max_steps` with TV(δ_start P^t, π) ≤ threshold.
pub fn tv_mixing(chain: &CappedChain, start: usize, threshold: f64, max_steps: u64) -> Result<Option<u64>> {
    let pi = stationary(chain)?;
    let mut mu = vec![0.0; chain.len()];
    mu[start] = 1.0;
    for t in 0..=max_steps {
        if tv(&mu, &pi) <= threshold {
            return Ok(Some(t));
        }
        mu = chain.push(&mu);
    }
    Ok(None)
}

/// max over vector states x and profile states c of
/// |Σ_{y ∈ c} P_vec(x, y) − P_prof(φ(x), c)|.
pub fn lumping_error(vector: &CappedChain, profile: &CappedChain) -> Result<f64> {
    if vector.representation != Representation::Vector
        || profile.representation != Representation::Profile
        || vector.n != profile.n
        || vector.cap != profile.cap
        || vector.d != profile.d
        || vector.lambda != profile.lambda
    {
        return Err(Error::Config("lumping needs matching vector and profile chains".into()));
    }
    let class: Vec<usize> = vector.states.iter().map(|x| profile.index_of(x).unwrap()).collect();
    let mut worst = 0.0f64;
    for (i, r) in vector.rows.iter().enumerate() {
        let mut lumped = vec![0.0; profile.len()];
        for &(j, p) in r {
            lumped[class[j]] += p;
        }
        let c = class[i];
        for (k, &p) in lumped.iter().enumerate() {
            worst = worst.max((p - profile.prob(c, k)).abs());
        }
    }
    Ok(worst)
}

/// Push a vector-chain law through the profile map.
pub fn lump(vector: &CappedChain, profile: &CappedChain, mu: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; profile.len()];
    for (i, &p) in mu.iter().enumerate() {
        out[profile.index_of(&vector.states[i]).unwrap()] += p;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_choice(x: &[u32], d: u32) -> Vec<f64> {
        let n = x.len();
        let mut out = vec![0.0; n];
        let total = n.pow(d);
        for code in 0..total {
            let mut c = code;
            let mut best: Option<usize> = None;
            for _ in 0..d {
                let q = c % n;
                c /= n;
                if best.is_none_or(|b| x[q] < x[b]) {
                    best = Some(q);
                }
            }
            out[best.unwrap()] += 1.0 / total as f64;
        }
        out
    }

    #[test]
    fn choice_probs_match_enumeration() {
        for (x, d) in [(vec![2, 0, 1], 2), (vec![1, 1, 0, 3], 3), (vec![0, 0], 1), (vec![2, 2, 2], 4)] {
            let a = choice_probs(&x, d);
            let b = brute_choice(&x, d);
            for (p, q) in a.iter().zip(&b) {
                assert!((p - q).abs() < 1e-14, "{x:?} {a:?} {b:?}");
            }
        }
    }

    #[test]
    fn single_queue_is_birth_death() {
        let lambda = 0.6;
        let c = CappedChain::build(1, 6, 3, lambda, Representation::Profile).unwrap();
        let pa = lambda / (1.0 + lambda);
        for l in 0..6u32 {
            let i = c.index_of(&[l]).unwrap();
            let j = c.index_of(&[l + 1]).unwrap();
            assert!((c.prob(i, j) - pa).abs() < 1e-15);
            assert!((c.prob(j, i) - (1.0 - pa)).abs() < 1e-15);
        }
        let pi = stationary(&c).unwrap();
        let z: f64 = (0..=6).map(|j| lambda.powi(j)).sum();
        for j in 0..=6u32 {
            let i = c.index_of(&[j]).unwrap();
            assert!((pi[i] - lambda.powi(j as i32) / z).abs() < 1e-13);
        }
    }

    #[test]
    fn single_queue_eigen_decay() {
        // reflecting walk on {0..L}: second eigenvalue 2√(pq)·cos(π/(L+1))
        let (lambda, cap) = (0.5, 5u32);
        let c = CappedChain::build(1, cap, 2, lambda, Representation::Vector).unwrap();
        let pi = stationary(&c).unwrap();
        let curve = tv_curve(&c, &pi, 0, 200);
        let p = lambda / (1.0 + lambda);
        let rate = 2.0 * (p * (1.0 - p)).sqrt() * (std::f64::consts::PI / (cap as f64 + 1.0)).cos();
        let t = 40;
        let observed = (curve[t + 2] / curve[t]).sqrt();
        assert!((observed - rate).abs() < 1e-6, "{observed} {rate}");
        // one-queue, cap-one chain mixes in a single step
        let c = CappedChain::build(1, 1, 1, 0.3, Representation::Vector).unwrap();
        assert_eq!(tv_mixing(&c, 0, 1e-12, 10).unwrap(), Some(1));
    }

    #[test]
    fn two_queues_cap_one() {
        let (lambda, d) = (0.5, 2);
        let c = CappedChain::build(2, 1, d, lambda, Representation::Profile).unwrap();
        assert_eq!(c.len(), 3);
        let pa = lambda / (1.0 + lambda);
        let pd = 1.0 - pa;
        let (e, h, f) = (c.index_of(&[0, 0]).unwrap(), c.index_of(&[1, 0]).unwrap(), c.index_of(&[1, 1]).unwrap());
        assert!((c.prob(e, h) - pa).abs() < 1e-15);
        assert!((c.prob(e, e) - pd).abs() < 1e-15);
        // from (1,0): 1 of 4 pick pairs lands on the busy queue only
        assert!((c.prob(h, f) - pa * 0.75).abs() < 1e-15);
        assert!((c.prob(h, h) - (pa * 0.25 + pd * 0.5)).abs() < 1e-15);
        assert!((c.prob(h, e) - pd * 0.5).abs() < 1e-15);
        assert!((c.prob(f, f) - pa).abs() < 1e-15);
        assert!((c.prob(f, h) - pd).abs() < 1e-15);
    }

    #[test]
    fn lumping_is_exact() {
        for (n, cap, d) in [(2, 3, 2), (3, 2, 3), (4, 2, 2), (3, 3, 1)] {
            let v = CappedChain::build(n, cap, d, 0.7, Representation::Vector).unwrap();
            let p = CappedChain::build(n, cap, d, 0.7, Representation::Profile).unwrap();
            assert!(v.row_sum_error() < 1e-12 && p.row_sum_error() < 1e-12);
            assert!(lumping_error(&v, &p).unwrap() < 1e-12);
            let pv = stationary(&v).unwrap();
            let pp = stationary(&p).unwrap();
            assert!(tv(&lump(&v, &p, &pv), &pp) < 1e-12);
        }
    }

    #[test]
    fn fixture_chain() {
        let c = CappedChain::build(2, 3, 2, 0.6, Representation::Profile).unwrap();
        assert_eq!(c.len(), 10);
        let pi = stationary(&c).unwrap();
        assert!(stationary_residual(&c, &pi) <= 1e-12);
        assert!(pi.iter().all(|&p| p > 0.0));
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let empty = c.index_of(&[0, 0]).unwrap();
        let curve = tv_curve(&c, &pi, empty, 60);
        assert!(curve.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        let t = tv_mixing(&c, empty, 0.01, 1000).unwrap().unwrap();
        assert!(curve[t as usize] <= 0.01 && curve[t as usize - 1] > 0.01);
    }

    #[test]
    fn blowup_refused() {
        let e = CappedChain::build(12, 5, 2, 0.5, Representation::Vector).unwrap_err();
        assert!(matches!(e, Error::StateSpace { states: 2_176_782_336, .. }));
    }

    #[test]
    fn csv_exports() {
        let c = CappedChain::build(1, 1, 1, 0.5, Representation::Profile).unwrap();
        let mut buf = Vec::new();
        c.write_kernel_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("from,to,prob\n"));
        assert_eq!(s.lines().count(), 5);
    }
}
