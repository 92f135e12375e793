//! Exact probabilities for lattice walks by forward dynamic programming over
//! (step, position), plus closed forms where they exist.

use super::experiments::Tail;
use super::{CrossingSpec, Direction, DriftsDownSpec, HittingSpec, JumpLaw, ReturnWalkSpec};

// Mass below this is dropped when a run can stop early.
const NEGLIGIBLE: f64 = 1e-300;

fn down_frame(law: JumpLaw, dir: Direction) -> JumpLaw {
    match dir {
        Direction::Down => law,
        Direction::Up => law.mirrored(),
    }
}

/// One step of a lattice walk on offsets lo..=hi stored from index 0.
fn step(mass: &[f64], probs: [f64; 3], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    let [pd, ps, pu] = probs;
    let len = mass.len();
    for (i, &w) in mass.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        if i > 0 {
            out[i - 1] += w * pd;
        }
        out[i] += w * ps;
        if i + 1 < len {
            out[i + 1] += w * pu;
        }
    }
}

/// P(E ∩ {the walk stays above r₁ for t ≤ m}). `None` unless the law lives
/// on {−1, 0, 1}.
pub fn hitting_dp(spec: &HittingSpec) -> Option<f64> {
    let probs = down_frame(spec.law, spec.direction).lattice()?;
    let gap = spec.direction.sign() * (spec.r0 - spec.r1);
    let m = spec.m as i64;
    // offsets −m..=m, index o + m; alive while o > −gap
    let width = (2 * m + 1) as usize;
    let alive = |o: i64| (o as f64) > -gap;
    let mut mass = vec![0.0; width];
    if !alive(0) {
        return Some(0.0);
    }
    mass[m as usize] = 1.0;
    let mut next = vec![0.0; width];
    for i in 0..spec.m {
        for (idx, w) in mass.iter_mut().enumerate() {
            if *w != 0.0 && !spec.schedule.holds(i, (idx as i64 - m) as f64) {
                *w = 0.0;
            }
        }
        step(&mass, probs, &mut next);
        for (idx, w) in next.iter_mut().enumerate() {
            if !alive(idx as i64 - m) {
                *w = 0.0;
            }
        }
        std::mem::swap(&mut mass, &mut next);
    }
    Some(mass.iter().sum())
}

/// P(E ∩ {the walk leaves [h₀−b, h₀+a) through the top within
/// `max_steps`}), in the drift-down frame.
pub fn crossing_dp(spec: &CrossingSpec) -> Option<f64> {
    let probs = down_frame(spec.law, spec.direction).lattice()?;
    // inside offsets: ceil(−b) ..= ceil(a) − 1
    let lo = (-spec.b).ceil() as i64;
    let hi = spec.a.ceil() as i64 - 1;
    if hi < lo || lo > 0 || hi < 0 {
        return Some(if 0 > hi { 1.0 } else { 0.0 });
    }
    // pad one cell on each side for the absorbing exits
    let width = (hi - lo + 3) as usize;
    let at = |o: i64| (o - lo + 1) as usize;
    let mut mass = vec![0.0; width];
    mass[at(0)] = 1.0;
    let mut next = vec![0.0; width];
    let mut top = 0.0;
    for i in 0..spec.max_steps {
        for o in lo..=hi {
            if mass[at(o)] != 0.0 && !spec.schedule.holds(i, o as f64) {
                mass[at(o)] = 0.0;
            }
        }
        step(&mass, probs, &mut next);
        top += next[width - 1];
        next[0] = 0.0;
        next[width - 1] = 0.0;
        std::mem::swap(&mut mass, &mut next);
        if mass.iter().sum::<f64>() < NEGLIGIBLE {
            break;
        }
    }
    Some(top)
}

/// Gambler's ruin for the ±1 walk with mean −v on integer offsets. Exiting
/// below means dropping under h₀ − b, one cell past the band, so the walk
/// starts ⌊b⌋ + 1 above the lower absorbing cell.
pub fn crossing_gamblers_ruin(v: f64, a: f64, b: f64) -> f64 {
    let up = a.ceil().max(0.0);
    let down = b.floor() + 1.0;
    let total = up + down;
    if up == 0.0 {
        return 1.0;
    }
    if v == 0.0 {
        return down / total;
    }
    let rho = (1.0 + v) / (1.0 - v);
    // (ρ^down − 1)/(ρ^total − 1) via expm1 for accuracy at small v
    let l = rho.ln();
    (down * l).exp_m1() / (total * l).exp_m1()
}

/// (P(T₁ > m), P(T₂ ≤ s)) for a drifts-down walk with T* = 0 and S the
/// whole line.
pub fn drifts_down_dp(spec: &DriftsDownSpec) -> Option<(f64, f64)> {
    let drift = down_frame(spec.above, spec.direction).lattice()?;
    let other = down_frame(spec.below, spec.direction).lattice()?;
    let sg = spec.direction.sign() as i64;
    let (c, h) = (sg * spec.c, sg * spec.h);
    let law_at = |g: i64| if g > h { drift } else { other };

    // part (i): absorb at ≤ h
    let m = spec.m as i64;
    let lo = c - m;
    let width = (2 * m + 1) as usize;
    let mut mass = vec![0.0; width];
    let mut next = vec![0.0; width];
    let p1 = if c <= h {
        0.0
    } else {
        mass[(c - lo) as usize] = 1.0;
        for _ in 0..spec.m {
            next.iter_mut().for_each(|x| *x = 0.0);
            for (i, &w) in mass.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let g = lo + i as i64;
                let [pd, ps, pu] = law_at(g);
                if i > 0 {
                    next[i - 1] += w * pd;
                }
                next[i] += w * ps;
                if i + 1 < width {
                    next[i + 1] += w * pu;
                }
            }
            for (i, w) in next.iter_mut().enumerate() {
                if lo + i as i64 <= h {
                    *w = 0.0;
                }
            }
            std::mem::swap(&mut mass, &mut next);
        }
        mass.iter().sum()
    };

    // part (ii): phase 0 before T₁, phase 1 after; absorb phase 1 at ≥ h + ρ
    let s = spec.s as i64;
    let lo = c - s - 1;
    let width = (2 * s + 3) as usize;
    let mut pre = vec![0.0; width];
    let mut post = vec![0.0; width];
    if c <= h {
        post[(c - lo) as usize] = 1.0;
    } else {
        pre[(c - lo) as usize] = 1.0;
    }
    let mut hit = 0.0;
    let mut npre = vec![0.0; width];
    let mut npost = vec![0.0; width];
    for _ in 0..spec.s {
        npre.iter_mut().for_each(|x| *x = 0.0);
        npost.iter_mut().for_each(|x| *x = 0.0);
        for i in 1..width - 1 {
            let g = lo + i as i64;
            let [pd, ps, pu] = law_at(g);
            for (src, dst) in [(&pre, &mut npre), (&post, &mut npost)] {
                let w = src[i];
                if w != 0.0 {
                    dst[i - 1] += w * pd;
                    dst[i] += w * ps;
                    dst[i + 1] += w * pu;
                }
            }
        }
        for i in 0..width {
            let g = lo + i as i64;
            if g <= h && npre[i] != 0.0 {
                npost[i] += npre[i];
                npre[i] = 0.0;
            }
            if g >= h + spec.rho {
                hit += npost[i];
                npost[i] = 0.0;
            }
        }
        std::mem::swap(&mut pre, &mut npre);
        std::mem::swap(&mut post, &mut npost);
    }
    Some((p1, hit))
}

/// P(S_i ≠ 0 for i = 1..m).
pub fn return_time_dp(spec: &ReturnWalkSpec) -> f64 {
    if spec.s0 == 0 {
        return 0.0;
    }
    let top = (spec.s0 + spec.m + 1) as usize;
    let mut mass = vec![0.0; top + 1];
    let mut next = vec![0.0; top + 1];
    mass[spec.s0 as usize] = 1.0;
    let (mut lo, mut hi) = (spec.s0 as usize, spec.s0 as usize);
    for _ in 0..spec.m {
        next[lo - 1..=hi + 1].iter_mut().for_each(|x| *x = 0.0);
        for s in lo..=hi {
            let w = mass[s];
            if w == 0.0 {
                continue;
            }
            let (pd, pu) = spec.probs(s as u64);
            next[s - 1] += w * pd;
            next[s] += w * (1.0 - pd - pu);
            next[s + 1] += w * pu;
        }
        next[0] = 0.0;
        mass[lo..=hi].iter_mut().for_each(|x| *x = 0.0);
        std::mem::swap(&mut mass, &mut next);
        lo = (lo - 1).max(1);
        hi += 1;
        while hi > lo && mass[hi] < NEGLIGIBLE {
            mass[hi] = 0.0;
            hi -= 1;
        }
    }
    mass[lo..=hi].iter().sum()
}

/// P(Z ≤ (1−ε)μ) by summing the mass function in log space.
pub fn exact_tail(tail: Tail, eps: f64) -> f64 {
    let mu = tail.mean();
    let cut = ((1.0 - eps) * mu + 1e-9 * mu.max(1.0)).floor();
    if cut < 0.0 {
        return 0.0;
    }
    let cut = cut as u64;
    let mut acc = 0.0;
    match tail {
        Tail::Binomial { n, p } => {
            if p == 0.0 {
                return 1.0;
            }
            if p == 1.0 {
                return if n <= cut { 1.0 } else { 0.0 };
            }
            let r = (p / (1.0 - p)).ln();
            let mut lp = n as f64 * (-p).ln_1p();
            for k in 0..=cut.min(n) {
                acc += lp.exp();
                lp += ((n - k) as f64).ln() - ((k + 1) as f64).ln() + r;
            }
        }
        Tail::Poisson { mu } => {
            let lm = mu.ln();
            let mut lp = -mu;
            for k in 0..=cut {
                acc += lp.exp();
                lp += lm - ((k + 1) as f64).ln();
            }
        }
    }
    acc.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{ReturnLaw, Schedule};

    #[test]
    fn ruin_closed_form_matches_dp() {
        let spec = CrossingSpec {
            law: JumpLaw::with_drift(0.1),
            v: 0.1,
            a: 20.0,
            b: 20.0,
            schedule: Schedule::Always,
            max_steps: 1_000_000,
            direction: Direction::Down,
        };
        let dp = crossing_dp(&spec).unwrap();
        let cf = crossing_gamblers_ruin(0.1, 20.0, 20.0);
        assert!((dp - cf).abs() < 1e-12, "{dp} {cf}");
        assert!((cf - 0.017_81).abs() < 5e-5, "{cf}");
        assert!(cf <= (-4.0f64).exp());
    }

    #[test]
    fn hitting_small_cases() {
        // a deterministic −1 walk from 0 with r₀ − r₁ = 1 hits at step 1
        let spec = HittingSpec {
            law: JumpLaw::Deterministic(-1.0),
            v: 1.0,
            r0: 1.0,
            r1: 0.0,
            m: 10,
            schedule: Schedule::Always,
            direction: Direction::Down,
        };
        assert_eq!(hitting_dp(&spec), Some(0.0));
        // fair coin, one step, gap 1: survive only by going up
        let spec = HittingSpec { law: JumpLaw::with_drift(0.0), m: 1, ..spec };
        assert!((hitting_dp(&spec).unwrap() - 0.5).abs() < 1e-15);
        let spec = HittingSpec { m: 3, ..spec };
        // paths of length 3 never touching −1: +++ ++- +-+ = 3/8
        assert!((hitting_dp(&spec).unwrap() - 0.375).abs() < 1e-15);
    }

    #[test]
    fn reversed_oracles_agree() {
        let spec = HittingSpec {
            law: JumpLaw::Lazy { p_down: 0.5, p_up: 0.2 },
            v: 0.3,
            r0: 10.0,
            r1: 0.0,
            m: 200,
            schedule: Schedule::Always,
            direction: Direction::Down,
        };
        let rev = HittingSpec {
            law: spec.law.mirrored(),
            r0: -10.0,
            r1: 0.0,
            direction: Direction::Up,
            ..spec.clone()
        };
        let (a, b) = (hitting_dp(&spec).unwrap(), hitting_dp(&rev).unwrap());
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn return_from_zero_is_immediate() {
        let spec = ReturnWalkSpec { delta: 0.4, k0: 3, s0: 0, m: 10, law: ReturnLaw::Tight };
        assert_eq!(return_time_dp(&spec), 0.0);
        // from 1 with δ = 0.4: survive one step with prob 0.6
        let spec = ReturnWalkSpec { s0: 1, m: 1, ..spec };
        assert!((return_time_dp(&spec) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn tails_sum_to_one() {
        assert!((exact_tail(Tail::Binomial { n: 10, p: 0.3 }, -10.0) - 1.0).abs() < 1e-12);
        assert!((exact_tail(Tail::Poisson { mu: 5.0 }, -100.0) - 1.0).abs() < 1e-12);
        // P(Bin(2, 1/2) ≤ 0) = 1/4
        assert!((exact_tail(Tail::Binomial { n: 2, p: 0.5 }, 1.0) - 0.25).abs() < 1e-15);
    }
}
