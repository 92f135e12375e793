use super::QueueVector;
use crate::error::{Error, Result};
use crate::model::{center_count, in_n_eps};
use crate::params::Params;
use crate::rng::SimRng;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// One edge of a path: queue `queue` changes by `delta` ∈ {−1, +1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    pub queue: usize,
    pub delta: i8,
}

/// A path stored as its start and the sequence of single-customer moves, so
/// long paths at large n do not materialize every state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub start: QueueVector,
    pub moves: Vec<Move>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn end(&self) -> QueueVector {
        let mut x = self.start.clone();
        for m in &self.moves {
            x.bump(m.queue, m.delta);
        }
        x
    }

    /// Every state on the path, start and end included.
    pub fn states(&self) -> Vec<QueueVector> {
        let mut x = self.start.clone();
        let mut out = vec![x.clone()];
        for m in &self.moves {
            x.bump(m.queue, m.delta);
            out.push(x.clone());
        }
        out
    }

    /// The path dump: a header, then one state-delta per line.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,queue,delta")?;
        for (i, m) in self.moves.iter().enumerate() {
            writeln!(w, "{},{},{}", i + 1, m.queue, m.delta)?;
        }
        Ok(())
    }
}

struct Builder {
    cur: QueueVector,
    moves: Vec<Move>,
}

impl Builder {
    fn push(&mut self, queue: usize, delta: i8) {
        self.cur.bump(queue, delta);
        self.moves.push(Move { queue, delta });
    }
}

/// Moves x to the centre 𝒫 level by level, j = k down to 1.
fn to_center(x: &QueueVector, params: &Params) -> Result<Builder> {
    let mut b = Builder { cur: x.clone(), moves: Vec::new() };
    for j in (1..=params.k).rev() {
        let target = center_count(params, j) as u64;
        let have = b.cur.lengths().iter().filter(|&&l| l >= j).count() as u64;
        let (from_len, delta, need) = if have > target {
            (j, -1i8, have - target)
        } else {
            (j - 1, 1i8, target - have)
        };
        let picks: Vec<usize> = b
            .cur
            .lengths()
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == from_len)
            .map(|(q, _)| q)
            .take(need as usize)
            .collect();
        if (picks.len() as u64) < need {
            return Err(Error::Precondition(format!(
                "only {} queues of length {from_len} available to move level {j} by {need}",
                picks.len()
            )));
        }
        for q in picks {
            b.push(q, delta);
        }
    }
    Ok(b)
}

/// Connects two centre states by the alternating add/reduce walk, levels
/// j = 0..k−1.
fn within_center(b: &mut Builder, target: &QueueVector, k: u32) -> Result<()> {
    for j in 0..k {
        let cur = b.cur.lengths();
        let t = target.lengths();
        let grow: Vec<usize> = (0..cur.len()).filter(|&q| cur[q] == j && t[q] > j).collect();
        let shrink: Vec<usize> = (0..cur.len()).filter(|&q| t[q] == j && cur[q] > j).collect();
        if shrink.len() > grow.len() {
            return Err(Error::Precondition(format!(
                "level {j}: {} queues to reduce but only {} to extend",
                shrink.len(),
                grow.len()
            )));
        }
        for (idx, &g) in grow.iter().enumerate() {
            b.push(g, 1);
            if let Some(&s) = shrink.get(idx) {
                while b.cur[s] > j {
                    b.push(s, -1);
                }
            }
        }
    }
    if &b.cur != target {
        return Err(Error::Precondition("centre states do not share their level counts".into()));
    }
    Ok(())
}

/// A path from x to y inside 𝒩^ε (ε = params.epsilon): x and y are first
/// brought to the centre 𝒫, then the two centre states are joined.
pub fn path_in_n(x: &QueueVector, y: &QueueVector, params: &Params) -> Result<Path> {
    if x.n() != y.n() || x.n() as u128 != params.n {
        return Err(Error::Config(format!(
            "path endpoints have {} and {} queues, params say n = {}",
            x.n(),
            y.n(),
            params.n
        )));
    }
    for (name, v) in [("x", x), ("y", y)] {
        if !in_n_eps(&v.to_profile(), params, params.epsilon) {
            return Err(Error::Precondition(format!("{name} is not in N^eps")));
        }
    }
    if x == y {
        return Ok(Path { start: x.clone(), moves: Vec::new() });
    }
    let mut bx = to_center(x, params)?;
    let by = to_center(y, params)?;
    within_center(&mut bx, &by.cur, params.k)?;
    for m in by.moves.iter().rev() {
        bx.push(m.queue, -m.delta);
    }
    debug_assert_eq!(&bx.cur, y);
    Ok(Path { start: x.clone(), moves: bx.moves })
}

/// x down to the empty vector and back up to y, queue by queue in index
/// order.
pub fn path_through_empty(x: &QueueVector, y: &QueueVector) -> Result<Path> {
    if x.n() != y.n() {
        return Err(Error::Config("path endpoints differ in n".into()));
    }
    let mut moves = Vec::with_capacity((x.l1() + y.l1()) as usize);
    for (q, &l) in x.lengths().iter().enumerate() {
        moves.extend(std::iter::repeat_n(Move { queue: q, delta: -1 }, l as usize));
    }
    for (q, &l) in y.lengths().iter().enumerate() {
        moves.extend(std::iter::repeat_n(Move { queue: q, delta: 1 }, l as usize));
    }
    Ok(Path { start: x.clone(), moves })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathCheck {
    pub length: usize,
    pub cap: f64,
    pub within_cap: bool,
    pub endpoints_ok: bool,
    /// Every move changes one queue by one and keeps lengths non-negative.
    pub adjacency_ok: bool,
    pub all_in_n: bool,
    /// Index of the first state (0 = start) outside 𝒩^ε.
    pub first_outside: Option<usize>,
}

impl PathCheck {
    pub fn ok(&self) -> bool {
        self.within_cap && self.endpoints_ok && self.adjacency_ok && self.all_in_n
    }
}

/// Checks adjacency, endpoints, 𝒩^ε membership of every state and the
/// length cap 4n(1−λ)(λd)^{k−1}.
pub fn validate_path(path: &Path, y: &QueueVector, params: &Params) -> PathCheck {
    let eps = params.epsilon;
    let cap = 4.0 * params.level_scale(params.k);
    let mut x = path.start.clone();
    let mut prof = x.to_profile();
    let mut first_outside = (!in_n_eps(&prof, params, eps)).then_some(0);
    let mut adjacency_ok = true;
    for (i, m) in path.moves.iter().enumerate() {
        if m.queue >= x.n() || !(m.delta == 1 || m.delta == -1) || (m.delta < 0 && x[m.queue] == 0) {
            adjacency_ok = false;
            break;
        }
        let level = x[m.queue] as usize;
        x.bump(m.queue, m.delta);
        if m.delta > 0 {
            prof.raise(level);
        } else {
            prof.lower(level);
        }
        if first_outside.is_none() && !in_n_eps(&prof, params, eps) {
            first_outside = Some(i + 1);
        }
    }
    PathCheck {
        length: path.len(),
        cap,
        within_cap: (path.len() as f64) <= cap,
        endpoints_ok: adjacency_ok && &x == y,
        adjacency_ok,
        all_in_n: first_outside.is_none(),
        first_outside,
    }
}

/// A random element of 𝒩^ε: tail counts drawn uniformly from their allowed
/// ranges (subject to monotonicity), then placed on a random permutation of
/// the queues.
pub fn random_in_n(params: &Params, eps: f64, rng: &mut SimRng) -> Result<QueueVector> {
    let n = params.n_usize()?;
    let nf = n as f64;
    for _ in 0..1000 {
        let mut tails = Vec::with_capacity(params.k as usize);
        let mut prev = n as i64;
        let mut ok = true;
        for j in 1..=params.k {
            let sc = params.level_scale(j);
            let lo = (nf - ((1.0 + 5.0 * eps) * sc).floor()).max(0.0) as i64;
            let hi = ((nf - ((1.0 - 5.0 * eps) * sc).ceil()) as i64).min(prev);
            if lo > hi {
                ok = false;
                break;
            }
            let t = rng.random_range(lo..=hi);
            tails.push(t as u64);
            prev = t;
        }
        if !ok {
            continue;
        }
        let mut lengths = vec![0u32; n];
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        for (j, &t) in tails.iter().enumerate() {
            for &q in &order[..t as usize] {
                lengths[q] = j as u32 + 1;
            }
        }
        let x = QueueVector::new(lengths)?;
        if in_n_eps(&x.to_profile(), params, eps) {
            return Ok(x);
        }
    }
    Err(Error::Refused(format!("could not sample from N^eps at eps = {eps}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn desk() -> Params {
        Params::new(10_000, 30, 0.99, 0.1).unwrap()
    }

    #[test]
    fn identical_endpoints_give_empty_path() {
        let p = desk();
        let x = random_in_n(&p, 0.1, &mut seeded(1)).unwrap();
        let path = path_in_n(&x, &x, &p).unwrap();
        assert!(path.is_empty());
        assert!(validate_path(&path, &x, &p).ok());
    }

    #[test]
    fn swapped_empty_queue_takes_two_steps() {
        let p = desk();
        let tails = center_tail_counts_for(&p);
        // centre vector with queue 0 empty and queue 1 at length 1
        let mut lengths = vec![0u32; 10_000];
        let (t1, t2) = (tails[0] as usize, tails[1] as usize);
        let empties = 10_000 - t1;
        let ones = t1 - t2;
        for (q, l) in lengths.iter_mut().enumerate() {
            *l = if q < empties { 0 } else if q < empties + ones { 1 } else { 2 };
        }
        let x = QueueVector::new(lengths.clone()).unwrap();
        lengths.swap(0, empties);
        let y = QueueVector::new(lengths).unwrap();
        let path = path_in_n(&x, &y, &p).unwrap();
        assert_eq!(path.len(), 2);
        assert_eq!(path.moves[0], Move { queue: 0, delta: 1 });
        assert_eq!(path.moves[1], Move { queue: empties, delta: -1 });
        assert!(validate_path(&path, &y, &p).ok());
    }

    fn center_tail_counts_for(p: &Params) -> Vec<u64> {
        crate::model::center_tail_counts(p)
    }

    #[test]
    fn random_paths_stay_inside() {
        let p = desk();
        let mut rng = seeded(7);
        for _ in 0..3 {
            let x = random_in_n(&p, 0.1, &mut rng).unwrap();
            let y = random_in_n(&p, 0.1, &mut rng).unwrap();
            let path = path_in_n(&x, &y, &p).unwrap();
            let check = validate_path(&path, &y, &p);
            assert!(check.ok(), "{check:?}");
            assert!(check.cap > 11_800.0 && check.cap < 11_900.0);
        }
    }

    #[test]
    fn outside_endpoint_is_refused() {
        let p = desk();
        let x = QueueVector::zeros(10_000);
        let y = random_in_n(&p, 0.1, &mut seeded(2)).unwrap();
        assert!(matches!(path_in_n(&x, &y, &p), Err(Error::Precondition(_))));
    }

    #[test]
    fn through_empty() {
        let x = QueueVector::new(vec![2, 0, 1]).unwrap();
        let y = QueueVector::new(vec![0, 3, 0]).unwrap();
        let path = path_through_empty(&x, &y).unwrap();
        assert_eq!(path.len(), 6);
        assert_eq!(path.end(), y);
        assert_eq!(path.states()[3], QueueVector::zeros(3));
        let mut buf = Vec::new();
        path.write_dump(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("step,queue,delta\n1,0,-1\n"));
    }
}
