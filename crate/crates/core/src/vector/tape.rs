use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The shared randomness (V_t, D_t, D̃_t) of the coupling, generated from
/// (seed, t) alone so that no history is stored.
///
/// Each step t owns ChaCha stream t of the seed's key: V_t is drawn first,
/// then D̃_t, then the d entries of D_t on demand.
#[derive(Debug, Clone)]
pub struct RandomTape {
    pub seed: u64,
    pub n: usize,
    pub d: u64,
    pub lambda: f64,
    key: [u8; 32],
    p_arrival: f64,
}

impl RandomTape {
    /// λ = 0 is allowed here (no arrivals), unlike in [`crate::Params`].
    pub fn new(seed: u64, n: usize, d: u64, lambda: f64) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Domain("tape needs n ≥ 1 and d ≥ 1".into()));
        }
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::Domain(format!("lambda = {lambda} is not in [0,1)")));
        }
        let mut key = [0u8; 32];
        ChaCha8Rng::seed_from_u64(seed).fill(&mut key);
        Ok(RandomTape { seed, n, d, lambda, key, p_arrival: lambda / (1.0 + lambda) })
    }

    pub fn event(&self, t: u64) -> TapeEvent {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(t);
        let arrival = rng.random_bool(self.p_arrival);
        let departure = rng.random_range(0..self.n);
        TapeEvent { arrival, departure, rng, n: self.n, d: self.d }
    }
}

#[derive(Debug, Clone)]
pub struct TapeEvent {
    /// V_t.
    pub arrival: bool,
    /// D̃_t.
    pub departure: usize,
    rng: ChaCha8Rng,
    n: usize,
    d: u64,
}

impl TapeEvent {
    /// D_t as a lazy iterator; every call yields the same sequence.
    pub fn choices(&self) -> Choices {
        Choices { rng: self.rng.clone(), left: self.d, n: self.n }
    }
}

pub struct Choices {
    rng: ChaCha8Rng,
    left: u64,
    n: usize,
}

impl Iterator for Choices {
    type Item = usize;
    fn next(&mut self) -> Option<usize> {
        if self.left == 0 {
            return None;
        }
        self.left -= 1;
        Some(self.rng.random_range(0..self.n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_from_seed_and_time() {
        let a = RandomTape::new(5, 100, 7, 0.9).unwrap();
        let b = RandomTape::new(5, 100, 7, 0.9).unwrap();
        for t in [0u64, 1, 99, 1 << 40] {
            let (x, y) = (a.event(t), b.event(t));
            assert_eq!(x.arrival, y.arrival);
            assert_eq!(x.departure, y.departure);
            let cx: Vec<_> = x.choices().collect();
            assert_eq!(cx, y.choices().collect::<Vec<_>>());
            assert_eq!(cx, x.choices().collect::<Vec<_>>());
            assert_eq!(cx.len(), 7);
        }
        let c = RandomTape::new(6, 100, 7, 0.9).unwrap();
        let differs = (0..20).any(|t| a.event(t).choices().collect::<Vec<_>>() != c.event(t).choices().collect::<Vec<_>>());
        assert!(differs);
    }

    #[test]
    fn marginals() {
        let tape = RandomTape::new(1, 10, 3, 0.5).unwrap();
        let m = 60_000;
        let arrivals = (0..m).filter(|&t| tape.event(t).arrival).count() as f64;
        let p = 0.5 / 1.5;
        assert!((arrivals / m as f64 - p).abs() < 4.0 * (p * (1.0 - p) / m as f64).sqrt());
        let mut hist = [0u32; 10];
        for t in 0..m {
            hist[tape.event(t).departure] += 1;
        }
        for h in hist {
            assert!((h as f64 - 6000.0).abs() < 4.0 * (6000.0f64 * 0.9).sqrt());
        }
        assert!(RandomTape::new(1, 10, 3, 1.0).is_err());
        assert!(RandomTape::new(1, 10, 3, 0.0).is_ok());
    }
}
