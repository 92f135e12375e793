//! Read access to a queue-length profile through its tail fractions.

/// Anything that exposes u_i = fraction of queues with length ≥ i.
///
/// Implementors must return both `tail` and `deficit` accurately, since the
/// drift formulas subtract quantities close to 1.
pub trait Occupancy {
    fn n(&self) -> f64;
    /// u_i, with u_0 = 1.
    fn tail(&self, i: usize) -> f64;
    /// 1 − u_i.
    fn deficit(&self, i: usize) -> f64;
    /// Largest occupied length (‖x‖∞).
    fn max_len(&self) -> usize;

    /// Fraction of queues with length exactly i.
    fn level(&self, i: usize) -> f64 {
        let (a, b) = (self.tail(i), self.tail(i + 1));
        if a < 0.5 {
            a - b
        } else {
            self.deficit(i + 1) - self.deficit(i)
        }
    }

    /// ln u_i, finite unless u_i = 0.
    fn ln_tail(&self, i: usize) -> f64 {
        let u = self.tail(i);
        if u < 0.5 {
            u.ln()
        } else {
            (-self.deficit(i)).ln_1p()
        }
    }

    /// ‖x‖₁ = n Σ_{j≥1} u_j.
    fn mass(&self) -> f64 {
        let s: f64 = (1..=self.max_len()).map(|j| self.tail(j)).sum();
        self.n() * s
    }
}

/// A profile given by real level fractions, usable at symbolic sizes such as
/// n = 10²⁴ where integer counts are not representable.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelFractions {
    n: f64,
    tails: Vec<f64>,
    deficits: Vec<f64>,
}

impl LevelFractions {
    /// From deficits w_j = 1 − u_j for j = 1..=L, with u_{L+1} = 0.
    pub fn from_deficits(n: f64, w: &[f64]) -> Self {
        let mut deficits = Vec::with_capacity(w.len() + 2);
        deficits.push(0.0);
        deficits.extend_from_slice(w);
        deficits.push(1.0);
        let tails = deficits.iter().map(|w| 1.0 - w).collect::<Vec<_>>();
        let mut lf = LevelFractions { n, tails, deficits };
        lf.trim();
        lf
    }

    /// From fractions p_i of queues at length exactly i (must sum to 1).
    pub fn from_levels(n: f64, p: &[f64]) -> Self {
        let len = p.len();
        let mut tails = vec![0.0; len + 1];
        let mut deficits = vec![0.0; len + 1];
        for i in (0..len).rev() {
            tails[i] = tails[i + 1] + p[i];
        }
        for i in 1..=len {
            deficits[i] = deficits[i - 1] + p[i - 1];
        }
        tails[0] = 1.0;
        let mut lf = LevelFractions { n, tails, deficits };
        lf.trim();
        lf
    }

    fn trim(&mut self) {
        while self.tails.len() > 1 && self.tails[self.tails.len() - 1] <= 0.0 && self.tails[self.tails.len() - 2] <= 0.0 {
            self.tails.pop();
            self.deficits.pop();
        }
    }
}

impl Occupancy for LevelFractions {
    fn n(&self) -> f64 {
        self.n
    }
    fn tail(&self, i: usize) -> f64 {
        self.tails.get(i).copied().unwrap_or(0.0)
    }
    fn deficit(&self, i: usize) -> f64 {
        self.deficits.get(i).copied().unwrap_or(1.0)
    }
    fn max_len(&self) -> usize {
        (0..self.tails.len()).rev().find(|&i| self.tails[i] > 0.0).unwrap_or(0)
    }
}
