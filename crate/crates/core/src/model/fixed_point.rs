use crate::error::{Error, Result};
use crate::params::Params;
use serde::Serialize;

/// The mean-field fixed point π(j) = λ^{1+d+…+d^{j−1}}, kept in log space,
/// together with the linearised deficits 1 − ũ_i.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPoint {
    pub lambda: f64,
    pub d: u64,
    /// `log_pi[j-1]` = ln π(j). May be −∞ when the exponent overflows.
    pub log_pi: Vec<f64>,
    /// ln(−ln π(j)), always finite.
    pub log_neg_log_pi: Vec<f64>,
    /// `tilde_u_deficit[i-1]` = (1−λ)(1 + λd + … + (λd)^{i−1}).
    pub tilde_u_deficit: Vec<f64>,
}

/// π(j) after exponentiation; `underflow` marks a value that rounded to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PiValue {
    pub value: f64,
    pub underflow: bool,
}

pub fn fixed_point(params: &Params, j_max: usize) -> Result<FixedPoint> {
    FixedPoint::new(params.lambda, params.d, j_max)
}

impl FixedPoint {
    pub fn new(lambda: f64, d: u64, j_max: usize) -> Result<Self> {
        if j_max == 0 {
            return Err(Error::Domain("J_max must be at least 1".into()));
        }
        if !(lambda > 0.0 && lambda < 1.0) || d == 0 {
            return Err(Error::Domain(format!("need 0 < λ < 1 and d ≥ 1 (λ = {lambda}, d = {d})")));
        }
        let ln_lambda = (-(1.0 - lambda)).ln_1p();
        let df = d as f64;
        let mut log_pi = Vec::with_capacity(j_max);
        let mut log_neg = Vec::with_capacity(j_max);
        let mut tilde = Vec::with_capacity(j_max);
        let mut exponent = Neumaier::default();
        let mut power = 1.0f64;
        let ld = lambda * df;
        let mut geo = Neumaier::default();
        let mut ld_power = 1.0f64;
        for j in 1..=j_max {
            exponent.add(power);
            power *= df;
            log_pi.push(exponent.sum() * ln_lambda);
            let ln_s = if d == 1 {
                (j as f64).ln()
            } else {
                // ln((d^j − 1)/(d − 1))
                j as f64 * df.ln() + (-(df.powi(-(j as i32)))).ln_1p() - (df - 1.0).ln()
            };
            log_neg.push(ln_s + (-ln_lambda).ln());
            geo.add(ld_power);
            ld_power *= ld;
            tilde.push((1.0 - lambda) * geo.sum());
        }
        Ok(FixedPoint { lambda, d, log_pi, log_neg_log_pi: log_neg, tilde_u_deficit: tilde })
    }

    pub fn j_max(&self) -> usize {
        self.log_pi.len()
    }

    /// π(j) for 1 ≤ j ≤ J_max; π(0) = 1.
    pub fn pi(&self, j: usize) -> PiValue {
        if j == 0 {
            return PiValue { value: 1.0, underflow: false };
        }
        let lp = self.log_pi[j - 1];
        let value = lp.exp();
        PiValue { value, underflow: value == 0.0 }
    }

    /// û_i, an alias of π(i).
    pub fn hat_u(&self, i: usize) -> PiValue {
        self.pi(i)
    }

    /// Largest j with π(j) > 1/n: the predicted equilibrium maximum queue
    /// length of the general hypothesis (a conjecture; not asserted anywhere).
    pub fn predicted_k(&self, n: f64) -> usize {
        let threshold = -n.ln();
        self.log_pi.iter().take_while(|&&lp| lp > threshold).count()
    }
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if !t.is_finite() {
            self.sum = t;
            self.comp = 0.0;
            return;
        }
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for Neumaier {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Neumaier::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decimal::{dec, one, powi, to_f64};

    #[test]
    fn one_choice_is_geometric() {
        let fp = FixedPoint::new(0.8, 1, 10).unwrap();
        for j in 1..=10 {
            let want = 0.8f64.powi(j as i32);
            assert!((fp.pi(j).value - want).abs() < 1e-14 * want.max(1e-300));
        }
    }

    #[test]
    fn matches_high_precision_oracle() {
        // exponents 51 and 2551 evaluated in 100-digit arithmetic
        let fp = FixedPoint::new(0.999, 50, 3).unwrap();
        let lam = dec(0.999);
        for (j, e) in [(2usize, 51u32), (3, 2551)] {
            let want = to_f64(&powi(&lam, e).ln());
            let got = fp.log_pi[j - 1];
            assert!(((got - want) / want).abs() < 1e-12, "j={j} got {got} want {want}");
        }
        assert!((fp.pi(2).value - 0.950_254_422_568_834).abs() < 1e-12);
        assert!((fp.pi(3).value - 0.077_904_126_872_236).abs() < 1e-12);
        assert!((fp.pi(3).value - 0.0779).abs() < 5e-5);
        let _ = one();
    }

    #[test]
    fn overflow_never_nan() {
        let fp = FixedPoint::new(0.5, 10_000_000, 60).unwrap();
        for j in 1..=60 {
            assert!(!fp.log_pi[j - 1].is_nan());
            assert!(fp.log_neg_log_pi[j - 1].is_finite());
            assert!(!fp.tilde_u_deficit[j - 1].is_nan());
        }
        assert!(fp.pi(60).underflow);
        assert!(!fp.pi(1).underflow);
    }

    #[test]
    fn log_neg_log_consistent() {
        let fp = FixedPoint::new(0.9, 3, 8).unwrap();
        for j in 1..=8 {
            let a = (-fp.log_pi[j - 1]).ln();
            assert!((a - fp.log_neg_log_pi[j - 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn linearised_deficits() {
        let fp = FixedPoint::new(0.99, 30, 3).unwrap();
        let ld = 0.99 * 30.0;
        assert!((fp.tilde_u_deficit[0] - 0.01).abs() < 1e-16);
        assert!((fp.tilde_u_deficit[2] - 0.01 * (1.0 + ld + ld * ld)).abs() < 1e-12);
    }

    #[test]
    fn predicted_k_helper() {
        let fp = FixedPoint::new(0.999, 50, 10).unwrap();
        // π(3) ≈ 0.078 > 1e-5, π(4) = λ^{127551} ≈ 3e-56
        assert_eq!(fp.predicted_k(1e5), 3);
        assert_eq!(fp.predicted_k(1.0), 0);
    }
}
