use crate::decimal::{dec, int, one};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// The model tuple (n, d, λ, ε, k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: u128,
    pub d: u64,
    pub lambda: f64,
    pub epsilon: f64,
    pub k: u32,
    /// True when `k` was computed by [`k_of`] rather than supplied.
    pub k_defaulted: bool,
}

impl Params {
    /// Builds parameters with `k = k_of(λ, d)`. Requires `d ≥ 2`; for `d = 1`
    /// use [`Params::with_k`].
    pub fn new(n: u128, d: u64, lambda: f64, epsilon: f64) -> Result<Self> {
        validate(n, d, lambda, epsilon)?;
        if d < 2 {
            return Err(Error::Config(
                "k cannot be defaulted when d = 1; supply k explicitly".into(),
            ));
        }
        let k = k_of(lambda, d)?;
        Ok(Params { n, d, lambda, epsilon, k, k_defaulted: true })
    }

    pub fn with_k(n: u128, d: u64, lambda: f64, epsilon: f64, k: u32) -> Result<Self> {
        validate(n, d, lambda, epsilon)?;
        if k == 0 {
            return Err(Error::Domain("k must be positive".into()));
        }
        Ok(Params { n, d, lambda, epsilon, k, k_defaulted: false })
    }

    pub fn lambda_d(&self) -> f64 {
        self.lambda * self.d as f64
    }

    /// 1 − λ. Exact in binary for λ ≥ 1/2.
    pub fn gap(&self) -> f64 {
        1.0 - self.lambda
    }

    pub fn n_f64(&self) -> f64 {
        self.n as f64
    }

    /// Number of queues as a machine index; fails for symbolic sizes.
    pub fn n_usize(&self) -> Result<usize> {
        usize::try_from(self.n)
            .ok()
            .filter(|&n| n <= u32::MAX as usize)
            .ok_or_else(|| Error::Config(format!("n = {} is too large to simulate", self.n)))
    }

    /// Same parameters with a different tolerance.
    pub fn at_epsilon(&self, epsilon: f64) -> Self {
        Params { epsilon, ..self.clone() }
    }

    /// Scale n(1−λ)(λd)^{j−1} that appears throughout the set ledger.
    pub fn level_scale(&self, j: u32) -> f64 {
        self.n_f64() * self.gap() * self.lambda_d().powi(j as i32 - 1)
    }
}

fn validate(n: u128, d: u64, lambda: f64, epsilon: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if d == 0 {
        return Err(Error::Domain("d must be at least 1".into()));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain(format!("lambda = {lambda} is not in (0,1)")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon = {epsilon} is not in (0,1)")));
    }
    Ok(())
}

/// ⌈ln(1/(1−λ)) / ln d⌉ with a minimum of 1, evaluated exactly as the least
/// k ≥ 1 with d^k(1−λ) ≥ 1.
pub fn k_of(lambda: f64, d: u64) -> Result<u32> {
    Ok(k_of_detail(lambda, d)?.0)
}

/// Returns `(k, boundary)` where `boundary` flags d^k(1−λ) = 1 exactly, the
/// transitional case where the log ratio is an integer.
pub fn k_of_detail(lambda: f64, d: u64) -> Result<(u32, bool)> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain(format!("lambda = {lambda} is not in (0,1)")));
    }
    if d < 2 {
        return Err(Error::Domain(format!("d = {d} must be at least 2")));
    }
    let gap = &one() - &dec(lambda);
    let base = int(d as u128);
    let mut power = base.clone();
    let mut k = 1u32;
    loop {
        let prod = &power * &gap;
        if prod >= one() {
            return Ok((k, prod == one()));
        }
        k += 1;
        power = &power * &base;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_of_examples() {
        // (1−λ)^{-1} = 1000, d = 16: ln 1000 / ln 16 = 2.49...
        assert_eq!(k_of(0.999, 16).unwrap(), 3);
        // ratio exactly one
        assert_eq!(k_of_detail(0.9, 10).unwrap(), (1, true));
        // λ = 1 − n^{-α}, d = n^β with n = 10, α = 5, β = 2
        assert_eq!(k_of(1.0 - 1e-5, 100).unwrap(), 3);
        assert_eq!(k_of(0.999, 50).unwrap(), 2);
        assert_eq!(k_of(0.99, 30).unwrap(), 2);
        assert_eq!(k_of(0.5, 1000).unwrap(), 1);
    }

    #[test]
    fn k_of_matches_defining_inequality() {
        for &(lam, d) in &[(0.9, 5u64), (0.99, 7), (0.999, 3), (0.75, 2), (0.9999, 40)] {
            let k = k_of(lam, d).unwrap() as i32;
            let g = 1.0 - lam;
            assert!((d as f64).powi(k - 1) * g < 1.0);
            assert!((d as f64).powi(k) * g >= 1.0);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(k_of(1.0, 5).is_err());
        assert!(k_of(0.5, 1).is_err());
        assert!(Params::new(10, 1, 0.5, 0.1).is_err());
        assert!(Params::with_k(10, 1, 0.5, 0.1, 1).is_ok());
        assert!(Params::new(10, 3, 0.5, 1.0).is_err());
        assert!(Params::new(0, 3, 0.5, 0.5).is_err());
    }
}
