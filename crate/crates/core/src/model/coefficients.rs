use crate::error::{Error, Result};
use crate::params::Params;
use serde::Serialize;
use std::f64::consts::PI;

/// β_i and γ_{j,i} weights of the deficit functionals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientTable {
    pub k: u32,
    pub lambda_d: f64,
    /// β_1..β_k.
    pub beta: Vec<f64>,
    /// `gamma[j-1][i-1]` = γ_{j,i} for 1 ≤ i ≤ j ≤ k−1.
    pub gamma: Vec<Vec<f64>>,
}

pub fn coefficients(params: &Params) -> Result<CoefficientTable> {
    CoefficientTable::new(params.lambda_d(), params.k)
}

impl CoefficientTable {
    pub fn new(lambda_d: f64, k: u32) -> Result<Self> {
        if lambda_d.is_nan() || lambda_d < 4.0 || k < 2 {
            return Err(Error::Config(format!(
                "coefficients need k ≥ 2 and λd ≥ 4 (got k = {k}, λd = {lambda_d})"
            )));
        }
        let beta = (1..=k).map(|i| beta(lambda_d, k, i)).collect();
        let gamma = (1..k)
            .map(|j| (1..=j).map(|i| gamma(lambda_d, j, i)).collect())
            .collect();
        Ok(CoefficientTable { k, lambda_d, beta, gamma })
    }

    /// β_i with β_0 = 0.
    pub fn beta(&self, i: u32) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.beta[i as usize - 1]
        }
    }

    /// γ_{j,i} for j < k, zero outside 1 ≤ i ≤ j.
    pub fn gamma(&self, j: u32, i: u32) -> f64 {
        if i == 0 || i > j {
            0.0
        } else {
            self.gamma[j as usize - 1][i as usize - 1]
        }
    }

    /// Weights w_1..w_j of Q_j: γ_{j,·} for j < k and β for j = k.
    pub fn weights(&self, j: u32) -> &[f64] {
        assert!(j >= 1 && j <= self.k, "functional index {j} outside 1..={}", self.k);
        if j == self.k {
            &self.beta
        } else {
            &self.gamma[j as usize - 1]
        }
    }
}

/// β_i = 1 − (λd)^{−i} − (i−1)(λd)^{−k}.
pub fn beta(lambda_d: f64, k: u32, i: u32) -> f64 {
    if i == 0 {
        return 0.0;
    }
    1.0 - lambda_d.powi(-(i as i32)) - (i as f64 - 1.0) * lambda_d.powi(-(k as i32))
}

/// γ_{j,i} = (λd)^{(j−i)/2} sin(iπ/(j+1)) / sin(jπ/(j+1)).
pub fn gamma(lambda_d: f64, j: u32, i: u32) -> f64 {
    if i == 0 || i > j {
        return 0.0;
    }
    if i == j {
        return 1.0;
    }
    let m = j + 1;
    lambda_d.sqrt().powi((j - i) as i32) * sin_frac(i, m) / sin_frac(j, m)
}

// sin(iπ/m) evaluated at the smaller of the two symmetric angles.
fn sin_frac(i: u32, m: u32) -> f64 {
    let r = i.min(m - i);
    (PI * r as f64 / m as f64).sin()
}

/// Largest relative residual of λd·γ_{j,i+1} + γ_{j,i−1} = 2√(λd)cos(π/(j+1))γ_{j,i}
/// over 1 ≤ i ≤ j−1.
pub fn eigen_residual(lambda_d: f64, j: u32) -> f64 {
    let c = 2.0 * lambda_d.sqrt() * (PI / (j + 1) as f64).cos();
    (1..j)
        .map(|i| {
            let g = gamma(lambda_d, j, i);
            let lhs = lambda_d * gamma(lambda_d, j, i + 1) + gamma(lambda_d, j, i - 1);
            (lhs - c * g).abs() / g
        })
        .fold(0.0, f64::max)
}
