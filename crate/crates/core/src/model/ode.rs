//! Mean-field ODE dv_j/dt = λ(v_{j−1}^d − v_j^d) − (v_j − v_{j+1}), v_0 = 1.

use crate::error::{Error, Result};
use crate::params::Params;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OdeScheme {
    Euler,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeConfig {
    pub scheme: OdeScheme,
    pub dt: f64,
    /// Truncation level J; v_{J+1} is treated as 0.
    pub truncation: usize,
}

impl Default for OdeConfig {
    fn default() -> Self {
        OdeConfig { scheme: OdeScheme::Rk4, dt: 1e-3, truncation: 50 }
    }
}

/// Right-hand side for v = (v_1, …, v_J).
pub fn ode_derivative(v: &[f64], lambda: f64, d: u64) -> Vec<f64> {
    let df = d as f64;
    let pow: Vec<f64> = v.iter().map(|&x| x.max(0.0).powf(df)).collect();
    (0..v.len())
        .map(|j| {
            let prev = if j == 0 { 1.0 } else { pow[j - 1] };
            let next = v.get(j + 1).copied().unwrap_or(0.0);
            lambda * (prev - pow[j]) - (v[j] - next)
        })
        .collect()
}

pub fn ode_step(v: &[f64], dt: f64, params: &Params, scheme: OdeScheme) -> Result<Vec<f64>> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::Domain(format!("dt = {dt} must be positive")));
    }
    let (lam, d) = (params.lambda, params.d);
    let f = |x: &[f64]| ode_derivative(x, lam, d);
    let axpy = |x: &[f64], a: f64, y: &[f64]| -> Vec<f64> {
        x.iter().zip(y).map(|(xi, yi)| xi + a * yi).collect()
    };
    let mut out = match scheme {
        OdeScheme::Euler => axpy(v, dt, &f(v)),
        OdeScheme::Rk4 => {
            let k1 = f(v);
            let k2 = f(&axpy(v, dt / 2.0, &k1));
            let k3 = f(&axpy(v, dt / 2.0, &k2));
            let k4 = f(&axpy(v, dt, &k3));
            (0..v.len())
                .map(|j| v[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]))
                .collect()
        }
    };
    let mut cap = 1.0f64;
    for x in out.iter_mut() {
        *x = x.clamp(0.0, cap);
        cap = *x;
    }
    Ok(out)
}

/// Integrates from `v0` over `[0, t_end]`.
pub fn integrate(v0: &[f64], t_end: f64, params: &Params, config: &OdeConfig) -> Result<Vec<f64>> {
    let mut v = v0.to_vec();
    v.resize(config.truncation, 0.0);
    let steps = (t_end / config.dt).round() as u64;
    for _ in 0..steps {
        v = ode_step(&v, config.dt, params, config.scheme)?;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixed_point::FixedPoint;

    #[test]
    fn fixed_point_is_stationary() {
        let fp = FixedPoint::new(0.9, 2, 50).unwrap();
        let v: Vec<f64> = (1..=50).map(|j| fp.pi(j).value).collect();
        let dv = ode_derivative(&v, 0.9, 2);
        assert!(dv.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn empty_start() {
        let dv = ode_derivative(&[0.0; 10], 0.7, 3);
        assert!((dv[0] - 0.7).abs() < 1e-15);
        assert!(dv[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn geometric_stationary_for_one_choice() {
        let v: Vec<f64> = (1..=50).map(|j| 0.5f64.powi(j)).collect();
        let dv = ode_derivative(&v, 0.5, 1);
        assert!(dv.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn step_stays_monotone_and_converges() {
        let p = Params::new(100, 2, 0.9, 0.1).unwrap();
        assert!(ode_step(&[0.0; 4], 0.0, &p, OdeScheme::Rk4).is_err());
        let cfg = OdeConfig { truncation: 30, ..OdeConfig::default() };
        let v = integrate(&[], 80.0, &p, &cfg).unwrap();
        assert!(v.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        let fp = FixedPoint::new(0.9, 2, 5).unwrap();
        for j in 1..=5 {
            assert!((v[j - 1] - fp.pi(j).value).abs() < 1e-3);
        }
        let e = integrate(&[], 5.0, &p, &OdeConfig { scheme: OdeScheme::Euler, ..cfg }).unwrap();
        assert!(e.windows(2).all(|w| w[1] <= w[0]));
    }
}
