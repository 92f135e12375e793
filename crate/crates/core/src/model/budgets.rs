use crate::error::{Error, Result};
use crate::params::Params;
use serde::Serialize;

/// Step budgets of the hitting-time argument for a given (ℓ, g).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Budgets {
    pub ell: f64,
    pub g: f64,
    pub epsilon: f64,
    /// s₀ = e^{(1/3)log² n}; infinite when it overflows, see `ln_s0`.
    pub s0: f64,
    pub ln_s0: f64,
    pub q: f64,
    pub m_b: f64,
    pub m_c: f64,
    pub m_d: f64,
    pub m_e: f64,
    pub m_g: f64,
    pub m_h: f64,
    pub ell_star: f64,
    pub g_star: f64,
    /// 1600·k·d^{k−1}·n and 3200·k·d^{k−1}·n.
    pub mixing_rate_denominators: [f64; 2],
}

pub fn budgets(params: &Params, ell: f64, g: f64) -> Result<Budgets> {
    let k = params.k as f64;
    if ell < k || g < k {
        return Err(Error::Precondition(format!("need ℓ, g ≥ k = {k} (ℓ = {ell}, g = {g})")));
    }
    let n = params.n_f64();
    let eps = params.epsilon;
    let inv_gap = 1.0 / params.gap();
    let ld = params.lambda_d();
    let l2 = n.ln().powi(2);
    let base = n * inv_gap / eps;
    let dk1 = (params.d as f64).powi(params.k as i32 - 1);
    Ok(Budgets {
        ell,
        g,
        epsilon: eps,
        s0: (l2 / 3.0).exp(),
        ln_s0: l2 / 3.0,
        q: (23.0 * k + 72.0 * g) * base + 8.0 * ell * n,
        m_b: 8.0 * k * base,
        m_c: 12.0 * k * n * inv_gap * ld.powi(1 - params.k as i32),
        m_d: 8.0 * base * ld.powf(-(k / 2.0)),
        m_e: (13.0 * k + 72.0 * g) * base,
        m_g: 32.0 * k * base / ld,
        m_h: n * (8.0 * ell + 32.0 * l2),
        ell_star: l2 * inv_gap,
        g_star: 2.0 * inv_gap,
        mixing_rate_denominators: [1600.0 * k * dk1 * n, 3200.0 * k * dk1 * n],
    })
}

impl Budgets {
    pub fn stage_budgets(&self) -> [(&'static str, f64); 6] {
        [
            ("m_B", self.m_b),
            ("m_C", self.m_c),
            ("m_D", self.m_d),
            ("m_E", self.m_e),
            ("m_G", self.m_g),
            ("m_H", self.m_h),
        ]
    }

    /// Names of the stage budgets that exceed q(ℓ,g). Empty inside the
    /// heavy-traffic regime; may be non-empty at desk scale.
    pub fn exceeding_q(&self) -> Vec<&'static str> {
        self.stage_budgets().into_iter().filter(|(_, m)| *m > self.q).map(|(s, _)| s).collect()
    }

    /// Default burn-in: q when finite and at most 10⁸, else 10·n/(1−λ).
    pub fn burn_in(&self, params: &Params) -> u64 {
        if self.q.is_finite() && self.q <= 1e8 {
            self.q.ceil() as u64
        } else {
            (10.0 * params.n_f64() / params.gap()).min(u64::MAX as f64) as u64
        }
    }
}

/// The mixing-time instantiation: ε = 1/60, ℓ = max(k, ‖x‖∞), g = max(k, ‖x‖₁/n).
/// Returns the budgets and the closed-form ceiling
/// (6000kn + 4320‖x‖₁)(1−λ)^{−1} + 8n‖x‖∞ that q never exceeds.
pub fn mixing_budgets(params: &Params, norm1: f64, norm_inf: f64) -> Result<(Budgets, f64)> {
    let k = params.k as f64;
    let n = params.n_f64();
    let p = params.at_epsilon(1.0 / 60.0);
    let b = budgets(&p, k.max(norm_inf), k.max(norm1 / n))?;
    let ceiling = (6000.0 * k * n + 4320.0 * norm1) / params.gap() + 8.0 * n * norm_inf;
    Ok((b, ceiling))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_example() {
        let p = Params::with_k(10_000, 30, 0.99, 0.1, 2).unwrap();
        let b = budgets(&p, 2.0, 2.0).unwrap();
        let want = 190.0 * 10.0 * 1e4 * 100.0 + 16.0 * 1e4;
        assert!((b.q - want).abs() / want < 1e-12);
        assert!(b.exceeding_q().is_empty());
        assert!(budgets(&p, 1.0, 2.0).is_err());
    }

    #[test]
    fn linear_in_g() {
        let p = Params::with_k(5_000, 20, 0.95, 0.05, 2).unwrap();
        let a = budgets(&p, 3.0, 3.0).unwrap();
        let b = budgets(&p, 3.0, 6.0).unwrap();
        let want = 72.0 * 3.0 / 0.05 * 5_000.0 / (1.0 - 0.95);
        assert!(((b.q - a.q) - want).abs() / want < 1e-12);
    }

    #[test]
    fn mixing_ceiling_dominates() {
        let p = Params::with_k(1_000, 10, 0.9, 0.1, 2).unwrap();
        for &(m1, minf) in &[(0.0, 0.0), (500.0, 3.0), (1e5, 400.0), (2000.0, 2.0)] {
            let (b, ceil) = mixing_budgets(&p, m1, minf).unwrap();
            assert!(b.q <= ceil, "{} > {}", b.q, ceil);
        }
    }
}
