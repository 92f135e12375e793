//! The heavy-traffic hypotheses and their consequences, evaluated in
//! 100-digit decimal arithmetic.

use crate::decimal::{dec, int, one, parse, powi, show};
use crate::params::{k_of_detail, Params};
use dashu_float::DBig;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub name: &'static str,
    pub formula: &'static str,
    pub lhs: String,
    pub rhs: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    /// The eight hypothesis comparisons (two domain checks and six inequalities).
    pub hypotheses: Vec<Comparison>,
    /// Consequences that must hold whenever every hypothesis does.
    pub derived: Vec<Comparison>,
    pub overall: bool,
    /// d^k(1−λ) = 1 exactly for k = k_of(λ,d): the transitional range.
    pub transitional: bool,
}

impl RegimeReport {
    pub fn failing_hypotheses(&self) -> Vec<&'static str> {
        self.hypotheses.iter().filter(|c| !c.holds).map(|c| c.name).collect()
    }

    pub fn failing_derived(&self) -> Vec<&'static str> {
        self.derived.iter().filter(|c| !c.holds).map(|c| c.name).collect()
    }

    /// Short reasons for an unsatisfied regime. Below n = 10¹⁵ no tuple can
    /// satisfy the hypotheses, so that reason is listed first.
    pub fn diagnosis(&self) -> Vec<&'static str> {
        if self.overall {
            return Vec::new();
        }
        let mut out = Vec::new();
        if self.derived.iter().any(|c| c.name == "n-threshold" && !c.holds) {
            out.push("n-threshold");
        }
        out.extend(self.failing_hypotheses());
        out
    }

    pub fn get(&self, name: &str) -> Option<&Comparison> {
        self.hypotheses.iter().chain(&self.derived).find(|c| c.name == name)
    }
}

#[derive(Clone, Copy)]
enum Rel {
    Ge,
    Le,
    Eq,
}

fn cmp(name: &'static str, formula: &'static str, lhs: DBig, rel: Rel, rhs: DBig) -> Comparison {
    let holds = match rel {
        Rel::Ge => lhs >= rhs,
        Rel::Le => lhs <= rhs,
        Rel::Eq => lhs == rhs,
    };
    Comparison { name, formula, lhs: show(&lhs), rhs: show(&rhs), holds }
}

fn ipow(x: &DBig, e: i64) -> DBig {
    if e >= 0 {
        powi(x, e as u32)
    } else {
        &one() / &powi(x, (-e) as u32)
    }
}

pub fn regime_check(params: &Params) -> RegimeReport {
    let n = int(params.n);
    let d = int(params.d as u128);
    let lam = dec(params.lambda);
    let eps = dec(params.epsilon);
    let k = params.k as i64;
    let kd = int(params.k as u128);
    let gap = &one() - &lam;
    let ln_n = n.ln();
    let l2 = &ln_n * &ln_n;
    let zero = int(0);
    let c = |x: u128| int(x);

    let dk = ipow(&d, k);
    let dk1 = ipow(&d, k - 1);
    let dk2 = ipow(&d, k - 2);

    let hypotheses = vec![
        Comparison {
            name: "lambda-range",
            formula: "0 < λ < 1",
            lhs: show(&lam),
            rhs: "(0,1)".into(),
            holds: lam > zero && lam < one(),
        },
        Comparison {
            name: "epsilon-range",
            formula: "0 < ε < 1",
            lhs: show(&eps),
            rhs: "(0,1)".into(),
            holds: eps > zero && eps < one(),
        },
        cmp("depth", "d^k(1−λ) ≥ 2 log² n", &dk * &gap, Rel::Ge, &c(2) * &l2),
        cmp("k-at-least-2", "k ≥ 2", kd.clone(), Rel::Ge, c(2)),
        cmp("epsilon-small", "ε ≤ 1/10", eps.clone(), Rel::Le, parse("0.1")),
        cmp("epsilon-sqrt-d", "ε√d ≥ 150k", &eps * &d.sqrt(), Rel::Ge, &c(150) * &kd),
        cmp(
            "epsilon-gap",
            "ε ≥ 100k(1−λ)d^{k−1}",
            eps.clone(),
            Rel::Ge,
            &(&(&c(100) * &kd) * &gap) * &dk1,
        ),
        cmp(
            "variance",
            "ε²dn(1−λ)² ≥ 600k² log² n",
            &(&(&(&eps * &eps) * &d) * &n) * &(&gap * &gap),
            Rel::Ge,
            &(&c(600) * &(&kd * &kd)) * &l2,
        ),
    ];
    let overall = hypotheses.iter().all(|c| c.holds);

    let (k_ceiling, transitional) = match k_of_detail(params.lambda, params.d) {
        Ok((kc, b)) => (int(kc as u128), b),
        Err(_) => (int(0), false),
    };
    let lam_d = &lam * &d;
    let sqrt_ld = lam_d.sqrt();
    let (sum_i, sum_half) = if lam_d > one() {
        (&one() / &(&lam_d - &one()), &one() / &(&sqrt_ld - &one()))
    } else {
        let big = parse("1e300");
        (big.clone(), big)
    };
    let k3 = powi(&kd, 3);
    let derived = vec![
        cmp("n-threshold", "n ≥ 10^15", n.clone(), Rel::Ge, parse("1e15")),
        cmp("epsilon-d", "εd ≥ 200k log² n", &eps * &d, Rel::Ge, &(&c(200) * &kd) * &l2),
        cmp(
            "gap-small",
            "log² n (1−λ) ≤ ε²/80000",
            &l2 * &gap,
            Rel::Le,
            &(&eps * &eps) / &c(80000),
        ),
        cmp("k-ceiling", "k = ⌈log(1−λ)^{−1}/log d⌉", kd.clone(), Rel::Eq, k_ceiling),
        cmp(
            "cubic",
            "ε³n(1−λ) ≥ 60000k³ log² n d^{k−2}",
            &(&powi(&eps, 3) * &n) * &gap,
            Rel::Ge,
            &(&(&c(60000) * &k3) * &l2) * &dk2,
        ),
        cmp("linear", "εn(1−λ) ≥ 60000", &(&eps * &n) * &gap, Rel::Ge, c(60000)),
        cmp("k-log-n", "k ≤ log n", kd.clone(), Rel::Le, ln_n.clone()),
        cmp(
            "depth-k",
            "d^k(1−λ) ≥ 2k log n",
            &dk * &gap,
            Rel::Ge,
            &(&c(2) * &kd) * &ln_n,
        ),
        cmp("lambda-power", "λ^k ≥ 9/10", ipow(&lam, k), Rel::Ge, parse("0.9")),
        cmp(
            "beta-k",
            "β_k = 1 − k/(λd)^k ≥ 1 − ε/2",
            &one() - &(&kd / &ipow(&lam_d, k)),
            Rel::Ge,
            &one() - &(&eps / &c(2)),
        ),
        cmp(
            "tail-sums-order",
            "Σ (λd)^{−i} ≤ Σ (λd)^{−i/2}",
            sum_i,
            Rel::Le,
            sum_half.clone(),
        ),
        cmp("tail-sums", "Σ (λd)^{−i/2} ≤ ε/(2k)", sum_half, Rel::Le, &eps / &(&c(2) * &kd)),
    ];
    RegimeReport { hypotheses, derived, overall, transitional }
}

/// Numeric value of a reported side, for plotting or ratios.
pub fn side_value(s: &str) -> f64 {
    s.parse::<f64>().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> Params {
        Params::with_k(10u128.pow(24), 20_000_000, 1.0 - 2.5e-11, 0.1, 2).unwrap()
    }

    #[test]
    fn fixture_tuple_satisfies_everything() {
        let r = regime_check(&fixture());
        assert_eq!(r.hypotheses.len(), 8);
        assert!(r.overall, "{:?}", r.failing_hypotheses());
        assert!(r.failing_derived().is_empty(), "{:?}", r.failing_derived());
        // the gap inequality is met with equality: 100·2·2.5e-11·2e7 = 0.1
        let g = r.get("epsilon-gap").unwrap();
        assert!(g.holds);
        assert_eq!(g.lhs, g.rhs);
    }

    #[test]
    fn small_n_fails_with_threshold_reason() {
        let p = Params::new(1_000_000, 2_000, 0.999, 0.1).unwrap();
        let r = regime_check(&p);
        assert!(!r.overall);
        assert_eq!(r.diagnosis()[0], "n-threshold");
    }

    #[test]
    fn large_epsilon_fails_small_epsilon_check() {
        let p = fixture().at_epsilon(0.2);
        let r = regime_check(&p);
        assert!(!r.get("epsilon-small").unwrap().holds);
        assert!(!r.overall);
    }

    #[test]
    fn transitional_flag() {
        let p = Params::new(100, 10, 0.9, 0.1).unwrap();
        assert!(regime_check(&p).transitional);
    }
}
