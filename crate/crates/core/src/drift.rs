//! Exact one-step drifts of u_i, Q_j, P_{k−1} and ‖x‖₁, and mechanical
//! checks of the drift inequalities against them.

use crate::decimal::{dec, int, one, powi, to_f64};
use crate::error::{Error, Result};
use dashu_float::DBig;
use crate::model::fixed_point::Neumaier;
use crate::model::{q_over_n, p_over_n, regime_check, CoefficientTable, Occupancy, SetId, SetLedger};
use crate::params::Params;
use crate::profile::{Profile, ProfileChain};
use crate::rng::{seeded, SimRng};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Floating slack allowed when comparing an exact drift with a bound.
pub const SLACK: f64 = 1e-9;

/// 1 − u_i^d, accurate when u_i is close to 1.
fn one_minus_pow<X: Occupancy + ?Sized>(x: &X, i: usize, d: u64) -> f64 {
    if i == 0 {
        return 0.0;
    }
    if x.tail(i) == 0.0 {
        return 1.0;
    }
    -(d as f64 * x.ln_tail(i)).exp_m1()
}

/// Δu_i(x): expected one-step change of u_i, i ≥ 1.
pub fn exact_drift_u<X: Occupancy + ?Sized>(x: &X, i: usize, lambda: f64, d: u64) -> f64 {
    assert!(i >= 1, "u_0 is constant");
    let arrive = one_minus_pow(x, i, d) - one_minus_pow(x, i - 1, d);
    (lambda * arrive - x.level(i)) / (x.n() * (1.0 + lambda))
}

/// (1+λ)ΔF for F = n Σ_{i=1}^{m} w_i (1 − u_i), with w = (w_1..w_m).
///
/// Uses the deficit form
/// λ Σ (w_{i+1} − w_i)(1 − u_i^d) + Σ (w_{i−1} − w_i)(1 − u_i) + w_m (1 − u_{m+1}),
/// with w_0 = w_{m+1} = 0, which avoids cancelling quantities near 1.
pub fn scaled_drift_weighted<X: Occupancy + ?Sized>(x: &X, w: &[f64], lambda: f64, d: u64) -> f64 {
    let m = w.len();
    let wi = |i: usize| if i == 0 || i > m { 0.0 } else { w[i - 1] };
    let mut s = Neumaier::default();
    for i in 1..=m {
        s.add(lambda * (wi(i + 1) - wi(i)) * one_minus_pow(x, i, d));
        s.add((wi(i - 1) - wi(i)) * x.deficit(i));
    }
    if m > 0 {
        s.add(wi(m) * x.deficit(m + 1));
    }
    s.sum()
}

/// ΔQ_j(x), 1 ≤ j ≤ k.
pub fn exact_drift_q<X: Occupancy + ?Sized>(x: &X, j: u32, table: &CoefficientTable, lambda: f64, d: u64) -> f64 {
    scaled_drift_weighted(x, table.weights(j), lambda, d) / (1.0 + lambda)
}

/// ΔP_{k−1}(x).
pub fn exact_drift_p<X: Occupancy + ?Sized>(x: &X, k: u32, lambda: f64, d: u64) -> f64 {
    let w = vec![1.0; k as usize - 1];
    scaled_drift_weighted(x, &w, lambda, d) / (1.0 + lambda)
}

/// Δ‖x‖₁ = (λ − u_1)/(1+λ).
pub fn exact_drift_mass<X: Occupancy + ?Sized>(x: &X, lambda: f64) -> f64 {
    (lambda - x.tail(1)) / (1.0 + lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Holds,
    /// Violated by no more than [`SLACK`].
    WithinSlack,
    Violated,
}

/// One drift value against a pair of bounds. All three are (1+λ)·ΔF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub state_id: String,
    pub functional: String,
    pub exact: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    /// exact − lower.
    pub slack_low: Option<f64>,
    /// upper − exact.
    pub slack_high: Option<f64>,
    pub verdict: Verdict,
}

impl DriftReport {
    fn new(functional: String, exact: f64, lower: Option<f64>, upper: Option<f64>) -> Self {
        let slack_low = lower.map(|l| exact - l);
        let slack_high = upper.map(|u| u - exact);
        let worst = slack_low.into_iter().chain(slack_high).fold(f64::INFINITY, f64::min);
        let verdict = if worst >= 0.0 {
            Verdict::Holds
        } else if worst >= -SLACK {
            Verdict::WithinSlack
        } else {
            Verdict::Violated
        };
        DriftReport { state_id: String::new(), functional, exact, lower, upper, slack_low, slack_high, verdict }
    }

    pub fn satisfied(&self) -> bool {
        self.verdict != Verdict::Violated
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.state_id = id.into();
        self
    }
}

pub fn write_reports_csv<W: std::io::Write>(reports: &[DriftReport], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::Config(e.to_string());
    wr.write_record(["state-id", "functional", "exact", "lower", "upper", "slack-low", "slack-high", "verdict"])
        .map_err(err)?;
    let opt = |v: Option<f64>| v.map(|v| format!("{v:e}")).unwrap_or_default();
    for r in reports {
        wr.write_record([
            r.state_id.clone(),
            r.functional.clone(),
            format!("{:e}", r.exact),
            opt(r.lower),
            opt(r.upper),
            opt(r.slack_low),
            opt(r.slack_high),
            format!("{:?}", r.verdict),
        ])
        .map_err(err)?;
    }
    wr.flush().map_err(|e| Error::Config(e.to_string()))
}

/// Parameters and coefficient table shared by the bound checks. Needs k ≥ 2
/// and λd ≥ 4.
#[derive(Debug, Clone)]
pub struct DriftBounds {
    pub params: Params,
    pub table: CoefficientTable,
}

impl DriftBounds {
    pub fn new(params: &Params) -> Result<Self> {
        Ok(DriftBounds { params: params.clone(), table: CoefficientTable::new(params.lambda_d(), params.k)? })
    }

    fn scaled_q<X: Occupancy + ?Sized>(&self, x: &X, j: u32) -> f64 {
        scaled_drift_weighted(x, self.table.weights(j), self.params.lambda, self.params.d)
    }

    /// Both bounds on (1+λ)ΔQ_k valid for every state.
    pub fn qk<X: Occupancy + ?Sized>(&self, x: &X) -> DriftReport {
        let (k, lam, ld, d) = (self.params.k, self.params.lambda, self.params.lambda_d(), self.params.d as f64);
        let qk = q_over_n(x, k, &self.table);
        let qk1 = q_over_n(x, k - 1, &self.table);
        let bk = self.table.beta(k);
        let base = (1.0 - lam) - x.tail(k as usize + 1);
        let scale = ld.powi(-(k as i32 - 1));
        let upper = bk * (base + lam * (-d * qk / k as f64).exp()) - scale * qk * (1.0 - 2.0 / ld);
        let lower = bk * base - scale * qk - qk1 * qk1 * ld.powi(3 - k as i32);
        DriftReport::new("Q_k".into(), self.scaled_q(x, k), Some(lower), Some(upper))
    }

    /// Both bounds on (1+λ)ΔQ_j, 1 ≤ j ≤ k−1.
    pub fn qj<X: Occupancy + ?Sized>(&self, x: &X, j: u32) -> DriftReport {
        assert!(j >= 1 && j < self.params.k);
        let (k, ld, d) = (self.params.k, self.params.lambda_d(), self.params.d as f64);
        let qj = q_over_n(x, j, &self.table);
        let qnext = q_over_n(x, j + 1, &self.table);
        let p = p_over_n(x, k);
        let root = 2.0 / ld.sqrt();
        let upper = -ld * qj * (1.0 - root - d * p) + qnext;
        let lower = -ld * qj * (1.0 + root) + qnext;
        DriftReport::new(format!("Q_{j}"), self.scaled_q(x, j), Some(lower), Some(upper))
    }

    /// Upper bound on (1+λ)ΔP_{k−1}.
    pub fn pk1<X: Occupancy + ?Sized>(&self, x: &X) -> DriftReport {
        let (k, lam, d) = (self.params.k, self.params.lambda, self.params.d as f64);
        let p = p_over_n(x, k);
        let qk = q_over_n(x, k, &self.table);
        let upper = -lam * -(-d * p / (k as f64 - 1.0)).exp_m1() + qk;
        let w = vec![1.0; k as usize - 1];
        let exact = scaled_drift_weighted(x, &w, lam, self.params.d);
        DriftReport::new("P_{k-1}".into(), exact, None, Some(upper))
    }

    /// Every check for one state.
    pub fn all<X: Occupancy + ?Sized>(&self, x: &X) -> Vec<DriftReport> {
        let mut v = vec![self.qk(x)];
        v.extend((1..self.params.k).map(|j| self.qj(x, j)));
        v.push(self.pk1(x));
        v
    }
}

pub fn verify_qk_bounds<X: Occupancy + ?Sized>(x: &X, params: &Params) -> Result<DriftReport> {
    Ok(DriftBounds::new(params)?.qk(x))
}

pub fn verify_qj_bounds<X: Occupancy + ?Sized>(x: &X, j: u32, params: &Params) -> Result<DriftReport> {
    if j == 0 || j >= params.k {
        return Err(Error::Config(format!("j = {j} is outside 1..k-1")));
    }
    Ok(DriftBounds::new(params)?.qj(x, j))
}

pub fn verify_pk1_bound<X: Occupancy + ?Sized>(x: &X, params: &Params) -> Result<DriftReport> {
    Ok(DriftBounds::new(params)?.pk1(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum D1Mode {
    /// Requires the regime hypotheses and x ∈ 𝒟₁; refuses otherwise.
    Strict,
    /// Reports the intermediate inequalities and the bounds regardless.
    Audit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditLine {
    pub name: &'static str,
    pub formula: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct D1Report {
    pub mode: D1Mode,
    pub regime_holds: bool,
    pub in_d1: bool,
    pub bounds: Vec<DriftReport>,
    pub audit: Vec<AuditLine>,
}

/// The arithmetic steps that turn the general drift bounds into the
/// bounds on 𝒟₁. Verdicts are decided in decimal arithmetic, since several
/// of these are met with equality at the boundary of the regime.
pub fn d1_audit(params: &Params) -> Vec<AuditLine> {
    let k = int(params.k as u128);
    let eps = dec(params.epsilon);
    let lam = dec(params.lambda);
    let d = int(params.d as u128);
    let ld = &lam * &d;
    let gap = &one() - &lam;
    let km1 = params.k - 1;
    let c = |x: u128| int(x);
    fn line(name: &'static str, formula: &'static str, lhs: DBig, rhs: DBig) -> AuditLine {
        AuditLine { name, formula, lhs: to_f64(&lhs), rhs: to_f64(&rhs), holds: lhs <= rhs }
    }
    let two_ld = &(&c(2) * &(&one() + &(&c(2) * &eps))) / &ld;
    let eps_sq = &(&eps * &eps) / &(&c(7500) * &(&k * &k));
    let eps6 = &eps / &c(6);
    let eps50k = &eps / &(&c(50) * &k);
    let mut root = line(
        "root-ld",
        "2/√(λd) ≤ ε/(50k)",
        &c(4) / &ld,
        &eps50k * &eps50k,
    );
    root.lhs = 2.0 / params.lambda_d().sqrt();
    root.rhs = root.rhs.sqrt();
    vec![
        line("two-over-ld", "2(1+2ε)/(λd) ≤ 3/d", two_ld.clone(), &c(3) / &d),
        line("three-over-d", "3/d ≤ ε²/(7500k²)", &c(3) / &d, eps_sq.clone()),
        line("eps-square", "ε²/(7500k²) ≤ ε/6", eps_sq, eps6.clone()),
        line("qk-upper", "2(1+2ε)/(λd) ≤ ε/6", two_ld, eps6.clone()),
        line("five-eps", "(1+5ε)² ≤ 3", powi(&(&one() + &(&c(5) * &eps)), 2), c(3)),
        line("eps-gap", "18(1−λ)(λd)^{k−1} ≤ ε", &(&c(18) * &gap) * &powi(&ld, km1), eps.clone()),
        line(
            "qk-lower",
            "3(1−λ)²(λd)^{k−1} ≤ (ε/6)(1−λ)",
            &(&c(3) * &(&gap * &gap)) * &powi(&ld, km1),
            &eps6 * &gap,
        ),
        root,
        line("p-term", "2(1−λ)d^{k−1} ≤ ε/(50k)", &(&c(2) * &gap) * &powi(&d, km1), eps50k),
    ]
}

/// The drift bounds restricted to 𝒟₁.
///
/// Strict mode refuses unless the regime hypotheses hold, and requires
/// x ∈ 𝒟₁ under `ledger`'s (ℓ, g) at ε = params.epsilon.
pub fn verify_d1_bounds<X: Occupancy + ?Sized>(x: &X, ledger: &SetLedger, mode: D1Mode) -> Result<D1Report> {
    let params = &ledger.params;
    let regime = regime_check(params);
    let in_d1 = ledger.contains(x, SetId::D1, params.epsilon);
    if mode == D1Mode::Strict {
        if !regime.overall {
            return Err(Error::Refused(format!(
                "regime hypotheses fail ({}); use audit mode",
                regime.diagnosis().join(", ")
            )));
        }
        if !in_d1 {
            return Err(Error::Precondition("state is not in D_1".into()));
        }
    }
    let (k, lam, ld, d, eps) =
        (params.k, params.lambda, params.lambda_d(), params.d as f64, params.epsilon);
    let table = &ledger.table;
    let qk = q_over_n(x, k, table);
    let base = table.beta(k) * (1.0 - lam - x.tail(k as usize + 1)) - qk / ld.powi(k as i32 - 1);
    let exact_k = scaled_drift_weighted(x, table.weights(k), lam, params.d);
    let mut bounds = vec![DriftReport::new(
        "Q_k".into(),
        exact_k,
        Some(base - eps / 6.0 * (1.0 - lam)),
        Some(base + (-d * qk / k as f64).exp() + eps / 6.0 * (1.0 - lam)),
    )];
    for j in 1..k {
        let qj = q_over_n(x, j, table);
        let qn = q_over_n(x, j + 1, table);
        let kf = k as f64;
        bounds.push(DriftReport::new(
            format!("Q_{j}"),
            scaled_drift_weighted(x, table.weights(j), lam, params.d),
            Some(-ld * qj * (1.0 + eps / (50.0 * kf)) + qn),
            Some(-ld * qj * (1.0 - eps / (25.0 * kf)) + qn),
        ));
    }
    Ok(D1Report { mode, regime_holds: regime.overall, in_d1, bounds, audit: d1_audit(params) })
}

/// Which functional a Monte Carlo drift estimate tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Functional {
    U(usize),
    Q(u32),
    P,
    Mass,
}

fn evaluate(p: &Profile, f: Functional, table: Option<&CoefficientTable>) -> f64 {
    match f {
        Functional::U(i) => p.tail(i),
        Functional::Q(j) => p.n() * q_over_n(p, j, table.expect("Q needs a table")),
        Functional::P => p.n() * p_over_n(p, table.expect("P needs a table").k),
        Functional::Mass => p.total() as f64,
    }
}

/// Exact ΔF for a concrete profile.
pub fn exact_drift(p: &Profile, f: Functional, lambda: f64, d: u64, table: Option<&CoefficientTable>) -> f64 {
    match f {
        Functional::U(i) => exact_drift_u(p, i, lambda, d),
        Functional::Q(j) => exact_drift_q(p, j, table.expect("Q needs a table"), lambda, d),
        Functional::P => exact_drift_p(p, table.expect("P needs a table").k, lambda, d),
        Functional::Mass => exact_drift_mass(p, lambda),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
}

/// Mean one-step change of `f` over independent single steps from x.
pub fn montecarlo_drift(
    x: &Profile,
    f: Functional,
    lambda: f64,
    d: u64,
    table: Option<&CoefficientTable>,
    trials: u64,
    seed: u64,
) -> Result<DriftEstimate> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let f0 = evaluate(x, f, table);
    let mut rng = seeded(seed);
    let mut chain = ProfileChain::new(x.clone(), lambda, d, None)?;
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..trials {
        let outcome = chain.step(&mut rng);
        let delta = evaluate(chain.profile(), f, table) - f0;
        s += delta;
        s2 += delta * delta;
        chain.undo(outcome);
    }
    let m = trials as f64;
    let mean = s / m;
    let var = (s2 / m - mean * mean).max(0.0) * m / (m - 1.0).max(1.0);
    Ok(DriftEstimate { mean, stderr: (var / m).sqrt(), trials })
}

/// Seeded adversarial and random profiles with lengths at most `max_len`.
pub fn adversarial_states(n: u64, max_len: usize, random: usize, seed: u64) -> Vec<(String, Profile)> {
    let mut out = Vec::new();
    let from = |c: Vec<u64>| Profile::from_counts(&c).expect("non-empty");
    for len in 0..=max_len {
        let mut c = vec![0; len + 1];
        c[len] = n;
        out.push((format!("all-equal-{len}"), from(c)));
    }
    for top in 1..=max_len {
        let mut c = vec![n / (top as u64 + 1); top + 1];
        c[0] += n - c.iter().sum::<u64>();
        out.push((format!("staircase-{top}"), from(c)));
    }
    for base in 0..max_len {
        for long in base + 1..=max_len {
            let mut c = vec![0; long + 1];
            c[base] = n - 1;
            c[long] += 1;
            out.push((format!("one-long-{base}-{long}"), from(c)));
            let mut c = vec![0; long + 1];
            c[long] = n - 1;
            c[base] += 1;
            out.push((format!("one-short-{base}-{long}"), from(c)));
        }
    }
    let mut rng: SimRng = seeded(seed);
    for r in 0..random {
        // mixtures of uniform counts and near-balanced profiles
        let mut c = vec![0u64; max_len + 1];
        if r % 2 == 0 {
            for _ in 0..n {
                c[rng.random_range(0..=max_len)] += 1;
            }
        } else {
            let top = rng.random_range(1..=max_len);
            let spread = rng.random_range(0..=n);
            c[top] = n - spread;
            for _ in 0..spread {
                c[rng.random_range(0..top)] += 1;
            }
        }
        out.push((format!("random-{r}"), from(c)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LevelFractions;

    #[test]
    fn empty_system() {
        let x = Profile::empty(10).unwrap();
        let lam = 0.6;
        assert!((exact_drift_u(&x, 1, lam, 3) - lam / (10.0 * 1.6)).abs() < 1e-15);
        assert_eq!(exact_drift_u(&x, 2, lam, 3), 0.0);
        assert!((exact_drift_mass(&x, lam) - lam / 1.6).abs() < 1e-15);
    }

    #[test]
    fn balanced_terms_cancel() {
        let x = Profile::from_counts(&[0, 0, 0, 5]).unwrap();
        assert_eq!(exact_drift_u(&x, 2, 0.7, 4), 0.0);
        assert!((exact_drift_mass(&x, 0.7) - (0.7 - 1.0) / 1.7).abs() < 1e-15);
    }

    #[test]
    fn worked_example_by_enumeration() {
        // lengths (0,1,2,2), d = 2, λ = 1/2, i = 2: enumerate the 16 choice
        // pairs and the 4 departures directly
        let lengths = [0u32, 1, 2, 2];
        let (lam, n) = (0.5, 4.0);
        let mut arrive_to_2 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                let joined = if lengths[b] < lengths[a] { b } else { a };
                if lengths[joined] == 1 {
                    arrive_to_2 += 1.0 / 16.0;
                }
            }
        }
        let depart_from_2 = lengths.iter().filter(|&&l| l == 2).count() as f64 / n;
        let oracle = (lam * arrive_to_2 - depart_from_2) / (n * (1.0 + lam));
        let x = Profile::from_lengths(&lengths).unwrap();
        let exact = exact_drift_u(&x, 2, lam, 2);
        assert!((exact - oracle).abs() < 1e-12);
        assert!((exact - -0.057291666666666664).abs() < 1e-12);
    }

    #[test]
    fn linearity() {
        let p = Params::with_k(40, 12, 0.8, 0.1, 3).unwrap();
        let table = CoefficientTable::new(p.lambda_d(), 3).unwrap();
        for (_, x) in adversarial_states(40, 5, 30, 3) {
            for j in 1..=3u32 {
                let direct = exact_drift_q(&x, j, &table, 0.8, 12);
                let w = table.weights(j);
                let via_u: f64 = -40.0
                    * (1..=j as usize).map(|i| w[i - 1] * exact_drift_u(&x, i, 0.8, 12)).sum::<f64>();
                assert!((direct - via_u).abs() < 1e-12, "{direct} {via_u}");
            }
            let p_direct = exact_drift_p(&x, 3, 0.8, 12);
            let p_u = -40.0 * (1..=2).map(|i| exact_drift_u(&x, i, 0.8, 12)).sum::<f64>();
            assert!((p_direct - p_u).abs() < 1e-12);
            assert_eq!(exact_drift_mass(&x, 0.8) * 1.8 + x.tail(1), 0.8);
        }
    }

    #[test]
    fn all_at_k_pk1_bound_is_tight() {
        let p = Params::with_k(50, 5, 0.8, 0.1, 3).unwrap();
        let x = Profile::from_counts(&[0, 0, 0, 50]).unwrap();
        let r = verify_pk1_bound(&x, &p).unwrap();
        assert_eq!(r.exact, 0.0);
        assert!(r.upper.unwrap().abs() < 1e-15);
        assert!(r.satisfied());
    }

    #[test]
    fn full_lower_levels_break_the_cross_level_step() {
        // every queue at length k−1: 1 − u_k = 1 but Q_k/n = β_k < 1
        let p = Params::with_k(50, 5, 0.8, 0.1, 2).unwrap();
        let x = Profile::from_counts(&[0, 50]).unwrap();
        let b = DriftBounds::new(&p).unwrap();
        let r = b.pk1(&x);
        assert!((r.exact - 1.0).abs() < 1e-15);
        let beta_k = b.table.beta(2);
        assert!((r.upper.unwrap() - beta_k).abs() < 1e-15);
        assert_eq!(r.verdict, Verdict::Violated);
        let r = b.qj(&x, 1);
        assert!((r.exact - 1.0).abs() < 1e-15);
        assert_eq!(r.verdict, Verdict::Violated);
        assert!(b.qk(&x).satisfied());
    }

    #[test]
    fn montecarlo_agrees() {
        let x = Profile::from_lengths(&[0, 1, 2, 2]).unwrap();
        let e = montecarlo_drift(&x, Functional::U(2), 0.5, 2, None, 200_000, 9).unwrap();
        let exact = exact_drift_u(&x, 2, 0.5, 2);
        assert!((e.mean - exact).abs() <= 4.0 * e.stderr, "{e:?} {exact}");
        let table = CoefficientTable::new(4.0, 2).unwrap();
        let y = Profile::from_counts(&[3, 10, 7]).unwrap();
        let e = montecarlo_drift(&y, Functional::Q(2), 0.8, 5, Some(&table), 200_000, 10).unwrap();
        let exact = exact_drift_q(&y, 2, &table, 0.8, 5);
        assert!((e.mean - exact).abs() <= 4.0 * e.stderr, "{e:?} {exact}");
    }

    fn fixture() -> Params {
        Params::with_k(10u128.pow(24), 20_000_000, 1.0 - 2.5e-11, 0.1, 2).unwrap()
    }

    #[test]
    fn strict_mode_refuses_outside_regime() {
        let p = Params::with_k(1_000_000, 2_000, 0.999, 0.1, 2).unwrap();
        let ledger = SetLedger::new(&p, 10.0, 10.0).unwrap();
        let x = Profile::empty(10).unwrap();
        assert!(matches!(verify_d1_bounds(&x, &ledger, D1Mode::Strict), Err(Error::Refused(_))));
        let r = verify_d1_bounds(&x, &ledger, D1Mode::Audit).unwrap();
        assert!(!r.regime_holds);
        assert_eq!(r.audit.len(), 9);
    }

    #[test]
    fn fixture_d1_profile() {
        let p = fixture();
        let ledger = SetLedger::new(&p, 10.0, 10.0).unwrap();
        let gap = p.gap();
        let x = LevelFractions::from_deficits(1e24, &[gap, gap * p.lambda_d()]);
        let r = verify_d1_bounds(&x, &ledger, D1Mode::Strict).unwrap();
        assert!(r.in_d1);
        for b in &r.bounds {
            assert!(b.satisfied(), "{b:?}");
        }
        assert!(r.audit.iter().all(|a| a.holds), "{:?}", r.audit);
    }

    #[test]
    fn audit_example() {
        let p = Params::with_k(1000, 10_000, 0.9999, 0.1, 2).unwrap();
        let a = d1_audit(&p);
        let line = a.iter().find(|l| l.name == "qk-upper").unwrap();
        assert!(line.holds);
    }

    #[test]
    fn report_csv_header() {
        let p = Params::with_k(50, 5, 0.8, 0.1, 2).unwrap();
        let x = Profile::from_counts(&[5, 20, 25]).unwrap();
        let reps: Vec<_> = DriftBounds::new(&p).unwrap().all(&x).into_iter().map(|r| r.with_id("s")).collect();
        let mut buf = Vec::new();
        write_reports_csv(&reps, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("state-id,functional,exact,lower,upper,slack-low,slack-high,verdict\n"));
        assert_eq!(s.lines().count(), 4);
    }
}
