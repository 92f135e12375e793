//! Set predicates: the good set 𝒩^ε, the reduced forms ℋ^ε and ℐ^ε, the
//! hitting-time ledger 𝒜…ℋ and the centre 𝒫 used by the path builder.
//!
//! Every predicate takes ε explicitly since the same ledger is reused at
//! several tolerances.

use crate::decimal::{dec, int, one, powi, to_f64};
use crate::error::{Error, Result};
use crate::model::budgets::Budgets;
use crate::model::coefficients::CoefficientTable;
use crate::model::functionals::{p_over_n, q_over_n};
use crate::model::occupancy::Occupancy;
use crate::params::Params;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SetId {
    /// 𝒩^ε.
    N,
    /// ℋ^ε in reduced form.
    HReduced,
    /// ℐ^ε in reduced form.
    IReduced,
    A0,
    A1,
    B0,
    B1,
    C0,
    C1,
    D0,
    D1,
    E0,
    E1,
    G0(u32),
    G1(u32),
    /// ℋ = {u_{k+1} = 0} ∩ 𝒢₁¹.
    H,
    /// ℐ: every ledger entry set at once.
    I,
    /// The centre 𝒫.
    Center,
}

impl fmt::Display for SetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetId::G0(j) => write!(f, "G0_{j}"),
            SetId::G1(j) => write!(f, "G1_{j}"),
            other => write!(f, "{other:?}"),
        }
    }
}

impl std::str::FromStr for SetId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown set id {s:?}"));
        Ok(match s {
            "N" => SetId::N,
            "HReduced" => SetId::HReduced,
            "IReduced" => SetId::IReduced,
            "A0" => SetId::A0,
            "A1" => SetId::A1,
            "B0" => SetId::B0,
            "B1" => SetId::B1,
            "C0" => SetId::C0,
            "C1" => SetId::C1,
            "D0" => SetId::D0,
            "D1" => SetId::D1,
            "E0" => SetId::E0,
            "E1" => SetId::E1,
            "H" => SetId::H,
            "I" => SetId::I,
            "Center" => SetId::Center,
            _ => {
                let (head, j) = s.split_once('_').ok_or_else(bad)?;
                let j: u32 = j.parse().map_err(|_| bad())?;
                match head {
                    "G0" => SetId::G0(j),
                    "G1" => SetId::G1(j),
                    _ => return Err(bad()),
                }
            }
        })
    }
}

/// Everything the predicates read from a state, computed once.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    /// `q[j-1]` = Q_j/n.
    pub q: Vec<f64>,
    /// P_{k−1}/n.
    pub p: f64,
    /// `deficit[j-1]` = 1 − u_j for j = 1..=k.
    pub deficit: Vec<f64>,
    /// `tail_count[j-1]` = n·u_j for j = 1..=k, rounded.
    pub tail_count: Vec<f64>,
    pub u_next: f64,
    pub max_len: usize,
    /// ‖x‖₁/n.
    pub mass_per_queue: f64,
}

impl Snapshot {
    pub fn of<X: Occupancy + ?Sized>(x: &X, table: &CoefficientTable) -> Self {
        let k = table.k as usize;
        Snapshot {
            q: (1..=table.k).map(|j| q_over_n(x, j, table)).collect(),
            p: p_over_n(x, table.k),
            deficit: (1..=k).map(|j| x.deficit(j)).collect(),
            tail_count: (1..=k).map(|j| (x.n() * x.tail(j)).round()).collect(),
            u_next: x.tail(k + 1),
            max_len: x.max_len(),
            mass_per_queue: x.mass() / x.n(),
        }
    }
}

/// Set predicates bound to one parameter tuple and one (ℓ, g).
#[derive(Debug, Clone)]
pub struct SetLedger {
    pub params: Params,
    pub table: CoefficientTable,
    pub ell: f64,
    pub g: f64,
}

impl SetLedger {
    pub fn new(params: &Params, ell: f64, g: f64) -> Result<Self> {
        let table = CoefficientTable::new(params.lambda_d(), params.k)?;
        Ok(SetLedger { params: params.clone(), table, ell, g })
    }

    pub fn k(&self) -> u32 {
        self.params.k
    }

    /// (1−λ)(λd)^{j−1}.
    pub fn scale(&self, j: u32) -> f64 {
        self.params.gap() * self.params.lambda_d().powi(j as i32 - 1)
    }

    pub fn snapshot<X: Occupancy + ?Sized>(&self, x: &X) -> Snapshot {
        Snapshot::of(x, &self.table)
    }

    pub fn contains<X: Occupancy + ?Sized>(&self, x: &X, id: SetId, eps: f64) -> bool {
        self.contains_snapshot(&self.snapshot(x), id, eps)
    }

    pub fn contains_snapshot(&self, s: &Snapshot, id: SetId, eps: f64) -> bool {
        let k = self.k();
        let qk = s.q[k as usize - 1];
        let q = |j: u32| s.q[j as usize - 1];
        let sk = self.scale(k);
        let gap = self.params.gap();
        match id {
            SetId::N => in_n(s, self, eps),
            SetId::Center => {
                s.u_next == 0.0
                    && (1..=k).all(|j| s.tail_count[j as usize - 1] == center_count(&self.params, j))
            }
            SetId::HReduced => {
                s.u_next == 0.0
                    && qk <= (1.0 + 2.0 * eps) * sk
                    && (1..=k).all(|j| q(j) >= (1.0 - g1_width(k, j) * eps) * self.scale(j))
                    && (1..k).all(|j| q(j) <= (1.0 + g1_width(k, j) * eps) * self.scale(j))
            }
            SetId::IReduced => {
                s.u_next == 0.0
                    && qk <= (1.0 + eps) * sk
                    && qk >= (1.0 - 3.0 * eps) * sk
                    && (1..k).all(|j| within(q(j), self.scale(j), g0_width(k, j) * eps))
            }
            SetId::A0 => s.max_len as f64 <= self.ell && s.mass_per_queue <= self.g,
            SetId::A1 => s.max_len as f64 <= 3.0 * self.ell && s.mass_per_queue <= 3.0 * self.g,
            SetId::B0 => qk <= (1.0 + eps) * sk && self.contains_snapshot(s, SetId::A1, eps),
            SetId::B1 => qk <= (1.0 + 2.0 * eps) * sk && self.contains_snapshot(s, SetId::A1, eps),
            SetId::C0 => {
                s.p <= 2.0 * k as f64 * self.scale(k - 1) && self.contains_snapshot(s, SetId::B1, eps)
            }
            SetId::C1 => {
                s.p <= 3.0 * k as f64 * self.scale(k - 1) && self.contains_snapshot(s, SetId::B1, eps)
            }
            SetId::D0 => {
                q(k - 1) <= (1.0 + 4.0 * eps) * self.scale(k - 1)
                    && self.contains_snapshot(s, SetId::C1, eps)
            }
            SetId::D1 => {
                q(k - 1) <= (1.0 + 5.0 * eps) * self.scale(k - 1)
                    && self.contains_snapshot(s, SetId::C1, eps)
            }
            SetId::E0 => {
                s.u_next <= eps * gap
                    && qk >= (1.0 - 3.0 * eps) * sk
                    && self.contains_snapshot(s, SetId::D1, eps)
            }
            SetId::E1 => {
                s.u_next <= eps * gap
                    && qk >= (1.0 - 4.0 * eps) * sk
                    && self.contains_snapshot(s, SetId::D1, eps)
            }
            SetId::G0(j) | SetId::G1(j) => {
                if j == 0 || j > k {
                    return false;
                }
                if j == k {
                    // 𝒢^k is declared equal to ℰ
                    let e = if matches!(id, SetId::G0(_)) { SetId::E0 } else { SetId::E1 };
                    return self.contains_snapshot(s, e, eps);
                }
                let width = match id {
                    SetId::G0(_) => g0_width(k, j),
                    _ => g1_width(k, j),
                };
                within(q(j), self.scale(j), width * eps) && self.contains_snapshot(s, SetId::G1(j + 1), eps)
            }
            SetId::H => s.u_next == 0.0 && self.contains_snapshot(s, SetId::G1(1), eps),
            SetId::I => {
                [SetId::A0, SetId::B0, SetId::C0, SetId::D0, SetId::E0, SetId::H]
                    .into_iter()
                    .chain((1..k).map(SetId::G0))
                    .all(|id| self.contains_snapshot(s, id, eps))
            }
        }
    }

    /// The ordered (𝒮₀, 𝒮₁) pairs of the hitting/exit ledger.
    pub fn sequence(&self) -> Vec<(SetId, SetId)> {
        let k = self.k();
        let mut v = vec![
            (SetId::A0, SetId::A1),
            (SetId::B0, SetId::B1),
            (SetId::C0, SetId::C1),
            (SetId::D0, SetId::D1),
            (SetId::E0, SetId::E1),
        ];
        v.extend((1..k).rev().map(|j| (SetId::G0(j), SetId::G1(j))));
        v.push((SetId::H, SetId::H));
        v
    }
}

/// Width coefficient 4 + (k−j−1/2)/k of 𝒢₀^j.
pub fn g0_width(k: u32, j: u32) -> f64 {
    4.0 + (k as f64 - j as f64 - 0.5) / k as f64
}

/// Width coefficient 4 + (k−j)/k of 𝒢₁^j.
pub fn g1_width(k: u32, j: u32) -> f64 {
    4.0 + (k as f64 - j as f64) / k as f64
}

fn within(value: f64, scale: f64, width: f64) -> bool {
    (1.0 - width) * scale <= value && value <= (1.0 + width) * scale
}

fn in_n(s: &Snapshot, ledger: &SetLedger, eps: f64) -> bool {
    s.u_next == 0.0
        && (1..=ledger.k()).all(|j| {
            let sc = ledger.scale(j);
            let w = s.deficit[j as usize - 1];
            (1.0 - 5.0 * eps) * sc <= w && w <= (1.0 + 5.0 * eps) * sc
        })
}

/// 𝒩^ε membership without a coefficient table (works for any λd).
pub fn in_n_eps<X: Occupancy + ?Sized>(x: &X, params: &Params, eps: f64) -> bool {
    let k = params.k as usize;
    x.tail(k + 1) == 0.0
        && (1..=k).all(|j| {
            let sc = params.gap() * params.lambda_d().powi(j as i32 - 1);
            let w = x.deficit(j);
            (1.0 - 5.0 * eps) * sc <= w && w <= (1.0 + 5.0 * eps) * sc
        })
}

/// n·u*_j = ⌊n(1 − (1−λ)(λd)^{j−1})⌋, the number of queues of length ≥ j in
/// the centre 𝒫.
///
/// Evaluated in decimal arithmetic: the product lands on integers for typical
/// parameters, where a binary floor would be off by one.
pub fn center_count(params: &Params, j: u32) -> f64 {
    let n = int(params.n);
    let lam = dec(params.lambda);
    let ld = &lam * &int(params.d as u128);
    let deficit = &(&n * &(&one() - &lam)) * &powi(&ld, j - 1);
    to_f64(&(&n - &deficit).floor()).max(0.0)
}

/// Counts of queues with length ≥ j, j = 1..=k, in the centre.
pub fn center_tail_counts(params: &Params) -> Vec<u64> {
    (1..=params.k).map(|j| center_count(params, j) as u64).collect()
}

/// Membership with ε taken from `params` and (ℓ, g) from `budgets`.
pub fn set_membership<X: Occupancy + ?Sized>(
    x: &X,
    id: SetId,
    params: &Params,
    budgets: &Budgets,
) -> Result<bool> {
    if id == SetId::N {
        return Ok(in_n_eps(x, params, params.epsilon));
    }
    let ledger = SetLedger::new(params, budgets.ell, budgets.g)?;
    Ok(ledger.contains(x, id, params.epsilon))
}
