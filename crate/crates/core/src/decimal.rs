//! Exact-decimal helpers on top of `dashu_float::DBig`.
//!
//! Floats are read through their shortest round-trip decimal string, so a
//! parameter written as `0.999999999975` is compared as that decimal and not
//! as the nearest binary double.

use dashu_float::DBig;
use std::str::FromStr;

/// Working precision in significant decimal digits.
pub const DIGITS: usize = 100;

pub fn dec(x: f64) -> DBig {
    debug_assert!(x.is_finite());
    parse(&format!("{x}"))
}

pub fn int(x: u128) -> DBig {
    parse(&x.to_string())
}

pub fn parse(s: &str) -> DBig {
    DBig::from_str(s)
        .expect("decimal literal")
        .with_precision(DIGITS)
        .value()
}

pub fn one() -> DBig {
    int(1)
}

pub fn to_f64(x: &DBig) -> f64 {
    x.to_f64().value()
}

/// Short scientific rendering used in reports.
pub fn show(x: &DBig) -> String {
    let f = to_f64(x);
    if f != 0.0 && (f.abs() >= 1e6 || f.abs() < 1e-4) {
        format!("{f:.12e}")
    } else {
        format!("{f:.12}")
    }
}

pub fn powi(x: &DBig, e: u32) -> DBig {
    let mut acc = one();
    for _ in 0..e {
        acc = &acc * x;
    }
    acc
}
