use crate::error::{Error, Result};
use crate::model::coefficients::CoefficientTable;
use crate::model::occupancy::Occupancy;

/// Q_j(x)/n = Σ_{i≤j} w_i(1 − u_i) with the weights of [`CoefficientTable::weights`].
pub fn q_over_n<X: Occupancy + ?Sized>(x: &X, j: u32, table: &CoefficientTable) -> f64 {
    table
        .weights(j)
        .iter()
        .enumerate()
        .map(|(i, w)| w * x.deficit(i + 1))
        .sum()
}

/// Q_j(x) = n Σ_{i=1}^j γ_{j,i}(1 − u_i(x)); β replaces γ when j = k.
pub fn q_functional<X: Occupancy + ?Sized>(x: &X, j: u32, table: &CoefficientTable) -> Result<f64> {
    if j == 0 || j > table.k {
        return Err(Error::Config(format!("Q_{j} requested but k = {}", table.k)));
    }
    Ok(x.n() * q_over_n(x, j, table))
}

pub fn p_over_n<X: Occupancy + ?Sized>(x: &X, k: u32) -> f64 {
    (1..k as usize).map(|i| x.deficit(i)).sum()
}

/// P_{k−1}(x) = n Σ_{i=1}^{k−1}(1 − u_i(x)).
pub fn p_functional<X: Occupancy + ?Sized>(x: &X, table: &CoefficientTable) -> f64 {
    x.n() * p_over_n(x, table.k)
}
