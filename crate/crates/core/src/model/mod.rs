//! Pure analytical layer: coefficients, functionals, fixed points, regime
//! conditions, set predicates and budgets. No randomness.

pub mod budgets;
pub mod coefficients;
pub mod fixed_point;
pub mod functionals;
pub mod occupancy;
pub mod ode;
pub mod regime;
pub mod sets;

pub use budgets::{budgets, mixing_budgets, Budgets};
pub use coefficients::{coefficients, CoefficientTable};
pub use fixed_point::{fixed_point, FixedPoint, PiValue};
pub use functionals::{p_functional, p_over_n, q_functional, q_over_n};
pub use occupancy::{LevelFractions, Occupancy};
pub use ode::{ode_derivative, ode_step, OdeConfig, OdeScheme};
pub use regime::{regime_check, Comparison, RegimeReport};
pub use sets::{center_count, center_tail_counts, in_n_eps, set_membership, SetId, SetLedger, Snapshot};
