//! Simulation and verification lab for the (n,d,λ)-supermarket chain.
//!
//! `n` queues; at each step, with probability λ/(1+λ) a customer arrives,
//! inspects `d` queues chosen uniformly with replacement and joins the first
//! shortest; otherwise a uniformly chosen queue serves one customer if it has
//! any.

pub mod decimal;
pub mod drift;
pub mod error;
pub mod model;
pub mod oracle;
pub mod params;

pub use error::{Error, Result};
pub use params::{k_of, Params};
pub mod profile;
pub mod rng;
pub mod vector;
pub mod walk;
