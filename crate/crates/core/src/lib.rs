//! Fair allocation over time: benefit calculus, closed-form constructions,
//! an LP/MIP engine, column generation and transition-constrained search for
//! the ambulance location and relocation problem.

pub mod allocation;
pub mod bnb;
pub mod closedform;
pub mod colgen;
pub mod error;
pub mod fixtures;
pub mod instgen;
pub mod model;
pub mod oracle;
pub mod simplex;
pub mod transition;

/// Exact rational used for benefits and closed-form arithmetic.
pub type Q = num_rational::Ratio<i128>;

pub use error::{Error, Result};
pub use model::{coverage_vector, transition_ok, unfairness_range, validate_plan, Configuration, Instance, Plan};
