//! Bounds and numerics for non-homogeneous birth-death processes on the
//! integers.
//!
//! A bilateral birth-death process `X(t) ∈ ℤ` jumps `i → i+1` at rate
//! `λ_i(t)` and `i → i-1` at rate `μ_i(t)`. This crate
//!
//! * describes such processes with periodic, state-dependent rates ([`model`]),
//! * certifies how fast the distribution forgets its initial condition,
//!   how heavy its tails can get and how much is lost by truncating the state
//!   space to a finite window ([`bounds`]),
//! * solves the truncated forward equations and locates the periodic
//!   limiting regime ([`solver`]),
//! * samples exact paths for Monte-Carlo cross-checks ([`simulate`]),
//! * and wires it together behind a small command-line front end ([`cli`]).
//!
//! ```
//! use bilateral_bdp::bounds::{fit_envelope, EnvelopeStrategy, WeightSequence};
//! use bilateral_bdp::model::RateModel;
//!
//! let walk = RateModel::example_random_walk();
//! let weights = WeightSequence::mirror_geometric(8.0 / 7.0).unwrap();
//! let env = fit_envelope(&walk, &weights, EnvelopeStrategy::Pointwise, 1.0).unwrap();
//! assert!((env.beta - 13.0 / 28.0).abs() < 1e-9);
//! ```

pub mod bounds;
pub mod cli;
pub mod model;
pub mod simulate;
pub mod solver;

pub use bounds::{BoundReport, EnvelopeConstants, WeightSequence};
pub use model::{load_model, RateModel, Rates, Truncated};
pub use solver::{ProbabilitySnapshot, Trajectory};
