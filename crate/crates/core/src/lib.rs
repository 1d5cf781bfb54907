//! Dynamic risk and performance measures on finite scenario trees.
//!
//! The crate evaluates local monotone measures (conditional expectation,
//! gain-loss ratio, tail value at risk, RAROC) and update rules on finite
//! filtered probability spaces, and verifies time-consistency notions —
//! generic rule consistency, weak and semi-weak consistency, benchmark
//! consistency — together with the dual representations and the
//! index/risk-family converters, all by seeded property checking with
//! shrunk counterexamples.
//!
//! Scalars are extended reals under saturating conventions
//! (`inf - inf = -inf`, `0 * inf = 0`); see [`extreal`]. Spaces, random
//! variables and adapted processes live in [`prob_space`]; the
//! conditional operators in [`cond_ops`]; measures, rules and checkers in
//! [`lm_measures`], [`update_rules`], [`consistency`] and [`duality`].

pub mod cond_ops;
pub mod consistency;
pub mod duality;
mod error;
pub mod extreal;
pub mod fixtures;
pub mod lm_measures;
pub mod prob_space;
pub mod sampling;
pub mod update_rules;

pub use error::{Error, Result};
pub use extreal::ExtReal;
pub use prob_space::{AdaptedProcess, FilteredSpace, Payoff, PayoffKind, RandomVariable};
pub use update_rules::Direction;
