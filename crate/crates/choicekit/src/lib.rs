//! choicekit — a school-choice matching toolkit.
//!
//! The crate assigns students to schools by solving exact min-cost
//! assignment problems over preference-derived cost matrices, and evaluates
//! the results with a family of honest-to-the-definitions metrics:
//!
//! - [`model`] — instances (tiered preferences/priorities, capacities) and
//!   capacity-respecting matchings;
//! - [`metrics`] — preference index, priority index, exponential rank index,
//!   profile rank, rank compatibility, stability and Pareto dominance;
//! - [`solver`] — exact Hungarian assignment over arbitrary-precision costs,
//!   enumeration of all optima, and ranked (k-best) assignment streams;
//! - [`mechanisms`] — the index-based and rank-based Hungarian mechanisms,
//!   deferred acceptance and top trading cycles baselines, preference
//!   completion, and tie-breaking among multiple optima;
//! - [`oracle`] — brute-force reference implementations used to certify the
//!   optimizers at small sizes;
//! - [`io`], [`report`], [`generate`] — file formats, run reports, and a
//!   reproducible instance generator backing the `choicekit` CLI.

pub mod generate;
pub mod io;
pub mod mechanisms;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod report;
pub mod solver;
