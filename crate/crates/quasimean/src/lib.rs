//! Quasi-arithmetic means, Chisini-consistent aggregation, and axiom audits.
//!
//! The crate is organized around one question: which single number can stand
//! in for a sample without changing what you were going to do with it?
//!
//! - [`generators`] defines the strictly monotone transforms whose
//!   transform–average–invert composition yields the classical means.
//! - [`means`] computes those means (plain and weighted) over validated
//!   samples with numerically hardened accumulation paths.
//! - [`chisini`] inverts aggregates instead: given `M`, it solves
//!   `M(μ, …, μ) = M(x₁, …, xₙ)` for the consistent value μ, in closed form
//!   for the built-in aggregates and numerically for custom ones.
//! - [`axioms`] audits any aggregator against the defining mean axioms with
//!   seeded randomized checks, and can produce an exact witness that the
//!   median fails block associativity.
//! - [`cli`] wires the above into the `quasimean` binary: dataset parsing,
//!   command execution, and structured (JSON) or table output.

pub mod axioms;
pub mod chisini;
pub mod cli;
pub mod generators;
pub mod means;
mod numeric;

pub use axioms::{full_audit, AggregatorRef, AxiomReport};
pub use chisini::{chisini_solve, AggregateForm, AggregateSpec, ChisiniSolution};
pub use generators::Generator;
pub use means::{median, named_mean, quasi_mean, weighted_quasi_mean, MeanName, Sample, WeightVector};
