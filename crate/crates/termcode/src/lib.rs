//! Workbench for term coding: systems of term equations and disequalities
//! over multi-sorted finite domains, and the machinery around them.
//!
//! The crate is organised around a pipeline:
//!
//! 1. [`dsl`] parses the `.tc` text format into an [`ir::System`] (or build
//!    one with [`examples::gen`]).
//! 2. [`normalize`] flattens nested terms and diversifies function symbols.
//! 3. [`depgraph`] builds the variable dependency graph of a flat system.
//! 4. [`semantics`] evaluates interpretations and counts solutions or
//!    dispersion images exactly.
//! 5. [`search`] maximises counts over interpretations (exhaustive or
//!    simulated annealing) and computes guessing values.
//! 6. [`entropy`] bounds the guessing value from above with an exact
//!    rational linear program over Shannon inequalities.
//! 7. [`dispersion`] computes the integer dispersion exponent by a
//!    vertex-disjoint-paths computation, decides asymptotic thresholds, and
//!    reduces dispersion problems to term coding.
//! 8. [`fo`] compiles first-order sentences into term-coding systems.
//!
//! The runnable examples under `examples/` walk through each capability;
//! the `tc` binary exposes the same operations as subcommands.

pub mod depgraph;
pub mod dispersion;
pub mod dsl;
pub mod examples;
pub mod fo;
pub mod ir;
pub mod normalize;
pub mod entropy;
pub mod reproduce;
pub mod search;
mod simplex;
pub mod semantics;
pub mod witness;

pub use ir::{DomainSizes, System, Term};
