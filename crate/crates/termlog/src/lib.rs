//! Static termination prover for definite logic programs.
//!
//! The pipeline parses a pure-Prolog program, abstracts its call patterns,
//! generates the strict-decrease obligations required for termination under
//! the left-to-right selection rule, reduces them to constraints on a
//! well-founded term ordering, and searches for a concrete ordering (a
//! recursive path ordering or a semi-linear norm) that satisfies all of
//! them.  A bounded LD-resolution interpreter serves as an empirical oracle
//! for the verdicts.

pub mod acceptability;
pub mod callset;
pub mod interpreter;
pub mod orders;
pub mod pipeline;
pub mod solver;
pub mod syntax;
