//! Verification and exploration toolkit for independent bond percolation on
//! bunkbed graphs.
//!
//! A bunkbed graph doubles a weighted base graph into two layers joined by
//! vertical edges. The bunkbed inequality says that for vertices `v`, `w` of
//! the base, the same-layer connection `v- <-> w-` is at least as likely as
//! the cross-layer connection `v- <-> w+`. This crate computes such
//! probabilities exactly (rational arithmetic over all edge configurations)
//! or by Monte Carlo, proves the inequality on specific instances through
//! two decomposition arguments, extracts gap polynomials in the common edge
//! weight, and sweeps graph families searching for counterexamples.

pub mod cluster;
pub mod error;
pub mod exact;
pub mod generate;
pub mod graph;
pub mod mc;
pub mod normalize;
pub mod poly;
pub mod prob;
pub mod search;
pub mod symmetry;
pub mod unionfind;

pub use error::{Error, Result};
pub use prob::Prob;
