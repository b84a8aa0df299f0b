//! Ambrosio-Tortorelli energies on stochastic lattices.
//!
//! The crate generates admissible point sets ([`lattice`]), equips them with
//! Voronoi or k-nearest-neighbor edges ([`graph`]), evaluates the discrete
//! phase-field energies and their weak-membrane relatives ([`energy`]),
//! minimizes them by alternating quadratic solves ([`solver`]), and estimates
//! homogenized bulk and surface densities from finite cell problems
//! ([`cellprob`]). Image and table I/O lives in [`image`] and [`table`], and
//! [`pipeline`] strings the pieces into an image segmentation.

// NaN-rejecting `!(x > 0.0)` checks are intended
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cellprob;
pub mod energy;
pub mod error;
pub mod graph;
pub mod image;
pub mod lattice;
pub mod linalg;
pub mod numeric;
pub mod pipeline;
pub mod rng;
pub mod solver;
pub mod table;

mod grid;

pub use error::{Error, Result};
