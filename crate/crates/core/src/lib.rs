//! Lattice toolkit for nonlocal minimal surfaces in cylinders.
//!
//! The crate computes discrete s-minimal sets with prescribed exterior graph
//! data by exact minimum-cut minimization, evaluates the fractional
//! perimeter and the nonlocal mean curvature integral with controlled
//! far-field corrections, and provides verifiers for graph structure,
//! stickiness, sliding contact, morphology identities, trapped-region
//! integrals and density estimates.

pub mod analysis;
pub mod curvature;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod kernel;
pub mod par;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
