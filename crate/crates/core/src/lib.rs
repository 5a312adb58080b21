//! Discrete constrained phase-field energies on closed triangulated surfaces:
//! one-dimensional profiles, photograph maps, gradient-flow critical points,
//! Morse indices, barycenter audits and multiplicity sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barycenter;
pub mod energy;
pub mod error;
pub mod field;
pub mod geom;
pub mod multiplicity;
pub mod par;
pub mod photography;
pub mod potential;
pub mod profile;
pub mod quad;
pub mod sparse;

pub use error::{Error, Result};
pub use field::{integrate, l2_norm, mass_dot, ScalarField};
pub use par::Execution;
