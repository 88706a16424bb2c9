//! Numerical core for the polygonal multi-bubble construction of the critical
//! competitive system
//!
//! ```text
//! -Δu_i = u_i^5 + Σ_{j≠i} β_ij u_i^2 u_j^3   in ℝ³
//! ```
//!
//! The crate builds the approximate solutions (a standard bubble `U` paired
//! with a ring of `k` concentrated bubbles `V`), evaluates their error and
//! coupling densities, integrates them over ℝ³ with an adaptive cubature that
//! resolves the concentration scale, and checks the asymptotic statements of
//! the finite-dimensional reduction (scaling law of the concentration
//! parameter, reduced-energy constants, interaction integrals, the rotational
//! reduction of the `m`-component system).
//!
//! Everything here is `no_std` + `alloc`; IO, reports and threading live in
//! the companion `bubbleforge` crate.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
pub mod math;

pub mod energy;
pub mod fields;
pub mod multicomponent;
pub mod quadrature;
pub mod scaling;
pub mod symmetry;

pub use error::{Error, Result};
pub use fields::{CouplingRegime, ScalarField, SymmetryTag};
pub use quadrature::{QuadratureResult, QuadratureSpec, Region};
pub use symmetry::{PolygonConfig, SymmetrySpec, Vec3};
