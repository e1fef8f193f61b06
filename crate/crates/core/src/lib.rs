//! Semiclassical propagators `K = exp(R + iS/hbar)`: quadratic and general
//! Hamilton-Jacobi constructions, a Crank-Nicolson reference solver,
//! minisuperspace cosmology and lattice field checks.
//!
//! `no_std` with `alloc`. Float math comes from `libm` through
//! `num_traits::Float` on toolchains whose `core` lacks it.

#![no_std]
// Recent toolchains (and std in tests) provide inherent float methods, which
// shadow the `Float` trait import kept for older compilers.
#![allow(unused_imports)]
// `!(x > 0.0)` is used on purpose: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod convergence;
pub mod cosmo;
pub mod error;
pub mod field;
pub mod general_hj;
pub mod grid;
pub mod lattice;
pub mod linalg;
pub mod oracle;
pub mod ode;
pub mod propagator;
pub mod quadratic;
pub mod quadrature;

pub use error::{Error, Result};
pub use field::{finite_difference, Axis, ComplexField, Order, SpacetimeFunction};
pub use grid::{Grid1d, SpacetimeGrid, Window};
pub use propagator::{assemble_propagator, Factor, PropagatorFactors, TwoPointAction};
pub use quadrature::nested_quadrature;

pub use num_complex::Complex64;
