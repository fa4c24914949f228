//! Coupled-mode solver for trapped modes, resonances and reflection in two-dimensional
//! waveguides `{0 < y < φ(x)}` with Dirichlet walls.
//!
//! The transverse dependence is expanded in the modes `sin(πk y/φ(x))`, giving a
//! Hamiltonian system in `x` whose admissible boundary row space is carried across the
//! domain by [`transfer`]. Roots of the resulting characteristic determinant are located
//! by [`spectral`]. [`reference_fd`] provides an independent two-dimensional check.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod coupled_mode;
pub mod error;
pub mod geometry;
pub mod reference_fd;
pub mod spectral;
pub mod transfer;

pub use error::{Error, Result};
pub use num_complex::Complex64;
