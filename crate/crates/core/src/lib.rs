//! Numerical toolkit for linear Landau damping of the Vlasov–Poisson equation
//! with weak linear-Boltzmann or Fokker–Planck collisions.
//!
//! The crate is organised bottom-up:
//!
//! - [`foundations`]: parameters, the collisional clock `chi`, its integral `psi`,
//!   the Fokker–Planck damping exponent, the Coulomb symbol and initial data.
//! - [`kernels`]: closed-form memory kernels of the density Volterra equations.
//! - [`dispersion`]: time Fourier transforms on the lower half-plane and
//!   Penrose-margin scans with tail certificates.
//! - [`volterra`]: product-trapezoid solver for the per-mode density equations.
//! - [`kinetic`]: per-mode semi-Lagrangian simulation along exact characteristics.
//! - [`analysis`]: decay fits, envelope boundedness and epsilon-continuity studies.
//! - [`verify`]: the acceptance criteria as reusable checks.
//!
//! All quantities are dimensionless.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dispersion;
mod error;
pub mod foundations;
pub mod kernels;
pub mod kinetic;
pub mod quadrature;
pub mod verify;
pub mod volterra;

pub use error::{Error, Result};
pub use num_complex::Complex64;
