//! Numerical laboratory for the quotient `psi_alpha = beta (1 + alpha delta)`
//! on bounded domains in R^N (N >= 5) with Neumann boundary conditions.
//!
//! * [`domain`]: box and radial-ball grids, quadrature, discrete gradients.
//! * [`functionals`]: `delta`, `beta`, `gamma`, `psi_alpha`, `phi_alpha`,
//!   Nehari scaling, first variations and Euler-Lagrange residuals.
//! * [`instanton`]: the instanton family and the Sobolev constant `S`.
//! * [`minimize`]: multi-start descent estimating `S_alpha`.
//! * [`alpha0`]: bracketing of the critical `alpha_0`.
//! * [`verify`]: the sharp inequality and its consequences on test families.
//! * [`cli`]: configuration, reports and the command-line entry points.

// `!(x > 0.0)` rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alpha0;
pub mod cli;
pub mod domain;
pub mod error;
pub mod functionals;
pub mod instanton;
pub mod minimize;
pub mod sampling;
pub mod verify;

pub use domain::{DiscreteDomain, DomainKind, Field, Stencil};
pub use error::{LabError, Result};
pub use functionals::{FunctionalReport, Params};
