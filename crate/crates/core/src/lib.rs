//! Numerical toolkit for the exterior Dirichlet problem for k-Hessian
//! equations `sigma_k(lambda(D^2 u)) = 1` with prescribed quadratic behavior
//! at infinity.
//!
//! The crate is organized around the constructive ingredients of the
//! existence argument:
//!
//! - [`symfun`]: elementary symmetric functions, deleted variants, the
//!   Garding cone, and the derived quantities `A_k^i`, `h_k`, `theta`, `c*`.
//! - [`spectral`]: the rank-one identity for `sigma_k(lambda(diag(p) - beta q q^T))`,
//!   characteristic polynomials, and a Jacobi eigenvalue oracle.
//! - [`subsolution`]: the generalized symmetric subsolution family, its
//!   far-field constant `mu(alpha)` and inverse, decay-exponent fits, and a
//!   numerical rigidity falsifier.
//! - [`barrier`]: quadratic boundary barriers on strictly convex domains,
//!   their envelope, the proof constants, and the sub/supersolution sandwich.
//! - [`solver`]: a damped-Newton finite-difference solver for the truncated
//!   exterior problem in three dimensions, clamped to the sandwich.

pub mod barrier;
pub mod domain;
pub mod error;
pub mod fit;
pub(crate) mod linalg;
pub mod quad;
pub mod sample;
pub mod solver;
pub mod spectral;
pub mod subsolution;
pub mod symfun;

pub use error::{Error, Result};
