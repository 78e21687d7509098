//! Spectral densities and polynomial asymptotics for Jacobi matrices with
//! slowly oscillating coefficients.
//!
//! Given recurrence coefficients `a_n > 0`, `b_n`, the crate evaluates
//! transfer-matrix blocks `X_{nN+i}(x)`, diagonalizes their ordered products
//! through iterated refinement, tracks `N`-shifted Turán determinants to
//! their limit `g`, and assembles the density `nu' = sqrt(-h) / (2 pi g)` of
//! an orthonormalizing measure on the elliptic bands together with the sine
//! law `sqrt(a_{nN+i-1}) p_{nN+i} ~ A sin(sum theta_j + eta)`.
//!
//! The truncation/periodization oracle (`density::periodized_density`)
//! recomputes the density through an exactly solvable comparison operator
//! and serves as an independent cross-check of the whole pipeline.

pub mod asym;
pub mod density;
pub mod diag;
pub mod error;
pub mod families;
pub mod mat2;
pub mod model;
pub mod scaled;
pub mod stolz;
pub mod transfer;
pub mod turan;

pub use error::{Error, Result};
pub use mat2::{CMat2, Mat2};
pub use model::{CoefficientModel, TruncatedModel};
pub use scaled::Scaled;
