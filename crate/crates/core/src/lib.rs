//! Robust regression toolkit: worst-case evaluation of regression losses under
//! data uncertainty, the regularizers those uncertainty sets are equivalent to,
//! and the bounds that remain when they are not.
//!
//! Module map:
//!
//! * [`numerics`]: dense matrices, one-sided Jacobi SVD, a bounded-variable
//!   simplex LP solver, bisection and Nelder–Mead.
//! * [`norms`]: vector and matrix (semi)norms, dual exponents and dual-norm
//!   maximizers.
//! * [`discrepancy`]: the ratio `max ||u||_a / ||u||_b` and its maximizers.
//! * [`robustify`]: uncertainty sets for vector regression, exact worst-case
//!   losses, adversarial perturbations and equivalence classification.
//! * [`solvers`]: nominal, regularized and robust linear regression.
//! * [`lqs`]: least quantile of squares, nominal and robust, by branch and
//!   bound over SOS-1 pairs.
//! * [`matrix_reg`]: linear-map uncertainty for matrix estimation, nuclear norm
//!   completion, PCA and robust PCA.

pub mod discrepancy;
pub mod error;
pub mod lqs;
pub mod matrix_reg;
pub mod norms;
pub mod numerics;
pub mod robustify;
pub mod sampling;
pub mod solvers;

pub use error::{Error, Result};
pub use norms::{Exponent, MatrixNormSpec};
pub use numerics::Matrix;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
