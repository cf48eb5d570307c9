//! Self-contained numeric kernels shared by the rest of the crate.

mod linsolve;
pub mod lp;
mod matrix;
mod neldermead;
mod roots;
mod svd;

pub use linsolve::{solve_linear, pseudo_inverse};
pub use lp::{solve_lp, Bound, LpOptions, LpOutcome, LpProblem, Sense};
pub use matrix::{dot, Matrix};
pub use neldermead::nelder_mead;
pub use roots::{bisect, BisectOptions};
pub use svd::{svd, svd_with, Svd, SvdOptions};
