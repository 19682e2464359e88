//! Consistent variable selection with a weighted ℓ1 penalty.
//!
//! The crate targets approximating regression models: the regression function
//! `f` is approximated by linear combinations of a finite dictionary
//! `f_1, ..., f_M`, and the selection target is the support of the sparsest
//! combination that lies within an `L2` ball around `f`. It provides
//!
//! - [`dictionary`]: dictionaries, scenarios (design measure, noise, `f`),
//!   seeded sampling and exact population moments;
//! - [`solver`]: the weighted Lasso with data-dependent weights
//!   `ω_j = r‖f_j‖_n`, solved by coordinate descent on the unit-weight
//!   rescaled problem, with an optimality certificate;
//! - [`oracle`]: exhaustive search for the population target support;
//! - [`diagnostics`]: assumption audits, tuning sequences and probability
//!   bound calculators;
//! - [`harness`]: seeded Monte Carlo replicates and their aggregation.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the parallel
//! experiment driver and the command line live in the `lasso-select` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod diagnostics;
pub mod dictionary;
mod error;
pub mod harness;
pub mod linalg;
pub mod oracle;
pub mod solver;

pub use error::{Error, Result};
pub use linalg::Matrix;
