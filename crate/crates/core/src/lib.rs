//! Low-rank inducing norms.
//!
//! Norm values ([`gauges`]), vector proxes and dual-ball projections
//! ([`vec_prox`]), their matrix versions through the SVD ([`mat_prox`]),
//! independent optimality checks ([`oracle`]) and first-order solvers for
//! matrix completion and regularized least squares ([`solvers`]). The `lrin`
//! binary in [`cli`] wraps these behind CSV/JSON files.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod gauges;
pub mod instances;
pub mod io;
pub mod mat_prox;
pub mod oracle;
pub mod rng;
pub mod solvers;
pub mod vec_prox;

pub use error::{LrinError, Result};
pub use gauges::{NormFlavor, NormSpec, ScaledNorm};
pub use vec_prox::SearchMode;
