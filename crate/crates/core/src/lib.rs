//! Minimax and generalized Bayes estimation of a nonnegative location
//! parameter with unknown scale under spherically symmetric models.
//!
//! The crate is organised bottom-up: [`numerics`] (quadrature, roots,
//! minimization, the Student-like family), [`model`] (densities, setup,
//! sampling), [`loss`], [`estimators`] (MRE constants and shrink functions),
//! [`risk`] (risk curves, dominance and sign-change diagnostics) and
//! [`suite`] (the acceptance battery).

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod exec;
pub mod io;
pub mod loss;
pub mod model;
pub mod numerics;
pub mod risk;
pub mod suite;

pub use error::{Error, ErrorClass, Result};
pub use exec::Execution;
