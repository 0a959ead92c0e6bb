//! Critical metrology with a driven-dissipative tight-binding chain coupled to
//! a single cavity mode.

// `!(x < tol)` is written on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod electron;
pub mod error;
pub mod fisher;
pub mod fock;
pub mod gaussian;
pub mod linalg;
pub mod model;
pub mod sweep;

pub use error::{Error, Result};
pub use model::{Regime, SystemParams};
