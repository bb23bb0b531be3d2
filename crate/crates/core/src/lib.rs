//! Blow-up analysis for semilinear Klein-Gordon equations on flat FLRW
//! backgrounds.

// Negated comparisons are how NaN inputs fail the checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod cone;
pub mod cosmology;
pub mod error;
pub mod numeric;
pub mod ode;
pub mod output;
pub mod pde;
pub mod runner;
pub mod scenario;

pub use error::{Error, Result};
