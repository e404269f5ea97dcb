//! Multipolar magnetic anomaly detection.
//!
//! Multipole field synthesis along a linear pass, the analytical
//! multipolar orthonormal basis, GLRT energy detectors with exact
//! chi-squared performance, and information-criterion order selection.

// `!(x > 0.0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detector;
pub mod error;
pub mod field;
pub mod harness;
pub mod mobf;
pub mod order_selection;
pub mod performance;
pub mod quad;

pub use error::{Error, Result};
