//! Score conversions between tests, test discernment orders, authentication
//! rates and optimal mechanisms when an agent can be tested but not fully
//! verified.

pub mod authentication;
pub mod continuous;
pub mod discernment;
pub mod error;
pub mod harness;
pub mod lp;
pub mod markov;
pub mod mechanisms;
pub mod numerics;

pub use error::{Error, Result};

/// Tolerance for probability identities on finite score sets.
pub const PROB_TOL: f64 = 1e-12;

/// Tolerance used when validating a conversion witness.
pub const WITNESS_TOL: f64 = 1e-10;

/// Default tolerance for incentive-compatibility checks.
pub const IC_TOL: f64 = 1e-6;
