//! Numerical Néron–Tate heights of Heegner points on the Jacobian of
//! X₀(N), via the explicit four-term height decomposition, together
//! with the supporting quadratic-field arithmetic, L-function
//! evaluation and asymptotic scans.

pub mod arith;
pub mod asymptotics;
pub mod cache;
pub mod error;
pub mod gzheight;
pub mod heegner;
pub mod lfunc;
pub mod quadfield;

pub use error::{Error, Result};
