//! Adaptive P1 finite elements for transmission problems with a
//! sign-changing coefficient, with a residual a posteriori error estimator
//! and numerical checks of discrete T-coercivity.

pub mod adapt;
pub mod assembly;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod mesh;
pub mod problem;
pub mod quadrature;
pub mod sparse;
pub mod tcoercivity;

pub use error::{Error, Result};
