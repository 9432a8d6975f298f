//! Closed-form laws of the telegraph process and the telegraph meander,
//! with Monte Carlo, quadrature and finite-difference cross-checks.

pub mod error;
pub mod kac;
mod kernel;
pub mod meander;
pub mod model;
pub mod pde;
pub mod quad;
pub mod report;
pub mod sim;
pub mod special;
pub mod suites;
pub mod telegraph;

pub use error::{Error, Result};
pub use model::{Atom, InitialVelocity, LawValue, MixedLaw, ModelParams, Velocity};
pub use report::{Status, VerificationReport};
