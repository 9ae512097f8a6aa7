//! Strategic-robustness certificates for (local) Nash equilibria of continuous
//! games on polyhedral action spaces, together with the regularized learning
//! dynamics (follow-the-regularized-leader and mirror descent) used to probe
//! their dynamic stability.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! parallel sweeps live in the `robust-eq` companion crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod certify;
pub mod cone;
pub mod domain;
pub mod dynamics;
mod error;
pub mod feedback;
pub mod game;
pub mod linalg;
pub mod lp;
pub mod regularizer;
pub mod rng;
pub mod sampling;

pub use certify::{classify_equilibrium, RobustnessCertificate, Tolerances, Verdict};
pub use domain::{PlayerDomain, ProductDomain};
pub use error::{Error, Result};
pub use game::{Game, GameSpec};
pub use regularizer::{Kernel, Regularizer, RegularizerSpec};
