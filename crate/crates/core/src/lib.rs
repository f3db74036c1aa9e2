//! Likelihood-free Bayesian inference by rejection sampling.
//!
//! Two samplers share one acceptance machinery:
//!
//! * [`abc`]: classic rejection ABC. Propose from the prior, simulate from the
//!   mechanistic model, keep the proposals whose summary statistics land close
//!   to the observed ones.
//! * [`aabc`]: ABC for *limited-generative* models. Only a small pool of
//!   mechanistic realizations is simulated; every later proposal borrows the
//!   data set of its nearest pooled parameter and resamples it with flat
//!   Dirichlet weights.
//!
//! The [`balsel`] and [`admix`] modules provide the two example models, and
//! [`eval`] implements the replicate-study harness (RSSE/RMSE, percent excess,
//! KS convergence diagnostics).

pub mod aabc;
pub mod abc;
pub mod admix;
pub mod balsel;
pub mod error;
pub mod eval;
pub mod model;
pub mod rng;

pub use error::{Error, Result};
