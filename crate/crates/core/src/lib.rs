//! Bounds on the average causal effect (ACE) of a treatment in trials with
//! noncompliance, together with an exact finite-dimensional simulator of
//! quantum latent factors that shows which of those bounds survive.
//!
//! The crate is organised bottom-up:
//!
//! - [`trial_data`]: per-patient records and the observed distribution `P(y, x | z)`.
//! - [`classical`]: the 16-state canonical latent model (compliance x response types).
//! - [`simplex`] / [`bounds`]: natural bounds, the 8 + 8 instrumental inequalities
//!   and LP-tight bounds computed with a dense two-phase simplex.
//! - [`linalg`] / [`operator`]: complex matrices, Jacobi eigenvalues, states,
//!   effects, Kraus maps and instruments in the observable picture.
//! - [`quantum`]: the quantum latent-factor model with counterfactuals, the
//!   exclusion check and operator-inequality certificates.
//! - [`epr`]: the singlet-state construction, CHSH and angle scanning.

// Index loops over the small probability tables read better than iterator chains.
#![allow(clippy::needless_range_loop)]

pub mod bounds;
pub mod classical;
pub mod epr;
mod error;
pub mod linalg;
pub mod operator;
pub mod quantum;
pub mod simplex;
pub mod trial_data;

pub use error::{Error, Result};

/// Default tolerance for probability comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;
