//! Decision rules that trade expected utility against balance (a fairness
//! notion: action independent of the sensitive attribute given the outcome)
//! when the world model is uncertain.
//!
//! * [`model`]: discrete world models, Dirichlet and finite-support beliefs.
//! * [`fairness`]: balance/calibration deviations and the related checkers.
//! * [`policy`]: policies, the utility/balance objective, gradient trainers.
//! * [`data`]: CSV ingestion and discretization.
//! * [`sequential`]: censored-feedback allocation with myopic retraining.
//! * [`experiment`]: curve generation and CSV output used by the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod data;
pub mod error;
pub mod experiment;
pub mod fairness;
pub mod model;
pub mod policy;
pub mod rng;
pub mod sequential;

pub use error::{Error, Result};
