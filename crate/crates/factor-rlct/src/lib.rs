//! Learning coefficients for factor analysis models.
//!
//! Factor analysis explains a `p`-dimensional covariance as
//! `diag(psi) + Lambda Lambda^T` with a `p x k` loading matrix. At singular
//! points of that parametrization the usual BIC penalty `(d/2) log n` is
//! wrong; the correct coefficient of `log n` in the log marginal likelihood
//! is the model's *learning coefficient* (a real log canonical threshold),
//! a positive rational that depends on where the true covariance sits.
//!
//! This crate computes those coefficients three independent ways and puts
//! them to work for selecting the number of factors:
//!
//! * [`table`] — exact closed forms: the general upper bound, the exact
//!   values for minimum rank 0, 1 and `k`, the saturated case, and the
//!   special one-factor stratum with two non-zero off-diagonal entries.
//! * [`newton`] — exact RLCTs of monomial ideals from their Newton
//!   polyhedra, driven by the exact rational LP in [`linprog`].
//! * [`volume`] — a Monte-Carlo oracle: level-set volumes of the fiber
//!   ideal's sum of squares scale like `eps^lambda`, so a log-log regression
//!   recovers the threshold numerically.
//! * [`evidence`] — a second oracle: marginal likelihoods estimated by
//!   prior sampling, the Watanabe deviation `F_n`, slope fits against
//!   `log n`, and BIC/sBIC scoring with the closed-form penalty table.
//!
//! The runnable examples (`cargo run --example ...`) walk through each
//! capability; the `factor-rlct` binary exposes the same operations as thin
//! subcommands.

pub mod cli;
pub mod error;
pub mod evidence;
pub mod factor;
pub mod io;
pub mod linalg;
pub mod linprog;
pub mod mle;
pub mod newton;
pub mod plot;
pub mod rational;
pub mod rlct;
pub mod scenarios;
pub mod seeds;
pub mod table;
pub mod volume;

pub use error::{Error, Result};
pub use factor::{FactorModelPoint, FactorParams, SampleCovariance};
pub use rational::Rat;
pub use rlct::RlctPair;
pub use table::{Exactness, LearningCoefficient};
