//! Built-in p = 3 one-factor scenarios, one per singularity stratum.
//!
//! Each scenario fixes a true covariance with known learning coefficient:
//! the diagonal stratum (3p/4 = 2.25), the two-non-zero-off-diagonal
//! stratum ((2p-1)/2 = 2.5), and the generic one-factor stratum
//! (d_1/2 = 3). The fiber-ideal RLCT thresholds are twice the learning
//! coefficient minus p, i.e. 1.5, 2 and 3.

use crate::error::{Error, Result};
use crate::factor::{FactorModelPoint, FactorParams};
use crate::linalg::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    /// `Sigma_0 = I_3` (rank 0; stratum (c)).
    Diag3,
    /// `sigma_12` the only non-zero off-diagonal entry (stratum (b)).
    Two3,
    /// all off-diagonal entries non-zero (rank 1, generic; stratum (a)).
    Generic3,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Diag3, Scenario::Two3, Scenario::Generic3];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Diag3 => "diag3",
            Scenario::Two3 => "two3",
            Scenario::Generic3 => "generic3",
        }
    }

    pub fn parse(name: &str) -> Result<Scenario> {
        match name {
            "diag3" => Ok(Scenario::Diag3),
            "two3" => Ok(Scenario::Two3),
            "generic3" => Ok(Scenario::Generic3),
            other => Err(Error::InvalidInput(format!(
                "unknown scenario '{other}' (expected diag3, two3 or generic3)"
            ))),
        }
    }

    /// The true covariance point, with loading provenance and minimum rank.
    pub fn point(&self) -> FactorModelPoint {
        let loading = |v: &[f64]| {
            Matrix::from_rows(&v.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap()
        };
        let (lambda, min_rank) = match self {
            Scenario::Diag3 => (loading(&[0.0, 0.0, 0.0]), 0),
            Scenario::Two3 => (loading(&[1.0, 1.0, 0.0]), 1),
            Scenario::Generic3 => (loading(&[1.0, 1.0, 1.0]), 1),
        };
        let params = FactorParams::new(vec![1.0; 3], lambda).expect("valid params");
        FactorModelPoint::from_params(params, Some(min_rank)).expect("valid point")
    }

    /// The number of factors of the fitted model in every scenario.
    pub fn k(&self) -> usize {
        1
    }

    /// Known fiber-ideal RLCT threshold (volume-scaling exponent).
    pub fn fiber_exponent(&self) -> f64 {
        match self {
            Scenario::Diag3 => 1.5,
            Scenario::Two3 => 2.0,
            Scenario::Generic3 => 3.0,
        }
    }

    /// Known learning coefficient `(fiber_exponent + p)/2`.
    pub fn learning_coefficient(&self) -> f64 {
        (self.fiber_exponent() + 3.0) / 2.0
    }
}
