//! Balance and calibration deviations of a decision rule under a model, a
//! posterior, or the posterior's marginal model, plus checkers for the
//! trivial-rule, impossibility and accuracy results.

mod bayes;
mod calibration;
mod certificate;
mod delta;

pub use bayes::{bayes_balance, marginal_balance, BayesBalance, DEFAULT_EVAL_SAMPLES, DEFAULT_TRAIN_SAMPLES};
pub use calibration::{calibration_deviation, impossibility_check, CalibrationReport, ImpossibilityReport};
pub use certificate::{accuracy_certificate, conditional_gap, AccuracyCertificate};
pub use delta::{balance_deviation, balance_from_delta, delta_table, BalanceReport, DeltaTable};
pub(crate) use delta::{check_policy_model, policy_delta_products};

use serde::{Deserialize, Serialize};

use crate::Error;

/// Exponent `p` in `sum |.|^p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(try_from = "u8", into = "u8")]
pub enum NormExponent {
    #[default]
    One,
    Two,
}

impl NormExponent {
    pub fn value(self) -> u8 {
        match self {
            NormExponent::One => 1,
            NormExponent::Two => 2,
        }
    }

    #[inline]
    pub fn apply(self, v: f64) -> f64 {
        match self {
            NormExponent::One => v.abs(),
            NormExponent::Two => v * v,
        }
    }

    /// `f^(1/p)`.
    pub fn root(self, f: f64) -> f64 {
        match self {
            NormExponent::One => f,
            NormExponent::Two => f.sqrt(),
        }
    }
}

impl TryFrom<u8> for NormExponent {
    type Error = Error;

    fn try_from(p: u8) -> Result<Self, Error> {
        match p {
            1 => Ok(NormExponent::One),
            2 => Ok(NormExponent::Two),
            other => Err(Error::input(format!("norm exponent must be 1 or 2, got {other}"))),
        }
    }
}

impl From<NormExponent> for u8 {
    fn from(p: NormExponent) -> u8 {
        p.value()
    }
}
