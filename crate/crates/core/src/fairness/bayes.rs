use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::delta::{balance_deviation, check_policy_model};
use super::NormExponent;
use crate::model::Belief;
use crate::policy::Policy;
use crate::rng::{child_seed, rng_from_seed};
use crate::{Error, Result};

/// Posterior samples per training step.
pub const DEFAULT_TRAIN_SAMPLES: usize = 16;
/// Posterior samples for evaluation-time estimates.
pub const DEFAULT_EVAL_SAMPLES: usize = 512;

/// Posterior-averaged balance deviation `f = E_belief[C_p(pi, theta)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesBalance {
    pub p: NormExponent,
    /// `f`, the power-sum form.
    pub value: f64,
    /// `f^(1/p)`.
    pub deviation: f64,
    /// Monte Carlo standard error of `value`; zero when computed exactly.
    pub std_error: f64,
    pub samples: usize,
    pub exact: bool,
}

pub fn bayes_balance(policy: &Policy, belief: &Belief, p: NormExponent, k: usize, seed: u64) -> Result<BayesBalance> {
    if k == 0 {
        return Err(Error::input("bayes_balance needs at least one posterior sample"));
    }
    match belief {
        Belief::Finite(b) => {
            let mut value = 0.0;
            for (m, w) in b.models.iter().zip(&b.weights) {
                if *w > 0.0 {
                    value += w * balance_deviation(policy, m, p)?.aggregate_p;
                }
            }
            Ok(BayesBalance {
                p,
                value,
                deviation: p.root(value),
                std_error: 0.0,
                samples: b.models.len(),
                exact: true,
            })
        }
        Belief::Dirichlet(b) => {
            let probe = b.mean();
            check_policy_model(policy, &probe)?;
            let terms: Vec<f64> = (0..k)
                .into_par_iter()
                .map(|i| {
                    let model = b.sample(&mut rng_from_seed(child_seed(seed, i as u64)));
                    balance_deviation(policy, &model, p).map(|r| r.aggregate_p)
                })
                .collect::<Result<_>>()?;
            let n = terms.len() as f64;
            let value = terms.iter().sum::<f64>() / n;
            let var =
                if terms.len() > 1 { terms.iter().map(|t| (t - value).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
            Ok(BayesBalance {
                p,
                value,
                deviation: p.root(value),
                std_error: (var / n).sqrt(),
                samples: k,
                exact: false,
            })
        }
    }
}

/// Balance deviation (power-sum form) under the marginal model.
pub fn marginal_balance(policy: &Policy, belief: &Belief, p: NormExponent) -> Result<f64> {
    Ok(balance_deviation(policy, &belief.marginal_model(), p)?.aggregate_p)
}
