use serde::{Deserialize, Serialize};

use crate::model::{Belief, ConditionalSet, ModelParams};
use crate::rng::{child_seed, rng_from_seed};
use crate::{Error, Result};

/// How far a belief's balance guarantee transfers to the true model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCertificate {
    pub epsilon: f64,
    /// Belief mass on models whose conditionals are more than `epsilon` away.
    pub delta: f64,
    /// Balance deviation (p = 1) achieved under the belief.
    pub alpha: f64,
    /// `alpha + 2 |A| |Z| |Y| (epsilon + delta)`.
    pub bound: f64,
    pub exact: bool,
    pub samples: usize,
}

/// `max_{x,y,z} max(|P(x|y,z) - P*(x|y,z)|, |P(x|y) - P*(x|y)|)`.
pub fn conditional_gap(model: &ModelParams, truth: &ModelParams) -> f64 {
    let a = ConditionalSet::from_model(model);
    let b = ConditionalSet::from_model(truth);
    let s = truth.space;
    let mut gap: f64 = 0.0;
    for x in 0..s.n_x {
        for y in 0..s.n_y {
            gap = gap.max((a.x_given_y(x, y) - b.x_given_y(x, y)).abs());
            for z in 0..s.n_z {
                gap = gap.max((a.x_given_yz(x, y, z) - b.x_given_yz(x, y, z)).abs());
            }
        }
    }
    gap
}

pub fn accuracy_certificate(
    belief: &Belief,
    truth: &ModelParams,
    epsilon: f64,
    k: usize,
    seed: u64,
    alpha: f64,
) -> Result<AccuracyCertificate> {
    if !(epsilon > 0.0) {
        return Err(Error::input("epsilon must be positive"));
    }
    if !belief.space().same_model_space(&truth.space) {
        return Err(Error::input("belief and true model live on different spaces"));
    }
    let (delta, exact, samples) = match belief {
        Belief::Finite(b) => {
            let far: f64 = b
                .models
                .iter()
                .zip(&b.weights)
                .filter(|(m, _)| conditional_gap(m, truth) > epsilon)
                .map(|(_, w)| w)
                .sum();
            (far.clamp(0.0, 1.0), true, b.models.len())
        }
        Belief::Dirichlet(b) => {
            if k == 0 {
                return Err(Error::input("Monte Carlo certificate needs k >= 1"));
            }
            let far = (0..k)
                .filter(|&i| {
                    let m = b.sample(&mut rng_from_seed(child_seed(seed, i as u64)));
                    conditional_gap(&m, truth) > epsilon
                })
                .count();
            (far as f64 / k as f64, false, k)
        }
    };
    let s = truth.space;
    let bound = alpha + 2.0 * (s.n_a * s.n_z * s.n_y) as f64 * (epsilon + delta);
    Ok(AccuracyCertificate { epsilon, delta, alpha, bound, exact, samples })
}
