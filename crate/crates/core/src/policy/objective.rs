//! `V(pi) = (1 - lambda) E[u] - lambda * sum_{a,y,z} c(a, y, z)^2` and its
//! gradient, where `c(a, y, z) = sum_x pi(a | x) Delta(x, y, z)`.

use super::{Parameterization, Policy, UtilityTable};
use crate::fairness::NormExponent;
use crate::fairness::{delta_table, DeltaTable};
use crate::model::{ConditionalSet, DiscreteSpace, ModelParams};
use crate::{Error, Result};

/// Everything the objective needs from one model: the Delta table and the
/// per-`(x, a)` utility gain `P(x) sum_y P(y | x) u(y, a)`.
#[derive(Debug, Clone)]
pub struct PreparedModel {
    pub space: DiscreteSpace,
    pub delta: DeltaTable,
    pub gain: Vec<f64>,
}

impl PreparedModel {
    pub fn new(model: &ModelParams, utility: &UtilityTable, n_a: usize) -> Result<Self> {
        let mut space = model.space;
        space.n_a = n_a;
        utility.check_space(space)?;
        let c = ConditionalSet::from_model(model);
        let mut gain = vec![0.0; space.n_x * n_a];
        for x in 0..space.n_x {
            for a in 0..n_a {
                let eu: f64 = (0..space.n_y).map(|y| c.y_given_x(y, x) * utility.get(y, a)).sum();
                gain[x * n_a + a] = c.p_x[x] * eu;
            }
        }
        Ok(Self { space, delta: delta_table(model), gain })
    }

    pub fn for_policy(policy: &Policy, model: &ModelParams, utility: &UtilityTable) -> Result<Self> {
        crate::fairness::check_policy_model(policy, model)?;
        Self::new(model, utility, policy.space().n_a)
    }

    pub fn expected_utility(&self, probs: &[f64]) -> f64 {
        probs.iter().zip(&self.gain).map(|(p, g)| p * g).sum()
    }

    pub fn balance_power_sum(&self, probs: &[f64]) -> f64 {
        crate::fairness::policy_delta_products(probs, self.space.n_a, &self.delta)
            .iter()
            .map(|c| NormExponent::Two.apply(*c))
            .sum()
    }

    pub fn objective(&self, probs: &[f64], lambda: f64) -> f64 {
        (1.0 - lambda) * self.expected_utility(probs) - lambda * self.balance_power_sum(probs)
    }

    /// `dV / d pi(a | x)`, flat `[x][a]`.
    pub fn prob_gradient(&self, probs: &[f64], lambda: f64) -> Vec<f64> {
        let s = self.space;
        let yz = s.n_y * s.n_z;
        let c = crate::fairness::policy_delta_products(probs, s.n_a, &self.delta);
        let mut g: Vec<f64> = self.gain.iter().map(|v| (1.0 - lambda) * v).collect();
        if lambda != 0.0 {
            for x in 0..s.n_x {
                let d = &self.delta.values[x * yz..(x + 1) * yz];
                for a in 0..s.n_a {
                    let dot: f64 = c[a * yz..(a + 1) * yz].iter().zip(d).map(|(cv, dv)| cv * dv).sum();
                    g[x * s.n_a + a] -= 2.0 * lambda * dot;
                }
            }
        }
        g
    }

    /// Gradient with respect to the policy's own parameters.
    pub fn param_gradient(&self, policy: &Policy, lambda: f64) -> Vec<f64> {
        let g = self.prob_gradient(policy.probs(), lambda);
        chain_rule(policy, g)
    }
}

/// Maps `dV / d pi` to parameter space. For logits this is the softmax
/// Jacobian `d pi_a / d w_b = pi_a (1{a = b} - pi_b)`.
fn chain_rule(policy: &Policy, prob_grad: Vec<f64>) -> Vec<f64> {
    match policy.parameterization() {
        Parameterization::Simplex => prob_grad,
        Parameterization::Logits => {
            let n_a = policy.space().n_a;
            let mut out = vec![0.0; prob_grad.len()];
            for ((pi, g), dst) in policy.probs().chunks(n_a).zip(prob_grad.chunks(n_a)).zip(out.chunks_mut(n_a)) {
                let mean: f64 = pi.iter().zip(g).map(|(p, gv)| p * gv).sum();
                for b in 0..n_a {
                    dst[b] = pi[b] * (g[b] - mean);
                }
            }
            out
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::input(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    Ok(())
}

/// `sum_x P(x) sum_a pi(a | x) sum_y P(y | x) u(y, a)`.
pub fn expected_utility(policy: &Policy, model: &ModelParams, utility: &UtilityTable) -> Result<f64> {
    Ok(PreparedModel::for_policy(policy, model, utility)?.expected_utility(policy.probs()))
}

pub fn objective_value(policy: &Policy, model: &ModelParams, utility: &UtilityTable, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(PreparedModel::for_policy(policy, model, utility)?.objective(policy.probs(), lambda))
}

pub fn gradient(policy: &Policy, model: &ModelParams, utility: &UtilityTable, lambda: f64) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    Ok(PreparedModel::for_policy(policy, model, utility)?.param_gradient(policy, lambda))
}

/// Central differences of [`objective_value`] in parameter space. Simplex
/// parameters are perturbed without projection.
pub fn finite_difference_gradient(
    policy: &Policy,
    model: &ModelParams,
    utility: &UtilityTable,
    lambda: f64,
    h: f64,
) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    if !(h > 0.0) {
        return Err(Error::input("finite-difference step must be positive"));
    }
    let prepared = PreparedModel::for_policy(policy, model, utility)?;
    let base = policy.params().to_vec();
    let mut out = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut up = base.clone();
        up[i] += h;
        let mut down = base.clone();
        down[i] -= h;
        let vu = prepared.objective(policy.with_params(up).probs(), lambda);
        let vd = prepared.objective(policy.with_params(down).probs(), lambda);
        out.push((vu - vd) / (2.0 * h));
    }
    Ok(out)
}
