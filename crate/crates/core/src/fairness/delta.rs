use serde::{Deserialize, Serialize};

use super::NormExponent;
use crate::model::{ConditionalSet, DiscreteSpace, ModelParams};
use crate::policy::Policy;
use crate::{Error, Result};

/// Dependence residual `P(x, z | y) - P(x | y) P(z | y)`, flat `[x][y][z]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaTable {
    pub space: DiscreteSpace,
    pub values: Vec<f64>,
    /// Outcomes with zero mass; their slices are zero.
    pub zero_mass_outcomes: Vec<usize>,
}

impl DeltaTable {
    pub fn from_conditionals(c: &ConditionalSet) -> Self {
        let s = c.space;
        let mut values = vec![0.0; s.joint_len()];
        for x in 0..s.n_x {
            for y in 0..s.n_y {
                if c.is_degenerate(y) {
                    continue;
                }
                for z in 0..s.n_z {
                    values[s.xyz(x, y, z)] = c.xz_given_y(x, z, y) - c.x_given_y(x, y) * c.z_given_y(z, y);
                }
            }
        }
        Self { space: s, values, zero_mass_outcomes: c.zero_mass_outcomes.clone() }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.values[self.space.xyz(x, y, z)]
    }

    /// `sum_x Delta(x, y, z)` for every `(y, z)`, flat `[y][z]`.
    pub fn column_sums(&self) -> Vec<f64> {
        let s = self.space;
        let mut out = vec![0.0; s.n_y * s.n_z];
        for x in 0..s.n_x {
            for y in 0..s.n_y {
                for z in 0..s.n_z {
                    out[y * s.n_z + z] += self.get(x, y, z);
                }
            }
        }
        out
    }
}

pub fn delta_table(model: &ModelParams) -> DeltaTable {
    DeltaTable::from_conditionals(&ConditionalSet::from_model(model))
}

/// Per-`(a, y, z)` balance terms of one policy under one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub p: NormExponent,
    pub n_a: usize,
    pub n_y: usize,
    pub n_z: usize,
    /// `sum_x pi(a | x) Delta(x, y, z)`, flat `[a][y][z]`.
    pub per_term: Vec<f64>,
    /// `sum_{a,y,z} |per_term|^p`.
    pub aggregate_p: f64,
    /// `aggregate_p^(1/p)`.
    pub deviation: f64,
    pub zero_mass_outcomes: Vec<usize>,
}

impl BalanceReport {
    pub fn term(&self, a: usize, y: usize, z: usize) -> f64 {
        self.per_term[(a * self.n_y + y) * self.n_z + z]
    }
}

/// `c[a][y][z] = sum_x pi(a | x) Delta(x, y, z)` for a resolved `[x][a]` table.
pub(crate) fn policy_delta_products(probs: &[f64], n_a: usize, delta: &DeltaTable) -> Vec<f64> {
    let s = delta.space;
    let yz = s.n_y * s.n_z;
    let mut c = vec![0.0; n_a * yz];
    for x in 0..s.n_x {
        let d = &delta.values[x * yz..(x + 1) * yz];
        for a in 0..n_a {
            let w = probs[x * n_a + a];
            if w == 0.0 {
                continue;
            }
            for (acc, dv) in c[a * yz..(a + 1) * yz].iter_mut().zip(d) {
                *acc += w * dv;
            }
        }
    }
    c
}

pub fn balance_from_delta(probs: &[f64], n_a: usize, delta: &DeltaTable, p: NormExponent) -> BalanceReport {
    let per_term = policy_delta_products(probs, n_a, delta);
    let aggregate_p: f64 = per_term.iter().map(|&c| p.apply(c)).sum();
    BalanceReport {
        p,
        n_a,
        n_y: delta.space.n_y,
        n_z: delta.space.n_z,
        per_term,
        aggregate_p,
        deviation: p.root(aggregate_p),
        zero_mass_outcomes: delta.zero_mass_outcomes.clone(),
    }
}

pub(crate) fn check_policy_model(policy: &Policy, model: &ModelParams) -> Result<()> {
    if !policy.space().same_model_space(&model.space) {
        return Err(Error::input(format!(
            "policy space {:?} does not match model space {:?}",
            policy.space(),
            model.space
        )));
    }
    Ok(())
}

pub fn balance_deviation(policy: &Policy, model: &ModelParams, p: NormExponent) -> Result<BalanceReport> {
    check_policy_model(policy, model)?;
    Ok(balance_from_delta(policy.probs(), policy.space().n_a, &delta_table(model), p))
}
