use serde::{Deserialize, Serialize};

use super::simplex::project_to_simplex;
use crate::model::DiscreteSpace;
use crate::rng::SimRng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Parameterization {
    /// Unconstrained `w[x][a]`, resolved by a row-wise softmax.
    #[default]
    Logits,
    /// Rows of `pi(. | x)` stored directly and kept on the simplex by
    /// projection.
    Simplex,
}

/// A stochastic decision rule over `x`.
///
/// `params` and the resolved table `probs` are both flat `[x][a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    space: DiscreteSpace,
    parameterization: Parameterization,
    params: Vec<f64>,
    probs: Vec<f64>,
}

fn softmax_rows(params: &[f64], n_a: usize) -> Vec<f64> {
    let mut out = vec![0.0; params.len()];
    for (row, dst) in params.chunks(n_a).zip(out.chunks_mut(n_a)) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (d, w) in dst.iter_mut().zip(row) {
            *d = (w - max).exp();
            total += *d;
        }
        for d in dst.iter_mut() {
            *d /= total;
        }
    }
    out
}

impl Policy {
    /// The uniform rule, `pi(a | x) = 1 / |A|`.
    pub fn uniform(space: DiscreteSpace, parameterization: Parameterization) -> Self {
        let n = space.n_x * space.n_a;
        let params = match parameterization {
            Parameterization::Logits => vec![0.0; n],
            Parameterization::Simplex => vec![1.0 / space.n_a as f64; n],
        };
        Self::from_params_unchecked(space, parameterization, params)
    }

    pub fn from_logits(space: DiscreteSpace, logits: Vec<f64>) -> Result<Self> {
        if logits.len() != space.n_x * space.n_a || logits.iter().any(|w| !w.is_finite()) {
            return Err(Error::input("logits must be a finite [x][a] table"));
        }
        Ok(Self::from_params_unchecked(space, Parameterization::Logits, logits))
    }

    pub fn from_simplex_rows(space: DiscreteSpace, rows: Vec<f64>) -> Result<Self> {
        if rows.len() != space.n_x * space.n_a {
            return Err(Error::input("simplex policy must be an [x][a] table"));
        }
        for (x, row) in rows.chunks(space.n_a).enumerate() {
            let total: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                return Err(Error::input(format!("policy row {x} is not a probability vector")));
            }
        }
        Ok(Self::from_params_unchecked(space, Parameterization::Simplex, rows))
    }

    /// Ignores `x`: every row equals `p_a`.
    pub fn trivial(space: DiscreteSpace, p_a: &[f64]) -> Result<Self> {
        if p_a.len() != space.n_a {
            return Err(Error::input("action distribution has the wrong length"));
        }
        Self::from_simplex_rows(space, p_a.iter().copied().cycle().take(space.n_x * space.n_a).collect())
    }

    /// One-hot rows, `pi(actions[x] | x) = 1`.
    pub fn deterministic(space: DiscreteSpace, actions: &[usize]) -> Result<Self> {
        if actions.len() != space.n_x || actions.iter().any(|&a| a >= space.n_a) {
            return Err(Error::input("deterministic rule needs one valid action per x"));
        }
        let mut rows = vec![0.0; space.n_x * space.n_a];
        for (x, &a) in actions.iter().enumerate() {
            rows[space.xa(x, a)] = 1.0;
        }
        Ok(Self::from_params_unchecked(space, Parameterization::Simplex, rows))
    }

    /// Resolves raw parameters without validating them. Simplex parameters
    /// are used as-is, which is what finite-difference probes need.
    pub(crate) fn from_params_unchecked(
        space: DiscreteSpace,
        parameterization: Parameterization,
        params: Vec<f64>,
    ) -> Self {
        let probs = match parameterization {
            Parameterization::Logits => softmax_rows(&params, space.n_a),
            Parameterization::Simplex => params.clone(),
        };
        Self { space, parameterization, params, probs }
    }

    pub(crate) fn with_params(&self, params: Vec<f64>) -> Self {
        Self::from_params_unchecked(self.space, self.parameterization, params)
    }

    /// Takes an ascent step of size `lr` along `direction` (parameter space).
    /// Simplex rows are projected back afterwards.
    pub fn step(&self, direction: &[f64], lr: f64) -> Self {
        let mut params: Vec<f64> = self.params.iter().zip(direction).map(|(w, g)| w + lr * g).collect();
        if self.parameterization == Parameterization::Simplex {
            for row in params.chunks_mut(self.space.n_a) {
                let projected = project_to_simplex(row);
                row.copy_from_slice(&projected);
            }
        }
        self.with_params(params)
    }

    /// Re-expresses the same rule under another parameterization. Logits of
    /// zero-probability actions are clamped to a large negative value.
    pub fn convert(&self, parameterization: Parameterization) -> Self {
        if parameterization == self.parameterization {
            return self.clone();
        }
        let params = match parameterization {
            Parameterization::Simplex => self.probs.clone(),
            Parameterization::Logits => self.probs.iter().map(|p| p.ln().max(-700.0)).collect(),
        };
        Self::from_params_unchecked(self.space, parameterization, params)
    }

    pub fn space(&self) -> DiscreteSpace {
        self.space
    }

    pub fn parameterization(&self) -> Parameterization {
        self.parameterization
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Resolved `pi(a | x)` table, `[x][a]`.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn prob(&self, x: usize, a: usize) -> f64 {
        self.probs[self.space.xa(x, a)]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        let n_a = self.space.n_a;
        &self.probs[x * n_a..(x + 1) * n_a]
    }

    pub fn sample_action(&self, x: usize, rng: &mut SimRng) -> usize {
        crate::model::sample_index(self.row(x), rng)
    }

    /// Largest deviation of any resolved row sum from one.
    pub fn max_row_error(&self) -> f64 {
        self.probs.chunks(self.space.n_a).map(|r| (r.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn is_x_independent(&self, tol: f64) -> bool {
        let first = self.row(0);
        (1..self.space.n_x).all(|x| self.row(x).iter().zip(first).all(|(a, b)| (a - b).abs() <= tol))
    }
}

#[derive(Serialize, Deserialize)]
struct PolicyFile {
    space: DiscreteSpace,
    parameterization: Parameterization,
    params: Vec<Vec<f64>>,
}

impl Serialize for Policy {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PolicyFile {
            space: self.space,
            parameterization: self.parameterization,
            params: self.params.chunks(self.space.n_a).map(|r| r.to_vec()).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Policy {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let file = PolicyFile::deserialize(deserializer)?;
        file.space.validate().map_err(serde::de::Error::custom)?;
        if file.params.len() != file.space.n_x {
            return Err(serde::de::Error::custom("policy needs one parameter row per x"));
        }
        let flat: Vec<f64> = file.params.into_iter().flatten().collect();
        match file.parameterization {
            Parameterization::Logits => Policy::from_logits(file.space, flat),
            Parameterization::Simplex => Policy::from_simplex_rows(file.space, flat),
        }
        .map_err(serde::de::Error::custom)
    }
}
