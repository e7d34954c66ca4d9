use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::{check_row, normalize_row, ConditionalSet, Dataset, DiscreteSpace, Record};
use crate::rng::{rng_from_seed, SimRng};
use crate::{Error, Result};

/// Full multinomial parameterization of one world model.
///
/// `p_x_given_z` is indexed `[z][x]` and `p_y_given_xz` is indexed `[x][z][y]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct ModelParams {
    pub space: DiscreteSpace,
    pub p_z: Vec<f64>,
    pub p_x_given_z: Vec<Vec<f64>>,
    pub p_y_given_xz: Vec<Vec<Vec<f64>>>,
}

#[derive(Deserialize)]
struct RawModel {
    space: DiscreteSpace,
    p_z: Vec<f64>,
    p_x_given_z: Vec<Vec<f64>>,
    p_y_given_xz: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<RawModel> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        ModelParams::new(raw.space, raw.p_z, raw.p_x_given_z, raw.p_y_given_xz)
    }
}

/// Joint probability table `P(x, y, z)` stored flat in `[x][y][z]` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub space: DiscreteSpace,
    pub values: Vec<f64>,
}

impl Joint {
    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.values[self.space.xyz(x, y, z)]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Total-variation distance `0.5 * sum |p - q|`.
    pub fn total_variation(&self, other: &Joint) -> f64 {
        0.5 * self.values.iter().zip(&other.values).map(|(p, q)| (p - q).abs()).sum::<f64>()
    }
}

pub(crate) fn sample_dirichlet_row(alpha: &[f64], rng: &mut SimRng) -> Vec<f64> {
    let draws: Vec<f64> =
        alpha.iter().map(|&a| Gamma::new(a, 1.0).expect("positive pseudo-count").sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 && total.is_finite() {
        draws.iter().map(|g| g / total).collect()
    } else {
        // every gamma draw underflowed; fall back to the Dirichlet mean
        normalize_row(alpha)
    }
}

impl ModelParams {
    pub fn new(
        space: DiscreteSpace,
        p_z: Vec<f64>,
        p_x_given_z: Vec<Vec<f64>>,
        p_y_given_xz: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        space.validate()?;
        check_row(&p_z, space.n_z, "p_z")?;
        if p_x_given_z.len() != space.n_z {
            return Err(Error::input("p_x_given_z must have one row per z"));
        }
        for (z, row) in p_x_given_z.iter().enumerate() {
            check_row(row, space.n_x, &format!("p_x_given_z[{z}]"))?;
        }
        if p_y_given_xz.len() != space.n_x {
            return Err(Error::input("p_y_given_xz must have one block per x"));
        }
        for (x, block) in p_y_given_xz.iter().enumerate() {
            if block.len() != space.n_z {
                return Err(Error::input(format!("p_y_given_xz[{x}] must have one row per z")));
            }
            for (z, row) in block.iter().enumerate() {
                check_row(row, space.n_y, &format!("p_y_given_xz[{x}][{z}]"))?;
            }
        }
        Ok(Self { space, p_z, p_x_given_z, p_y_given_xz })
    }

    /// Every factor uniform.
    pub fn uniform(space: DiscreteSpace) -> Self {
        let uz = vec![1.0 / space.n_z as f64; space.n_z];
        let ux = vec![vec![1.0 / space.n_x as f64; space.n_x]; space.n_z];
        let uy = vec![vec![vec![1.0 / space.n_y as f64; space.n_y]; space.n_z]; space.n_x];
        Self { space, p_z: uz, p_x_given_z: ux, p_y_given_xz: uy }
    }

    /// Draws every factor row independently from a flat Dirichlet(1, ..., 1).
    pub fn random(space: DiscreteSpace, rng: &mut SimRng) -> Self {
        Self::random_with_concentration(space, 1.0, rng)
    }

    pub fn random_with_concentration(space: DiscreteSpace, alpha: f64, rng: &mut SimRng) -> Self {
        let row = |n: usize, rng: &mut SimRng| sample_dirichlet_row(&vec![alpha; n], rng);
        let p_z = row(space.n_z, rng);
        let p_x_given_z = (0..space.n_z).map(|_| row(space.n_x, rng)).collect();
        let p_y_given_xz = (0..space.n_x).map(|_| (0..space.n_z).map(|_| row(space.n_y, rng)).collect()).collect();
        Self { space, p_z, p_x_given_z, p_y_given_xz }
    }

    pub fn joint_probability(&self, x: usize, y: usize, z: usize) -> Result<f64> {
        self.space.check_record(x, y, z)?;
        Ok(self.joint_unchecked(x, y, z))
    }

    #[inline]
    fn joint_unchecked(&self, x: usize, y: usize, z: usize) -> f64 {
        self.p_z[z] * self.p_x_given_z[z][x] * self.p_y_given_xz[x][z][y]
    }

    pub fn joint(&self) -> Joint {
        let s = self.space;
        let mut values = vec![0.0; s.joint_len()];
        for x in 0..s.n_x {
            for y in 0..s.n_y {
                for z in 0..s.n_z {
                    values[s.xyz(x, y, z)] = self.joint_unchecked(x, y, z);
                }
            }
        }
        Joint { space: s, values }
    }

    /// Re-factors a joint table into the three conditional factors. Rows
    /// conditioned on zero-mass events are set uniform.
    pub fn from_joint(joint: &Joint) -> Self {
        let s = joint.space;
        let uniform = |n: usize| vec![1.0 / n as f64; n];
        let mut p_z = vec![0.0; s.n_z];
        let mut xz = vec![vec![0.0; s.n_x]; s.n_z];
        for x in 0..s.n_x {
            for z in 0..s.n_z {
                let m: f64 = (0..s.n_y).map(|y| joint.get(x, y, z)).sum();
                xz[z][x] = m;
            }
        }
        for z in 0..s.n_z {
            p_z[z] = xz[z].iter().sum();
        }
        let p_z = if p_z.iter().sum::<f64>() > 0.0 { normalize_row(&p_z) } else { uniform(s.n_z) };
        let p_x_given_z = xz
            .iter()
            .map(|row| if row.iter().sum::<f64>() > 0.0 { normalize_row(row) } else { uniform(s.n_x) })
            .collect();
        let p_y_given_xz = (0..s.n_x)
            .map(|x| {
                (0..s.n_z)
                    .map(|z| {
                        let row: Vec<f64> = (0..s.n_y).map(|y| joint.get(x, y, z)).collect();
                        if row.iter().sum::<f64>() > 0.0 {
                            normalize_row(&row)
                        } else {
                            uniform(s.n_y)
                        }
                    })
                    .collect()
            })
            .collect();
        Self { space: s, p_z, p_x_given_z, p_y_given_xz }
    }

    /// Exact conditionals. Fails with `DegenerateOutcome` when some outcome
    /// has zero mass; use [`ConditionalSet::from_model`] to get the tables
    /// with such slices zeroed and flagged instead.
    pub fn conditional_tables(&self) -> Result<ConditionalSet> {
        let set = ConditionalSet::from_model(self);
        match set.zero_mass_outcomes.first() {
            Some(&outcome) => Err(Error::DegenerateOutcome { outcome }),
            None => Ok(set),
        }
    }

    /// Draws `n` i.i.d. records, each as `z -> x -> y`.
    pub fn sample_dataset(&self, n: usize, seed: u64) -> Dataset {
        let mut rng = rng_from_seed(seed);
        self.sample_dataset_with(n, &mut rng)
    }

    pub fn sample_dataset_with(&self, n: usize, rng: &mut SimRng) -> Dataset {
        let records = (0..n)
            .map(|_| {
                let z = sample_index(&self.p_z, rng);
                let x = sample_index(&self.p_x_given_z[z], rng);
                let y = sample_index(&self.p_y_given_xz[x][z], rng);
                Record { x, y, z }
            })
            .collect();
        Dataset { space: self.space, records }
    }

    /// Smallest/largest row-sum error across all factors.
    pub fn max_row_error(&self) -> f64 {
        let err = |r: &[f64]| (r.iter().sum::<f64>() - 1.0).abs();
        let mut worst = err(&self.p_z);
        for row in &self.p_x_given_z {
            worst = worst.max(err(row));
        }
        for block in &self.p_y_given_xz {
            for row in block {
                worst = worst.max(err(row));
            }
        }
        worst
    }
}

/// Inverse-CDF draw from a probability vector.
pub(crate) fn sample_index(probs: &[f64], rng: &mut SimRng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left `acc` slightly below 1; return the last positive entry
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}
