use serde::{Deserialize, Serialize};

use super::params::{sample_dirichlet_row, sample_index};
use super::{normalize_row, DiscreteSpace, Joint, ModelParams, Record};
use crate::rng::{rng_from_seed, SimRng};
use crate::{Error, Result};

/// Product of independent Dirichlet posteriors, one per factor row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDirichlet")]
pub struct DirichletBelief {
    pub space: DiscreteSpace,
    pub alpha_z: Vec<f64>,
    /// `[z][x]`
    pub alpha_x_given_z: Vec<Vec<f64>>,
    /// `[x][z][y]`
    pub alpha_y_given_xz: Vec<Vec<Vec<f64>>>,
}

#[derive(Deserialize)]
struct RawDirichlet {
    space: DiscreteSpace,
    alpha_z: Vec<f64>,
    alpha_x_given_z: Vec<Vec<f64>>,
    alpha_y_given_xz: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<RawDirichlet> for DirichletBelief {
    type Error = Error;

    fn try_from(raw: RawDirichlet) -> Result<Self> {
        let b = DirichletBelief {
            space: raw.space,
            alpha_z: raw.alpha_z,
            alpha_x_given_z: raw.alpha_x_given_z,
            alpha_y_given_xz: raw.alpha_y_given_xz,
        };
        b.validate()?;
        Ok(b)
    }
}

impl DirichletBelief {
    /// Every pseudo-count set to `alpha`.
    pub fn symmetric(space: DiscreteSpace, alpha: f64) -> Result<Self> {
        space.validate()?;
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::input(format!("Dirichlet pseudo-count must be > 0, got {alpha}")));
        }
        Ok(Self {
            space,
            alpha_z: vec![alpha; space.n_z],
            alpha_x_given_z: vec![vec![alpha; space.n_x]; space.n_z],
            alpha_y_given_xz: vec![vec![vec![alpha; space.n_y]; space.n_z]; space.n_x],
        })
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.space;
        s.validate()?;
        let ok = |row: &[f64], n: usize| row.len() == n && row.iter().all(|a| *a > 0.0 && a.is_finite());
        let shape_ok = ok(&self.alpha_z, s.n_z)
            && self.alpha_x_given_z.len() == s.n_z
            && self.alpha_x_given_z.iter().all(|r| ok(r, s.n_x))
            && self.alpha_y_given_xz.len() == s.n_x
            && self.alpha_y_given_xz.iter().all(|b| b.len() == s.n_z && b.iter().all(|r| ok(r, s.n_y)));
        if !shape_ok {
            return Err(Error::input("Dirichlet pseudo-counts must be positive with the space's shape"));
        }
        Ok(())
    }

    /// Conjugate update on one complete record.
    pub fn update(&self, record: Record) -> Result<Self> {
        let mut next = self.clone();
        next.update_in_place(record)?;
        Ok(next)
    }

    pub fn update_in_place(&mut self, Record { x, y, z }: Record) -> Result<()> {
        self.space.check_record(x, y, z)?;
        self.alpha_z[z] += 1.0;
        self.alpha_x_given_z[z][x] += 1.0;
        self.alpha_y_given_xz[x][z][y] += 1.0;
        Ok(())
    }

    pub fn update_all(&self, records: &[Record]) -> Result<Self> {
        let mut next = self.clone();
        for r in records {
            next.update_in_place(*r)?;
        }
        Ok(next)
    }

    pub fn sample(&self, rng: &mut SimRng) -> ModelParams {
        let p_z = sample_dirichlet_row(&self.alpha_z, rng);
        let p_x_given_z = self.alpha_x_given_z.iter().map(|r| sample_dirichlet_row(r, rng)).collect();
        let p_y_given_xz =
            self.alpha_y_given_xz.iter().map(|b| b.iter().map(|r| sample_dirichlet_row(r, rng)).collect()).collect();
        ModelParams { space: self.space, p_z, p_x_given_z, p_y_given_xz }
    }

    /// Row-wise Dirichlet means; the product of means is the predictive joint.
    pub fn mean(&self) -> ModelParams {
        ModelParams {
            space: self.space,
            p_z: normalize_row(&self.alpha_z),
            p_x_given_z: self.alpha_x_given_z.iter().map(|r| normalize_row(r)).collect(),
            p_y_given_xz: self.alpha_y_given_xz.iter().map(|b| b.iter().map(|r| normalize_row(r)).collect()).collect(),
        }
    }

    pub fn total_z_mass(&self) -> f64 {
        self.alpha_z.iter().sum()
    }
}

/// Posterior with finite support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFinite")]
pub struct FiniteSupportBelief {
    pub models: Vec<ModelParams>,
    pub weights: Vec<f64>,
}

#[derive(Deserialize)]
struct RawFinite {
    models: Vec<ModelParams>,
    weights: Vec<f64>,
}

impl TryFrom<RawFinite> for FiniteSupportBelief {
    type Error = Error;

    fn try_from(raw: RawFinite) -> Result<Self> {
        FiniteSupportBelief::new(raw.models, raw.weights)
    }
}

impl FiniteSupportBelief {
    pub fn new(models: Vec<ModelParams>, weights: Vec<f64>) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::input("finite-support belief needs at least one model"));
        }
        if models.len() != weights.len() {
            return Err(Error::input("one weight per support model is required"));
        }
        let space = models[0].space;
        if models.iter().any(|m| m.space != space) {
            return Err(Error::input("support models must share a space"));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::input("weights must be non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::input(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { models, weights })
    }

    pub fn uniform(models: Vec<ModelParams>) -> Result<Self> {
        let n = models.len().max(1);
        Self::new(models, vec![1.0 / n as f64; n])
    }

    pub fn point_mass(model: ModelParams) -> Self {
        Self { models: vec![model], weights: vec![1.0] }
    }

    pub fn space(&self) -> DiscreteSpace {
        self.models[0].space
    }

    /// Bayes rule on the support: `w_i <- w_i P_i(x, y, z)`, renormalized.
    pub fn update(&self, record: Record) -> Result<Self> {
        let mut next = self.clone();
        next.update_in_place(record)?;
        Ok(next)
    }

    pub fn update_in_place(&mut self, Record { x, y, z }: Record) -> Result<()> {
        self.space().check_record(x, y, z)?;
        let unnorm: Vec<f64> = self
            .models
            .iter()
            .zip(&self.weights)
            .map(|(m, w)| w * m.p_z[z] * m.p_x_given_z[z][x] * m.p_y_given_xz[x][z][y])
            .collect();
        let total: f64 = unnorm.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ImpossibleObservation);
        }
        self.weights = unnorm.iter().map(|w| w / total).collect();
        Ok(())
    }

    pub fn sample(&self, rng: &mut SimRng) -> ModelParams {
        self.models[sample_index(&self.weights, rng)].clone()
    }

    /// Weight mixture of the joints, re-factored. A belief whose mass sits on
    /// a single model returns that model unchanged.
    pub fn marginal(&self) -> ModelParams {
        let live: Vec<usize> = (0..self.weights.len()).filter(|&i| self.weights[i] > 0.0).collect();
        if live.len() == 1 {
            return self.models[live[0]].clone();
        }
        ModelParams::from_joint(&self.mixture_joint())
    }

    pub fn mixture_joint(&self) -> Joint {
        let space = self.space();
        let mut values = vec![0.0; space.joint_len()];
        for (m, w) in self.models.iter().zip(&self.weights) {
            if *w == 0.0 {
                continue;
            }
            for (acc, p) in values.iter_mut().zip(m.joint().values) {
                *acc += w * p;
            }
        }
        Joint { space, values }
    }
}

/// A posterior over world models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Belief {
    Dirichlet(DirichletBelief),
    Finite(FiniteSupportBelief),
}

impl From<DirichletBelief> for Belief {
    fn from(b: DirichletBelief) -> Self {
        Belief::Dirichlet(b)
    }
}

impl From<FiniteSupportBelief> for Belief {
    fn from(b: FiniteSupportBelief) -> Self {
        Belief::Finite(b)
    }
}

impl Belief {
    pub fn space(&self) -> DiscreteSpace {
        match self {
            Belief::Dirichlet(b) => b.space,
            Belief::Finite(b) => b.space(),
        }
    }

    pub fn sample_model(&self, seed: u64) -> ModelParams {
        self.sample_with(&mut rng_from_seed(seed))
    }

    pub fn sample_with(&self, rng: &mut SimRng) -> ModelParams {
        match self {
            Belief::Dirichlet(b) => b.sample(rng),
            Belief::Finite(b) => b.sample(rng),
        }
    }

    /// The belief-averaged predictive model.
    pub fn marginal_model(&self) -> ModelParams {
        match self {
            Belief::Dirichlet(b) => b.mean(),
            Belief::Finite(b) => b.marginal(),
        }
    }

    pub fn update(&self, record: Record) -> Result<Self> {
        Ok(match self {
            Belief::Dirichlet(b) => Belief::Dirichlet(b.update(record)?),
            Belief::Finite(b) => Belief::Finite(b.update(record)?),
        })
    }

    pub fn update_in_place(&mut self, record: Record) -> Result<()> {
        match self {
            Belief::Dirichlet(b) => b.update_in_place(record),
            Belief::Finite(b) => b.update_in_place(record),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::empirical_model;

    fn space() -> DiscreteSpace {
        DiscreteSpace::new(3, 2, 2, 2).unwrap()
    }

    fn random_records(n: usize, seed: u64) -> Vec<Record> {
        let mut rng = rng_from_seed(seed);
        ModelParams::random(space(), &mut rng).sample_dataset(n, seed + 1).records
    }

    #[test]
    fn point_mass_sampling_and_marginal() {
        let mut rng = rng_from_seed(1);
        let a = ModelParams::random(space(), &mut rng);
        let b = ModelParams::random(space(), &mut rng);
        let belief = Belief::Finite(FiniteSupportBelief::new(vec![a.clone(), b], vec![1.0, 0.0]).unwrap());
        for s in 0..20 {
            assert_eq!(belief.sample_model(s), a);
        }
        assert_eq!(belief.marginal_model(), a);
    }

    #[test]
    fn sampling_is_deterministic() {
        let belief = Belief::Dirichlet(DirichletBelief::symmetric(space(), 0.5).unwrap());
        assert_eq!(belief.sample_model(99), belief.sample_model(99));
        assert_ne!(belief.sample_model(99), belief.sample_model(100));
    }

    #[test]
    fn dirichlet_sample_mean_converges() {
        let mut b = DirichletBelief::symmetric(space(), 0.5).unwrap();
        b.alpha_z = vec![500.0, 500.0];
        let mut rng = rng_from_seed(4);
        let n = 10_000;
        let mean: f64 = (0..n).map(|_| b.sample(&mut rng).p_z[0]).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.02, "{mean}");
    }

    #[test]
    fn symmetric_dirichlet_mean_is_uniform() {
        let b = DirichletBelief::symmetric(space(), 0.5).unwrap();
        assert_eq!(b.mean().p_z, vec![0.5, 0.5]);
    }

    #[test]
    fn finite_marginal_matches_direct_mixture() {
        let mut rng = rng_from_seed(6);
        let a = ModelParams::random(space(), &mut rng);
        let b = ModelParams::random(space(), &mut rng);
        let belief = FiniteSupportBelief::new(vec![a.clone(), b.clone()], vec![0.25, 0.75]).unwrap();
        let got = belief.marginal().joint();
        let (ja, jb) = (a.joint(), b.joint());
        for i in 0..got.values.len() {
            let expected = 0.25 * ja.values[i] + 0.75 * jb.values[i];
            assert!((got.values[i] - expected).abs() < 1e-14);
        }
        assert!(belief.marginal().max_row_error() < 1e-12);
    }

    #[test]
    fn update_arithmetic_from_half_prior() {
        let b = DirichletBelief::symmetric(DiscreteSpace::new(2, 2, 2, 2).unwrap(), 0.5).unwrap();
        let b = b.update(Record { x: 0, y: 1, z: 0 }).unwrap();
        assert_eq!(b.alpha_z, vec![1.5, 0.5]);
        assert_eq!(b.alpha_x_given_z[0], vec![1.5, 0.5]);
        assert_eq!(b.alpha_x_given_z[1], vec![0.5, 0.5]);
        assert_eq!(b.alpha_y_given_xz[0][0], vec![0.5, 1.5]);
        assert_eq!(b.alpha_y_given_xz[1][0], vec![0.5, 0.5]);
        assert!(b.update(Record { x: 2, y: 0, z: 0 }).is_err());
    }

    #[test]
    fn z_mass_grows_by_record_count() {
        let prior = DirichletBelief::symmetric(space(), 0.5).unwrap();
        let records = random_records(37, 3);
        let post = prior.update_all(&records).unwrap();
        assert_eq!(post.total_z_mass(), prior.total_z_mass() + 37.0);
    }

    #[test]
    fn sequential_updates_match_batch_estimate() {
        let prior = DirichletBelief::symmetric(space(), 0.5).unwrap();
        let records = random_records(60, 10);
        let post = prior.update_all(&records).unwrap();
        let batch = empirical_model(&crate::model::Dataset { space: space(), records }, 0.5).unwrap();
        assert_eq!(post.mean(), batch);
    }

    #[test]
    fn update_order_is_irrelevant() {
        let prior = DirichletBelief::symmetric(space(), 0.5).unwrap();
        let records = random_records(20, 12);
        let mut reversed = records.clone();
        reversed.reverse();
        assert_eq!(prior.update_all(&records).unwrap(), prior.update_all(&reversed).unwrap());
    }

    #[test]
    fn finite_update_bayes_arithmetic() {
        let s = DiscreteSpace::new(1, 2, 1, 2).unwrap();
        let m = |py0: f64| ModelParams::new(s, vec![1.0], vec![vec![1.0]], vec![vec![vec![py0, 1.0 - py0]]]).unwrap();
        let belief = FiniteSupportBelief::new(vec![m(0.2), m(0.1)], vec![0.5, 0.5]).unwrap();
        let post = belief.update(Record { x: 0, y: 0, z: 0 }).unwrap();
        assert!((post.weights[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((post.weights[1] - 1.0 / 3.0).abs() < 1e-15);

        let twins = FiniteSupportBelief::uniform(vec![m(0.3), m(0.3)]).unwrap();
        assert_eq!(twins.update(Record { x: 0, y: 1, z: 0 }).unwrap().weights, vec![0.5, 0.5]);

        let point = FiniteSupportBelief::point_mass(m(0.4));
        assert_eq!(point.update(Record { x: 0, y: 1, z: 0 }).unwrap(), point);

        let impossible = FiniteSupportBelief::uniform(vec![m(1.0), m(1.0)]).unwrap();
        assert!(matches!(impossible.update(Record { x: 0, y: 1, z: 0 }), Err(Error::ImpossibleObservation)));
    }

    #[test]
    fn belief_json_is_tagged() {
        let b = Belief::Dirichlet(DirichletBelief::symmetric(space(), 0.5).unwrap());
        let text = serde_json::to_string(&b).unwrap();
        assert!(text.contains("\"kind\":\"dirichlet\""));
        assert_eq!(serde_json::from_str::<Belief>(&text).unwrap(), b);
        assert!(serde_json::from_str::<Belief>(&text.replace("0.5", "-0.5")).is_err());
    }
}
