use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Parameterization, Policy, PreparedModel, UtilityTable};
use crate::fairness::{NormExponent, DEFAULT_TRAIN_SAMPLES};
use crate::model::{Belief, ConditionalSet, DirichletBelief};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Which model(s) the trainer differentiates against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Posterior-averaged objective.
    Bayes,
    /// Objective under the single marginal model.
    Marginal,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Bayes => "bayes",
            Method::Marginal => "marginal",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bayes" => Ok(Method::Bayes),
            "marginal" => Ok(Method::Marginal),
            other => Err(Error::input(format!("unknown method '{other}', expected bayes or marginal"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lambda: f64,
    /// Balance exponent in the objective; gradients are defined for p = 2.
    pub p: NormExponent,
    pub steps: usize,
    pub learning_rate: f64,
    pub k_samples: usize,
    pub seed: u64,
    pub parameterization: Parameterization,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warm_start: Option<Policy>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            p: NormExponent::Two,
            steps: 2000,
            learning_rate: 0.05,
            k_samples: DEFAULT_TRAIN_SAMPLES,
            seed: 0,
            parameterization: Parameterization::Logits,
            warm_start: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.k_samples == 0 {
            return Err(Error::Config("k_samples must be >= 1".into()));
        }
        if self.p != NormExponent::Two {
            return Err(Error::Config("gradient training uses the p = 2 balance penalty".into()));
        }
        Ok(())
    }
}

enum GradientSource<'a> {
    /// Exact weighted sum over prepared models.
    Fixed(Vec<(f64, PreparedModel)>),
    /// Fresh posterior draws every step.
    Sampled(&'a DirichletBelief),
}

fn weighted_sum(terms: &[(f64, Vec<f64>)], len: usize) -> Vec<f64> {
    let mut acc = vec![0.0; len];
    for (w, g) in terms {
        for (a, v) in acc.iter_mut().zip(g) {
            *a += w * v;
        }
    }
    acc
}

/// Runs gradient ascent and calls `observer(step, &policy)` after each step.
pub fn train_with_observer<F>(
    belief: &Belief,
    utility: &UtilityTable,
    cfg: &TrainConfig,
    method: Method,
    mut observer: F,
) -> Result<Policy>
where
    F: FnMut(usize, &Policy),
{
    cfg.validate()?;
    let space = belief.space();
    utility.check_space(space)?;
    let mut policy = match &cfg.warm_start {
        Some(p) => {
            if !p.space().same_model_space(&space) || p.space().n_a != space.n_a {
                return Err(Error::Config("warm-start policy does not match the belief's space".into()));
            }
            p.convert(cfg.parameterization)
        }
        None => Policy::uniform(space, cfg.parameterization),
    };
    if cfg.steps == 0 {
        return Ok(policy);
    }

    let source = match (method, belief) {
        (Method::Marginal, _) => {
            GradientSource::Fixed(vec![(1.0, PreparedModel::new(&belief.marginal_model(), utility, space.n_a)?)])
        }
        (Method::Bayes, Belief::Finite(b)) => GradientSource::Fixed(
            b.models
                .iter()
                .zip(&b.weights)
                .filter(|(_, w)| **w > 0.0)
                .map(|(m, w)| Ok((*w, PreparedModel::new(m, utility, space.n_a)?)))
                .collect::<Result<_>>()?,
        ),
        (Method::Bayes, Belief::Dirichlet(b)) => GradientSource::Sampled(b),
    };

    let mut rng = rng_from_seed(cfg.seed);
    let len = space.n_x * space.n_a;
    for step in 0..cfg.steps {
        let grad = match &source {
            GradientSource::Fixed(models) => {
                let terms: Vec<(f64, Vec<f64>)> =
                    models.iter().map(|(w, m)| (*w, m.param_gradient(&policy, cfg.lambda))).collect();
                weighted_sum(&terms, len)
            }
            GradientSource::Sampled(b) => {
                let seeds: Vec<u64> = (0..cfg.k_samples).map(|_| rng.random()).collect();
                let weight = 1.0 / cfg.k_samples as f64;
                let terms: Vec<(f64, Vec<f64>)> = seeds
                    .par_iter()
                    .map(|&s| {
                        let model = b.sample(&mut rng_from_seed(s));
                        let prepared = PreparedModel::new(&model, utility, space.n_a)?;
                        Ok((weight, prepared.param_gradient(&policy, cfg.lambda)))
                    })
                    .collect::<Result<_>>()?;
                weighted_sum(&terms, len)
            }
        };
        policy = policy.step(&grad, cfg.learning_rate);
        observer(step + 1, &policy);
    }
    Ok(policy)
}

pub fn train(belief: &Belief, utility: &UtilityTable, cfg: &TrainConfig, method: Method) -> Result<Policy> {
    train_with_observer(belief, utility, cfg, method, |_, _| {})
}

/// Stochastic gradient ascent on the posterior-averaged objective.
pub fn train_bayes(belief: &Belief, utility: &UtilityTable, cfg: &TrainConfig) -> Result<Policy> {
    train(belief, utility, cfg, Method::Bayes)
}

/// Steepest ascent on the objective under the marginal model.
pub fn train_marginal(belief: &Belief, utility: &UtilityTable, cfg: &TrainConfig) -> Result<Policy> {
    train(belief, utility, cfg, Method::Marginal)
}

/// Deterministic utility maximizer under the marginal predictive `P(y | x)`;
/// ties go to the lowest action index.
pub fn bayes_optimal_rule(belief: &Belief, utility: &UtilityTable) -> Result<Policy> {
    let space = belief.space();
    utility.check_space(space)?;
    let c = ConditionalSet::from_model(&belief.marginal_model());
    let actions: Vec<usize> = (0..space.n_x)
        .map(|x| {
            let score = |a: usize| (0..space.n_y).map(|y| utility.get(y, a) * c.y_given_x(y, x)).sum::<f64>();
            let mut best = 0;
            let mut best_score = score(0);
            for a in 1..space.n_a {
                let s = score(a);
                if s > best_score {
                    best = a;
                    best_score = s;
                }
            }
            best
        })
        .collect();
    Policy::deterministic(space, &actions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::balance_deviation;
    use crate::model::{DiscreteSpace, FiniteSupportBelief, ModelParams};
    use crate::policy::expected_utility;

    fn space() -> DiscreteSpace {
        DiscreteSpace::new(2, 2, 2, 2).unwrap()
    }

    fn point_belief(seed: u64) -> (ModelParams, Belief) {
        let m = ModelParams::random(space(), &mut rng_from_seed(seed));
        (m.clone(), Belief::Finite(FiniteSupportBelief::point_mass(m)))
    }

    #[test]
    fn zero_steps_returns_initialization() {
        let (_, b) = point_belief(1);
        let u = UtilityTable::indicator(space());
        let cfg = TrainConfig { steps: 0, ..Default::default() };
        assert_eq!(train_bayes(&b, &u, &cfg).unwrap(), Policy::uniform(space(), Parameterization::Logits));
        let warm = Policy::from_logits(space(), vec![1.0, -1.0, 0.5, 0.0]).unwrap();
        let cfg = TrainConfig { steps: 0, warm_start: Some(warm.clone()), ..Default::default() };
        assert_eq!(train_marginal(&b, &u, &cfg).unwrap(), warm);
    }

    #[test]
    fn pure_fairness_converges_to_balance() {
        let (m, b) = point_belief(2);
        let u = UtilityTable::indicator(space());
        // start away from the trivial rule so the optimizer has work to do
        let warm = Policy::from_logits(space(), vec![2.0, -1.0, -1.5, 1.0]).unwrap();
        let cfg =
            TrainConfig { lambda: 1.0, steps: 4000, learning_rate: 5.0, warm_start: Some(warm), ..Default::default() };
        let p = train_bayes(&b, &u, &cfg).unwrap();
        let dev = balance_deviation(&p, &m, NormExponent::One).unwrap().aggregate_p;
        assert!(dev <= 1e-3, "deviation {dev}");
    }

    #[test]
    fn pure_utility_reaches_bayes_optimal_value() {
        let (m, b) = point_belief(3);
        let u = UtilityTable::indicator(space());
        let cfg = TrainConfig { lambda: 0.0, steps: 3000, learning_rate: 20.0, ..Default::default() };
        let p = train_bayes(&b, &u, &cfg).unwrap();
        let best = expected_utility(&bayes_optimal_rule(&b, &u).unwrap(), &m, &u).unwrap();
        let got = expected_utility(&p, &m, &u).unwrap();
        assert!((best - got).abs() <= 1e-3, "{got} vs {best}");
    }

    #[test]
    fn methods_coincide_for_point_mass() {
        let (_, b) = point_belief(4);
        let u = UtilityTable::indicator(space());
        let cfg = TrainConfig { lambda: 0.4, steps: 50, learning_rate: 0.5, seed: 9, ..Default::default() };
        let mut bayes = Vec::new();
        let mut marginal = Vec::new();
        train_with_observer(&b, &u, &cfg, Method::Bayes, |_, p| bayes.push(p.params().to_vec())).unwrap();
        train_with_observer(&b, &u, &cfg, Method::Marginal, |_, p| marginal.push(p.params().to_vec())).unwrap();
        assert_eq!(bayes, marginal);
    }

    #[test]
    fn marginal_pure_fairness_on_uncertain_belief() {
        let mut rng = rng_from_seed(5);
        let models: Vec<ModelParams> = (0..4).map(|_| ModelParams::random(space(), &mut rng)).collect();
        let b = Belief::Finite(FiniteSupportBelief::uniform(models).unwrap());
        let u = UtilityTable::indicator(space());
        let cfg = TrainConfig { lambda: 1.0, ..Default::default() };
        let p = train_marginal(&b, &u, &cfg).unwrap();
        let dev = crate::fairness::marginal_balance(&p, &b, NormExponent::One).unwrap();
        assert!(dev <= 1e-3);
    }

    #[test]
    fn dirichlet_training_is_seeded() {
        let prior = DirichletBelief::symmetric(space(), 0.5).unwrap();
        let b = Belief::Dirichlet(prior);
        let u = UtilityTable::indicator(space());
        let cfg = TrainConfig { lambda: 0.3, steps: 40, seed: 17, ..Default::default() };
        let p1 = train_bayes(&b, &u, &cfg).unwrap();
        let p2 = train_bayes(&b, &u, &cfg).unwrap();
        assert_eq!(p1.params(), p2.params());
        let p3 = train_bayes(&b, &u, &TrainConfig { seed: 18, ..cfg }).unwrap();
        assert_ne!(p1.params(), p3.params());
    }

    #[test]
    fn simplex_training_stays_feasible() {
        let (_, b) = point_belief(6);
        let u = UtilityTable::indicator(space());
        let cfg = TrainConfig {
            lambda: 0.2,
            steps: 200,
            learning_rate: 1.0,
            parameterization: Parameterization::Simplex,
            ..Default::default()
        };
        train_with_observer(&b, &u, &cfg, Method::Bayes, |_, p| {
            assert!(p.max_row_error() < 1e-12);
            assert!(p.probs().iter().all(|v| *v >= 0.0));
        })
        .unwrap();
    }

    #[test]
    fn bayes_rule_examples() {
        // y = x deterministically
        let s = space();
        let m = ModelParams::new(
            s,
            vec![0.5, 0.5],
            vec![vec![0.5, 0.5]; 2],
            vec![vec![vec![1.0, 0.0]; 2], vec![vec![0.0, 1.0]; 2]],
        )
        .unwrap();
        let u = UtilityTable::indicator(s);
        let rule = bayes_optimal_rule(&Belief::Finite(FiniteSupportBelief::point_mass(m)), &u).unwrap();
        assert_eq!(rule.probs(), &[1.0, 0.0, 0.0, 1.0]);

        let sym = Belief::Dirichlet(DirichletBelief::symmetric(s, 0.5).unwrap());
        assert_eq!(bayes_optimal_rule(&sym, &u).unwrap().probs(), &[1.0, 0.0, 1.0, 0.0]);
    }

    /// Oracle: score each action by enumerating the mixture joint directly.
    #[test]
    fn bayes_rule_matches_enumeration() {
        let mut rng = rng_from_seed(8);
        let s = DiscreteSpace::new(5, 2, 2, 2).unwrap();
        let models: Vec<ModelParams> = (0..3).map(|_| ModelParams::random(s, &mut rng)).collect();
        let weights = vec![0.2, 0.5, 0.3];
        let b = Belief::Finite(FiniteSupportBelief::new(models.clone(), weights.clone()).unwrap());
        let u = UtilityTable::new(vec![vec![1.0, 0.0], vec![0.2, 0.9]]).unwrap();
        let rule = bayes_optimal_rule(&b, &u).unwrap();
        for x in 0..5 {
            let pxy = |y: usize| -> f64 {
                models
                    .iter()
                    .zip(&weights)
                    .map(|(m, w)| w * (0..2).map(|z| m.joint_probability(x, y, z).unwrap()).sum::<f64>())
                    .sum()
            };
            let score = |a: usize| (0..2).map(|y| u.get(y, a) * pxy(y)).sum::<f64>();
            let best = if score(1) > score(0) { 1 } else { 0 };
            assert_eq!(rule.prob(x, best), 1.0);
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let (_, b) = point_belief(7);
        let u = UtilityTable::indicator(space());
        assert!(train_bayes(&b, &u, &TrainConfig { lambda: 1.2, ..Default::default() }).is_err());
        assert!(train_bayes(&b, &u, &TrainConfig { learning_rate: 0.0, ..Default::default() }).is_err());
        assert!(train_bayes(&b, &u, &TrainConfig { p: NormExponent::One, ..Default::default() }).is_err());
    }
}
