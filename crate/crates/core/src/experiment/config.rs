use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::{
    empirical_model, Belief, Dataset, DirichletBelief, DiscreteSpace, FiniteSupportBelief, ModelParams,
    DEFAULT_SMOOTHING,
};
use crate::policy::{TrainConfig, UtilityTable};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Initial belief.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSpec {
    /// Product of symmetric Dirichlets.
    Dirichlet { alpha: f64 },
    /// Uniform weights over `support` random models; one of them is the true
    /// model when `include_truth` is set and a true model is known.
    FiniteRandom {
        support: usize,
        #[serde(default = "yes")]
        include_truth: bool,
    },
    /// A serialized belief.
    File { path: PathBuf },
}

/// Model the rules are scored against and the source of the data stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TruthSpec {
    /// `ModelParams::random` with a per-repetition seed; data sampled from it.
    Random,
    /// A serialized model; data sampled from it.
    File { path: PathBuf },
    /// Stream from a training dataset, score against the smoothed empirical
    /// model of a holdout dataset.
    Holdout {
        train: PathBuf,
        holdout: PathBuf,
        #[serde(default = "default_smoothing")]
        smoothing: f64,
    },
}

fn yes() -> bool {
    true
}

fn default_smoothing() -> f64 {
    DEFAULT_SMOOTHING
}

fn default_repetitions() -> usize {
    10
}

pub(crate) fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    Ok(serde_json::from_str(&text)?)
}

fn rebase(path: &mut PathBuf, base: &Path) {
    if path.is_relative() {
        *path = base.join(&*path);
    }
}

impl PriorSpec {
    pub(crate) fn rebase(&mut self, base: &Path) {
        if let PriorSpec::File { path } = self {
            rebase(path, base);
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PriorSpec::Dirichlet { alpha } if !(*alpha > 0.0 && alpha.is_finite()) => {
                Err(Error::Config("dirichlet alpha must be positive".into()))
            }
            PriorSpec::FiniteRandom { support: 0, .. } => Err(Error::Config("finite prior needs support >= 1".into())),
            _ => Ok(()),
        }
    }

    /// Builds the belief. `truth` is placed at a seeded random position of a
    /// `FiniteRandom` support when requested.
    pub fn build(&self, space: DiscreteSpace, truth: Option<&ModelParams>, seed: u64) -> Result<Belief> {
        match self {
            PriorSpec::Dirichlet { alpha } => Ok(DirichletBelief::symmetric(space, *alpha)?.into()),
            PriorSpec::FiniteRandom { support, include_truth } => {
                let mut rng = rng_from_seed(seed);
                let mut models: Vec<ModelParams> =
                    (0..*support).map(|_| ModelParams::random(space, &mut rng)).collect();
                if let (true, Some(t)) = (*include_truth, truth) {
                    let slot = rng.random_range(0..*support);
                    models[slot] = t.clone();
                }
                Ok(FiniteSupportBelief::uniform(models)?.into())
            }
            PriorSpec::File { path } => {
                let belief: Belief = load_json(path)?;
                if !belief.space().same_model_space(&space) {
                    return Err(Error::Config(format!(
                        "prior in {} does not match the configured space",
                        path.display()
                    )));
                }
                Ok(match belief {
                    // the configured action count wins over whatever the file carries
                    Belief::Dirichlet(mut b) => {
                        b.space.n_a = space.n_a;
                        Belief::Dirichlet(b)
                    }
                    Belief::Finite(mut b) => {
                        for m in &mut b.models {
                            m.space.n_a = space.n_a;
                        }
                        Belief::Finite(b)
                    }
                })
            }
        }
    }
}

/// Resolved truth for one repetition.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub eval: ModelParams,
    pub stream: Dataset,
    /// The data-generating model when known.
    pub truth: Option<ModelParams>,
}

impl TruthSpec {
    pub(crate) fn rebase(&mut self, base: &Path) {
        match self {
            TruthSpec::Random => {}
            TruthSpec::File { path } => rebase(path, base),
            TruthSpec::Holdout { train, holdout, .. } => {
                rebase(train, base);
                rebase(holdout, base);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TruthSpec::Holdout { smoothing, .. } if !(*smoothing >= 0.0) => {
                Err(Error::Config("holdout smoothing must be non-negative".into()))
            }
            _ => Ok(()),
        }
    }

    /// `truth_seed` draws a random truth, `data_seed` samples a stream of `n` records.
    pub fn resolve(&self, space: DiscreteSpace, n: usize, truth_seed: u64, data_seed: u64) -> Result<Scenario> {
        let synthetic = |mut truth: ModelParams| {
            truth.space.n_a = space.n_a;
            let stream = truth.sample_dataset(n, data_seed);
            Scenario { eval: truth.clone(), stream, truth: Some(truth) }
        };
        match self {
            TruthSpec::Random => Ok(synthetic(ModelParams::random(space, &mut rng_from_seed(truth_seed)))),
            TruthSpec::File { path } => {
                let truth: ModelParams = load_json(path)?;
                if !truth.space.same_model_space(&space) {
                    return Err(Error::Config(format!(
                        "model in {} does not match the configured space",
                        path.display()
                    )));
                }
                Ok(synthetic(truth))
            }
            TruthSpec::Holdout { train, holdout, smoothing } => {
                let mut stream: Dataset = load_json(train)?;
                let held: Dataset = load_json(holdout)?;
                if !stream.space.same_model_space(&space) || !held.space.same_model_space(&space) {
                    return Err(Error::Config("holdout datasets do not match the configured space".into()));
                }
                if stream.len() < n {
                    return Err(Error::Config(format!(
                        "training dataset has {} records but {n} are required",
                        stream.len()
                    )));
                }
                stream.space.n_a = space.n_a;
                stream.records.truncate(n);
                let mut eval = empirical_model(&held, *smoothing)?;
                eval.space.n_a = space.n_a;
                Ok(Scenario { eval, stream, truth: None })
            }
        }
    }
}

/// Static curve experiment: belief updated on growing prefixes, both methods
/// retrained from scratch at every checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub space: DiscreteSpace,
    pub prior: PriorSpec,
    pub truth: TruthSpec,
    pub lambdas: Vec<f64>,
    pub checkpoints: Vec<usize>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "both_methods")]
    pub methods: Vec<crate::policy::Method>,
    /// Defaults to the indicator utility.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility: Option<UtilityTable>,
}

pub(crate) fn both_methods() -> Vec<crate::policy::Method> {
    vec![crate::policy::Method::Bayes, crate::policy::Method::Marginal]
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn validate_common(
    space: &DiscreteSpace,
    prior: &PriorSpec,
    truth: &TruthSpec,
    lambdas: &[f64],
    train: &TrainConfig,
    repetitions: usize,
    methods: &[crate::policy::Method],
    utility: &Option<UtilityTable>,
) -> Result<()> {
    space.validate().map_err(|e| Error::Config(e.to_string()))?;
    prior.validate()?;
    truth.validate()?;
    if lambdas.is_empty() || lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) {
        return Err(Error::Config("lambdas must be a non-empty list of values in [0, 1]".into()));
    }
    train.validate()?;
    if repetitions == 0 {
        return Err(Error::Config("repetitions must be >= 1".into()));
    }
    if methods.is_empty() {
        return Err(Error::Config("at least one method is required".into()));
    }
    if let Some(u) = utility {
        u.check_space(*space).map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

impl ExperimentConfig {
    /// Loads and validates; relative paths resolve against the file's directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg: Self = load_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.prior.rebase(base);
        cfg.truth.rebase(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        validate_common(
            &self.space,
            &self.prior,
            &self.truth,
            &self.lambdas,
            &self.train,
            self.repetitions,
            &self.methods,
            &self.utility,
        )?;
        if self.checkpoints.is_empty() || self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("checkpoints must be non-empty and strictly increasing".into()));
        }
        Ok(())
    }

    pub fn utility_table(&self) -> UtilityTable {
        self.utility.clone().unwrap_or_else(|| UtilityTable::indicator(self.space))
    }
}
