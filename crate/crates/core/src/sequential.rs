//! Allocation with censored feedback: `(y, z)` is revealed only after the
//! positive action `a = 1`. The rule is retrained myopically on the current
//! belief every `retrain_every` steps.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::experiment::{
    both_methods, evaluate_policy, fit_and_evaluate, load_json, sort_records, validate_common, CurveRecord, Phase,
    PriorSpec, RepetitionSeeds, TruthSpec,
};
use crate::model::{Belief, Dataset, DiscreteSpace, ModelParams};
use crate::policy::{train, Method, Policy, TrainConfig, UtilityTable};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Action whose choice reveals the outcome and sensitive attribute.
pub const REVEALING_ACTION: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SequentialConfig {
    pub stream: Dataset,
    pub belief: Belief,
    pub retrain_every: usize,
    pub train: TrainConfig,
    pub censoring: bool,
    pub method: Method,
    /// Retrain from the incumbent rule rather than from the uniform one.
    pub warm_start: bool,
    /// Overrides the sampled action at every step.
    pub forced_action: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepLog {
    /// 1-based step index.
    pub t: usize,
    pub x: usize,
    pub action: usize,
    pub observed: bool,
    /// Belief updates performed up to and including this step.
    pub belief_updates: usize,
}

#[derive(Debug, Clone)]
pub struct SequentialOutcome {
    /// One record at `t = 0` and one every `retrain_every` steps.
    pub records: Vec<CurveRecord>,
    pub steps: Vec<StepLog>,
    /// Rule in force at each record.
    pub policies: Vec<Policy>,
    pub final_belief: Belief,
}

impl SequentialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stream.is_empty() {
            return Err(Error::Config("sequential stream is empty".into()));
        }
        if self.retrain_every == 0 {
            return Err(Error::Config("retrain_every must be >= 1".into()));
        }
        let space = self.belief.space();
        if !self.stream.space.same_model_space(&space) {
            return Err(Error::Config("stream and belief live on different spaces".into()));
        }
        if self.censoring && space.n_a <= REVEALING_ACTION {
            return Err(Error::Config("censoring needs at least two actions".into()));
        }
        if let Some(a) = self.forced_action {
            if a >= space.n_a {
                return Err(Error::Config(format!("forced action {a} out of range")));
            }
        }
        Ok(())
    }
}

/// `seed` drives action sampling and is written to every record; the
/// trainer's seed comes from `cfg.train`. `lambda` overrides `cfg.train.lambda`.
pub fn run_sequential(
    cfg: &SequentialConfig,
    eval: &ModelParams,
    utility: &UtilityTable,
    lambda: f64,
    seed: u64,
) -> Result<SequentialOutcome> {
    cfg.validate()?;
    let base = TrainConfig { lambda, warm_start: None, ..cfg.train.clone() };
    let mut belief = cfg.belief.clone();
    let mut rng = rng_from_seed(seed);

    let (mut policy, first) = fit_and_evaluate(&belief, eval, utility, &base, cfg.method, 0, seed, Phase::Sequential)?;
    let mut records = vec![first];
    let mut policies = vec![policy.clone()];
    let mut steps = Vec::with_capacity(cfg.stream.len());
    let mut updates = 0;
    let mut updates_at_fit = 0;

    for (i, &record) in cfg.stream.records.iter().enumerate() {
        let t = i + 1;
        let sampled = policy.sample_action(record.x, &mut rng);
        let action = cfg.forced_action.unwrap_or(sampled);
        let observed = !cfg.censoring || action == REVEALING_ACTION;
        if observed {
            belief.update_in_place(record)?;
            updates += 1;
        }
        steps.push(StepLog { t, x: record.x, action, observed, belief_updates: updates });

        if t % cfg.retrain_every == 0 {
            // nothing new was learned, so the incumbent is kept
            if updates > updates_at_fit {
                let train_cfg = TrainConfig { warm_start: cfg.warm_start.then(|| policy.clone()), ..base.clone() };
                policy = train(&belief, utility, &train_cfg, cfg.method)?;
                updates_at_fit = updates;
            }
            records.push(evaluate_policy(&policy, eval, utility, t, cfg.method, lambda, seed, Phase::Sequential)?);
            policies.push(policy.clone());
        }
    }
    Ok(SequentialOutcome { records, steps, policies, final_belief: belief })
}

fn default_retrain_every() -> usize {
    10
}

fn default_repetitions() -> usize {
    10
}

fn yes() -> bool {
    true
}

/// Config-file form: one stream per repetition, every `(lambda, method)` pair
/// runs on the same stream with the same action seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialExperimentConfig {
    pub space: DiscreteSpace,
    pub prior: PriorSpec,
    pub truth: TruthSpec,
    /// Stream length.
    pub horizon: usize,
    #[serde(default = "default_retrain_every")]
    pub retrain_every: usize,
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "both_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "yes")]
    pub censoring: bool,
    #[serde(default = "yes")]
    pub warm_start: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forced_action: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility: Option<UtilityTable>,
}

/// A [`StepLog`] tagged with the run it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedStep {
    pub seed: u64,
    pub method: Method,
    pub lambda: f64,
    #[serde(flatten)]
    pub step: StepLog,
}

impl SequentialExperimentConfig {
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
        if self.horizon == 0 || self.retrain_every == 0 {
            return Err(Error::Config("horizon and retrain_every must be >= 1".into()));
        }
        Ok(())
    }

    pub fn utility_table(&self) -> UtilityTable {
        self.utility.clone().unwrap_or_else(|| UtilityTable::indicator(self.space))
    }
}

/// Records sorted by `(lambda, method, seed, t)`; step logs in the same run order.
pub fn run_sequential_experiment(cfg: &SequentialExperimentConfig) -> Result<(Vec<CurveRecord>, Vec<TaggedStep>)> {
    cfg.validate()?;
    let utility = cfg.utility_table();
    let mut jobs = Vec::new();
    for r in 0..cfg.repetitions {
        for &lambda in &cfg.lambdas {
            for &method in &cfg.methods {
                jobs.push((r, lambda, method));
            }
        }
    }
    let runs: Vec<(Vec<CurveRecord>, Vec<TaggedStep>)> = jobs
        .into_par_iter()
        .map(|(r, lambda, method)| {
            let seeds = RepetitionSeeds::new(cfg.seed, r);
            let scenario = cfg.truth.resolve(cfg.space, cfg.horizon, seeds.truth, seeds.data)?;
            let belief = cfg.prior.build(cfg.space, scenario.truth.as_ref(), seeds.prior)?;
            let run = SequentialConfig {
                stream: scenario.stream,
                belief,
                retrain_every: cfg.retrain_every,
                train: TrainConfig { seed: seeds.train, ..cfg.train.clone() },
                censoring: cfg.censoring,
                method,
                warm_start: cfg.warm_start,
                forced_action: cfg.forced_action,
            };
            // action seed is separate from the record seed so the static
            // experiment's records can be matched on `seed`
            let mut out = run_sequential_seeded(&run, &scenario.eval, &utility, lambda, seeds.rep, seeds.actions)?;
            let steps = out.steps.drain(..).map(|step| TaggedStep { seed: seeds.rep, method, lambda, step }).collect();
            Ok((out.records, steps))
        })
        .collect::<Result<_>>()?;
    let mut records = Vec::new();
    let mut steps = Vec::new();
    for (r, s) in runs {
        records.extend(r);
        steps.extend(s);
    }
    sort_records(&mut records);
    Ok((records, steps))
}

fn run_sequential_seeded(
    cfg: &SequentialConfig,
    eval: &ModelParams,
    utility: &UtilityTable,
    lambda: f64,
    record_seed: u64,
    action_seed: u64,
) -> Result<SequentialOutcome> {
    let mut out = run_sequential(cfg, eval, utility, lambda, action_seed)?;
    for r in &mut out.records {
        r.seed = record_seed;
    }
    Ok(out)
}

pub fn write_steps<W: Write>(steps: &[TaggedStep], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["seed", "method", "lambda", "t", "x", "action", "observed", "belief_updates"])?;
    for s in steps {
        w.write_record([
            s.seed.to_string(),
            s.method.to_string(),
            s.lambda.to_string(),
            s.step.t.to_string(),
            s.step.x.to_string(),
            s.step.action.to_string(),
            s.step.observed.to_string(),
            s.step.belief_updates.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DirichletBelief, FiniteSupportBelief};
    use crate::rng::rng_from_seed;

    fn space() -> DiscreteSpace {
        DiscreteSpace::new(3, 2, 2, 2).unwrap()
    }

    fn setup(censoring: bool, forced: Option<usize>) -> (SequentialConfig, ModelParams) {
        let truth = ModelParams::random(space(), &mut rng_from_seed(3));
        let cfg = SequentialConfig {
            stream: truth.sample_dataset(40, 4),
            belief: DirichletBelief::symmetric(space(), 0.5).unwrap().into(),
            retrain_every: 10,
            train: TrainConfig { steps: 30, learning_rate: 0.5, k_samples: 4, ..TrainConfig::default() },
            censoring,
            method: Method::Bayes,
            warm_start: true,
            forced_action: forced,
        };
        (cfg, truth)
    }

    #[test]
    fn updates_match_revealing_actions() {
        let (cfg, truth) = setup(true, None);
        let out = run_sequential(&cfg, &truth, &UtilityTable::indicator(space()), 0.3, 9).unwrap();
        assert_eq!(out.records.len(), 5);
        let revealed = out.steps.iter().filter(|s| s.action == REVEALING_ACTION).count();
        assert_eq!(out.steps.last().unwrap().belief_updates, revealed);
        assert!(out.steps.iter().all(|s| s.observed == (s.action == REVEALING_ACTION)));
    }

    #[test]
    fn forced_positive_matches_uncensored_belief() {
        let (cfg, truth) = setup(true, Some(1));
        let out = run_sequential(&cfg, &truth, &UtilityTable::indicator(space()), 0.3, 9).unwrap();
        let Belief::Dirichlet(prior) = &cfg.belief else { unreachable!() };
        let batch = prior.update_all(&cfg.stream.records).unwrap();
        assert_eq!(out.final_belief, Belief::Dirichlet(batch));
    }

    #[test]
    fn forced_negative_never_updates() {
        let (cfg, truth) = setup(true, Some(0));
        let out = run_sequential(&cfg, &truth, &UtilityTable::indicator(space()), 0.3, 9).unwrap();
        assert_eq!(out.final_belief, cfg.belief);
        assert!(out.steps.iter().all(|s| s.belief_updates == 0));
        assert!(out.policies.iter().all(|p| p == &out.policies[0]));
    }

    #[test]
    fn seeded_runs_repeat() {
        let (cfg, truth) = setup(true, None);
        let u = UtilityTable::indicator(space());
        let a = run_sequential(&cfg, &truth, &u, 0.3, 9).unwrap();
        let b = run_sequential(&cfg, &truth, &u, 0.3, 9).unwrap();
        assert_eq!(a.steps, b.steps);
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn finite_belief_stream() {
        let mut rng = rng_from_seed(5);
        let truth = ModelParams::random(space(), &mut rng);
        let other = ModelParams::random(space(), &mut rng);
        let (mut cfg, _) = setup(false, None);
        cfg.stream = truth.sample_dataset(20, 6);
        cfg.belief = FiniteSupportBelief::uniform(vec![truth.clone(), other]).unwrap().into();
        let out = run_sequential(&cfg, &truth, &UtilityTable::indicator(space()), 0.5, 1).unwrap();
        assert_eq!(out.steps.last().unwrap().belief_updates, 20);
    }

    #[test]
    fn empty_stream_is_rejected() {
        let (mut cfg, truth) = setup(true, None);
        cfg.stream = Dataset::empty(space());
        assert!(run_sequential(&cfg, &truth, &UtilityTable::indicator(space()), 0.3, 9).is_err());
    }
}
