//! Curve generation for the command-line tool.

mod config;
mod curves;

pub(crate) use config::{both_methods, load_json, validate_common};
pub use config::{ExperimentConfig, PriorSpec, Scenario, TruthSpec};
pub use curves::{
    emit_curves, emit_sequential_curves, evaluate_policy, parse_curves, read_curves, sort_records, write_curves,
    CurveRecord, Phase, CURVE_HEADER,
};

use rayon::prelude::*;

use crate::model::{Belief, ModelParams};
use crate::policy::{train, Method, Policy, TrainConfig, UtilityTable};
use crate::rng::child_seed;
use crate::Result;

/// Seeds for one repetition. `rep` is the value written to every record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepetitionSeeds {
    pub rep: u64,
    pub truth: u64,
    pub prior: u64,
    pub data: u64,
    pub train: u64,
    pub actions: u64,
}

impl RepetitionSeeds {
    pub fn new(root: u64, repetition: usize) -> Self {
        let rep = child_seed(root, repetition as u64);
        Self {
            rep,
            truth: child_seed(rep, 0),
            prior: child_seed(rep, 1),
            data: child_seed(rep, 2),
            train: child_seed(rep, 3),
            actions: child_seed(rep, 4),
        }
    }
}

/// Trains one rule on `belief` and scores it against `eval`.
#[allow(clippy::too_many_arguments)]
pub fn fit_and_evaluate(
    belief: &Belief,
    eval: &ModelParams,
    utility: &UtilityTable,
    train_cfg: &TrainConfig,
    method: Method,
    t: usize,
    seed: u64,
    phase: Phase,
) -> Result<(Policy, CurveRecord)> {
    let policy = train(belief, utility, train_cfg, method)?;
    let record = evaluate_policy(&policy, eval, utility, t, method, train_cfg.lambda, seed, phase)?;
    Ok((policy, record))
}

/// Runs every repetition and returns the records sorted by `(lambda, method, seed, t)`.
pub fn run_static_experiment(cfg: &ExperimentConfig) -> Result<Vec<CurveRecord>> {
    cfg.validate()?;
    let utility = cfg.utility_table();
    let per_rep: Vec<Vec<CurveRecord>> =
        (0..cfg.repetitions).into_par_iter().map(|r| run_repetition(cfg, &utility, r)).collect::<Result<_>>()?;
    let mut records: Vec<CurveRecord> = per_rep.into_iter().flatten().collect();
    sort_records(&mut records);
    Ok(records)
}

fn run_repetition(cfg: &ExperimentConfig, utility: &UtilityTable, repetition: usize) -> Result<Vec<CurveRecord>> {
    let seeds = RepetitionSeeds::new(cfg.seed, repetition);
    let max_t = *cfg.checkpoints.last().expect("validated non-empty");
    let scenario = cfg.truth.resolve(cfg.space, max_t, seeds.truth, seeds.data)?;
    let mut belief = cfg.prior.build(cfg.space, scenario.truth.as_ref(), seeds.prior)?;

    let mut snapshots = Vec::with_capacity(cfg.checkpoints.len());
    let mut consumed = 0;
    for &t in &cfg.checkpoints {
        for &record in &scenario.stream.records[consumed..t] {
            belief.update_in_place(record)?;
        }
        consumed = t;
        snapshots.push((t, belief.clone()));
    }

    let mut cells = Vec::new();
    for (i, _) in snapshots.iter().enumerate() {
        for &lambda in &cfg.lambdas {
            for &method in &cfg.methods {
                cells.push((i, lambda, method));
            }
        }
    }
    cells
        .into_par_iter()
        .map(|(i, lambda, method)| {
            let (t, belief) = &snapshots[i];
            let train_cfg = TrainConfig { lambda, seed: seeds.train, warm_start: None, ..cfg.train.clone() };
            fit_and_evaluate(belief, &scenario.eval, utility, &train_cfg, method, *t, seeds.rep, Phase::Static)
                .map(|(_, r)| r)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DiscreteSpace;
    use crate::policy::{expected_utility, Parameterization};

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            space: DiscreteSpace::new(3, 2, 2, 2).unwrap(),
            prior: PriorSpec::FiniteRandom { support: 4, include_truth: true },
            truth: TruthSpec::Random,
            lambdas: vec![0.0, 0.5],
            checkpoints: vec![0, 5, 20],
            train: TrainConfig { steps: 50, learning_rate: 0.5, ..TrainConfig::default() },
            repetitions: 2,
            seed: 11,
            methods: both_methods(),
            utility: None,
        }
    }

    #[test]
    fn record_count_and_identity() {
        let cfg = small_config();
        let records = run_static_experiment(&cfg).unwrap();
        assert_eq!(records.len(), 2 * 3 * 2 * 2);
        assert!(records.iter().all(|r| r.value_error() <= 1e-12));
    }

    #[test]
    fn zero_steps_gives_uniform_policy_scores() {
        let mut cfg = small_config();
        cfg.train.steps = 0;
        cfg.repetitions = 1;
        let records = run_static_experiment(&cfg).unwrap();
        let seeds = RepetitionSeeds::new(cfg.seed, 0);
        let scenario = cfg.truth.resolve(cfg.space, 20, seeds.truth, seeds.data).unwrap();
        let uniform = Policy::uniform(cfg.space, Parameterization::Logits);
        let u = expected_utility(&uniform, &scenario.eval, &cfg.utility_table()).unwrap();
        for r in &records {
            assert_eq!(r.utility, u);
            assert!(r.fairness.abs() < 1e-12);
        }
    }

    #[test]
    fn repeated_runs_are_identical() {
        let cfg = small_config();
        assert_eq!(run_static_experiment(&cfg).unwrap(), run_static_experiment(&cfg).unwrap());
    }

    #[test]
    fn invalid_checkpoints_are_rejected() {
        let mut cfg = small_config();
        cfg.checkpoints = vec![5, 5];
        assert!(run_static_experiment(&cfg).is_err());
    }
}
