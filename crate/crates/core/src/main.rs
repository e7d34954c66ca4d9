use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use bayesfair::data::{load_table, split, DiscretizationSchema};
use bayesfair::experiment::{emit_curves, emit_sequential_curves, run_static_experiment, ExperimentConfig};
use bayesfair::fairness::{
    accuracy_certificate, balance_deviation, bayes_balance, calibration_deviation, impossibility_check,
    marginal_balance, AccuracyCertificate, BalanceReport, BayesBalance, CalibrationReport, ImpossibilityReport,
    NormExponent, DEFAULT_EVAL_SAMPLES,
};
use bayesfair::model::{
    empirical_model, Belief, Dataset, DirichletBelief, DiscreteSpace, FiniteSupportBelief, ModelParams,
    DEFAULT_SMOOTHING,
};
use bayesfair::policy::{expected_utility, train, Method, Policy, TrainConfig, UtilityTable};
use bayesfair::rng::{child_seed, rng_from_seed};
use bayesfair::sequential::{run_sequential_experiment, write_steps, SequentialExperimentConfig};
use bayesfair::{Error, Result};

#[derive(Parser)]
#[command(name = "bayesfair", version, about = "Utility/balance decision rules under model uncertainty")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random true model, a dataset from it and a finite prior around it.
    Synth(SynthArgs),
    /// Fit one decision rule.
    Train(TrainArgs),
    /// Fairness and utility report for a policy under a model.
    Audit(AuditArgs),
    /// Static curves: retrain at every checkpoint of a growing dataset.
    Experiment(ExperimentArgs),
    /// Censored-feedback allocation with periodic retraining.
    Sequential(SequentialArgs),
    /// Discretize a CSV table and split it into train and holdout sets.
    Prep(PrepArgs),
}

#[derive(Args)]
struct SpaceArgs {
    #[arg(long, default_value_t = 8)]
    nx: usize,
    #[arg(long, default_value_t = 2)]
    ny: usize,
    #[arg(long, default_value_t = 2)]
    nz: usize,
    #[arg(long, default_value_t = 2)]
    na: usize,
}

impl SpaceArgs {
    fn space(&self) -> Result<DiscreteSpace> {
        DiscreteSpace::new(self.nx, self.ny, self.nz, self.na)
    }
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    space: SpaceArgs,
    /// Records in the sampled dataset.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Models in the finite prior (the true model is one of them).
    #[arg(long, default_value_t = 8)]
    support: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for truth.json, data.json and prior.json.
    #[arg(long)]
    out: PathBuf,
}

/// Training overrides shared by several subcommands.
#[derive(Args)]
struct TrainFlags {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
}

impl TrainFlags {
    fn apply(&self, cfg: &mut TrainConfig) {
        if let Some(v) = self.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = self.k {
            cfg.k_samples = v;
        }
        if let Some(v) = self.steps {
            cfg.steps = v;
        }
        if let Some(v) = self.lr {
            cfg.learning_rate = v;
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// `dirichlet:ALPHA` or `finite:PATH` (any serialized belief).
    #[arg(long, default_value = "dirichlet:0.5")]
    prior: String,
    /// Dataset the prior is updated on.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Space for a Dirichlet prior when no data is given.
    #[command(flatten)]
    space: SpaceArgs,
    #[arg(long, default_value = "bayes")]
    method: Method,
    /// Base training configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: TrainFlags,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    policy: PathBuf,
    /// Model the policy is scored against.
    #[arg(long)]
    model: PathBuf,
    /// Belief for posterior-averaged balance and the accuracy certificate.
    #[arg(long)]
    belief: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_EVAL_SAMPLES)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    flags: TrainFlags,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SequentialArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    method: Option<Method>,
    #[command(flatten)]
    flags: TrainFlags,
    #[arg(long)]
    out: PathBuf,
    /// Per-step log CSV.
    #[arg(long)]
    steps_out: Option<PathBuf>,
}

#[derive(Args)]
struct PrepArgs {
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    input: PathBuf,
    /// Leading rows used for training; the rest form the holdout.
    #[arg(long)]
    n_train: usize,
    #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
    smoothing: f64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    Ok(serde_json::from_str(&text)?)
}

fn synth(args: SynthArgs) -> Result<()> {
    let space = args.space.space()?;
    if args.support == 0 {
        return Err(Error::Config("support must be >= 1".into()));
    }
    let mut rng = rng_from_seed(child_seed(args.seed, 0));
    let truth = ModelParams::random(space, &mut rng);
    let data = truth.sample_dataset(args.n, child_seed(args.seed, 1));
    let mut models: Vec<ModelParams> = (1..args.support).map(|_| ModelParams::random(space, &mut rng)).collect();
    let slot = (child_seed(args.seed, 2) % args.support as u64) as usize;
    models.insert(slot, truth.clone());
    let prior = Belief::Finite(FiniteSupportBelief::uniform(models)?);
    std::fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("truth.json"), &truth)?;
    write_json(&args.out.join("data.json"), &data)?;
    write_json(&args.out.join("prior.json"), &prior)
}

fn parse_prior(spec: &str, space: Option<DiscreteSpace>) -> Result<Belief> {
    match spec.split_once(':') {
        Some(("dirichlet", alpha)) => {
            let alpha: f64 = alpha.parse().map_err(|_| Error::Config(format!("bad dirichlet alpha '{alpha}'")))?;
            let space = space.ok_or_else(|| Error::Config("a Dirichlet prior needs a space".into()))?;
            Ok(DirichletBelief::symmetric(space, alpha)?.into())
        }
        Some(("finite", path)) => read_json(Path::new(path)),
        _ => Err(Error::Config(format!("prior must be dirichlet:ALPHA or finite:PATH, got '{spec}'"))),
    }
}

fn train_cmd(args: TrainArgs) -> Result<()> {
    let data: Option<Dataset> = args.data.as_deref().map(read_json).transpose()?;
    let space = match &data {
        Some(d) => d.space,
        None => args.space.space()?,
    };
    let mut belief = parse_prior(&args.prior, Some(space))?;
    if let Some(d) = &data {
        if !d.space.same_model_space(&belief.space()) {
            return Err(Error::Config("dataset and prior live on different spaces".into()));
        }
        for &r in &d.records {
            belief.update_in_place(r)?;
        }
    }
    let mut cfg: TrainConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => TrainConfig::default(),
    };
    args.flags.apply(&mut cfg);
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let utility = UtilityTable::indicator(belief.space());
    let policy = train(&belief, &utility, &cfg, args.method)?;
    write_json(&args.out, &policy)
}

#[derive(Serialize)]
struct AuditReport {
    expected_utility: f64,
    balance_p1: BalanceReport,
    balance_p2: BalanceReport,
    calibration: CalibrationReport,
    impossibility: ImpossibilityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    bayes_balance: Option<BayesBalance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    marginal_balance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<AccuracyCertificate>,
}

fn audit(args: AuditArgs) -> Result<()> {
    let policy: Policy = read_json(&args.policy)?;
    let mut model: ModelParams = read_json(&args.model)?;
    model.space.n_a = policy.space().n_a;
    let utility = UtilityTable::indicator(policy.space());
    let balance_p1 = balance_deviation(&policy, &model, NormExponent::One)?;
    let mut report = AuditReport {
        expected_utility: expected_utility(&policy, &model, &utility)?,
        balance_p2: balance_deviation(&policy, &model, NormExponent::Two)?,
        calibration: calibration_deviation(&policy, &model)?,
        impossibility: impossibility_check(&policy, &model, args.tol)?,
        bayes_balance: None,
        marginal_balance: None,
        certificate: None,
        balance_p1,
    };
    if let Some(path) = &args.belief {
        let belief: Belief = read_json(path)?;
        let bayes = bayes_balance(&policy, &belief, NormExponent::One, args.k, args.seed)?;
        report.marginal_balance = Some(marginal_balance(&policy, &belief, NormExponent::One)?);
        report.certificate =
            Some(accuracy_certificate(&belief, &model, args.epsilon, args.k, child_seed(args.seed, 1), bayes.value)?);
        report.bayes_balance = Some(bayes);
    }
    write_json(&args.out, &report)
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(l) = args.flags.lambda {
        cfg.lambdas = vec![l];
    }
    args.flags.apply(&mut cfg.train);
    let records = run_static_experiment(&cfg)?;
    emit_curves(&records, &args.out)
}

fn sequential(args: SequentialArgs) -> Result<()> {
    let mut cfg = SequentialExperimentConfig::from_path(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(m) = args.method {
        cfg.methods = vec![m];
    }
    if let Some(l) = args.flags.lambda {
        cfg.lambdas = vec![l];
    }
    args.flags.apply(&mut cfg.train);
    let (records, steps) = run_sequential_experiment(&cfg)?;
    emit_sequential_curves(&records, &args.out)?;
    if let Some(path) = &args.steps_out {
        let file = std::fs::File::create(path)?;
        write_steps(&steps, std::io::BufWriter::new(file))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PrepReport {
    input_rows: usize,
    kept_rows: usize,
    dropped_missing: usize,
    dropped_unparseable: usize,
    n_train: usize,
    n_holdout: usize,
    space: DiscreteSpace,
}

fn prep(args: PrepArgs) -> Result<()> {
    let schema = DiscretizationSchema::from_path(&args.schema)?;
    let loaded = load_table(&args.input, &schema)?;
    let (train_set, holdout) = split(&loaded.dataset, args.n_train)?;
    let holdout_model = empirical_model(&holdout, args.smoothing)?;
    std::fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("train.json"), &train_set)?;
    write_json(&args.out.join("holdout.json"), &holdout)?;
    write_json(&args.out.join("holdout_model.json"), &holdout_model)?;
    if loaded.dropped() > 0 {
        eprintln!(
            "warning: dropped {} of {} rows ({} missing, {} unparseable)",
            loaded.dropped(),
            loaded.input_rows,
            loaded.dropped_missing,
            loaded.dropped_unparseable
        );
    }
    write_json(
        &args.out.join("prep_report.json"),
        &PrepReport {
            input_rows: loaded.input_rows,
            kept_rows: loaded.dataset.len(),
            dropped_missing: loaded.dropped_missing,
            dropped_unparseable: loaded.dropped_unparseable,
            n_train: train_set.len(),
            n_holdout: holdout.len(),
            space: schema.space(),
        },
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train_cmd(a),
        Command::Audit(a) => audit(a),
        Command::Experiment(a) => experiment(a),
        Command::Sequential(a) => sequential(a),
        Command::Prep(a) => prep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
