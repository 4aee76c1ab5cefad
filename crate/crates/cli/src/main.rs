use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use covertour::dataset::Split;
use covertour::ml::TrainConfig;
use covertour::repair::{default_grid, DEFAULT_ALPHA};
use covertour::CostConfig;
use covertour_cli::{cmd_eval, cmd_gen, cmd_label, cmd_report, cmd_sweep, cmd_train, CliError, CliResult, Predictor, SplitSpec};

#[derive(Parser)]
#[command(name = "covertour", version, about = "Combined set covering and routing: exact labels, learned predictors, repair")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate node sets, cost variants and the split manifest.
    Gen(GenArgs),
    /// Solve every manifest instance exactly and write label records.
    Label {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = default_threads())]
        threads: usize,
    },
    /// Train the facility and route predictors on the Train split.
    Train(TrainArgs),
    /// Evaluate predict-and-repair against the optimum on every split.
    Eval {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep the threshold grid over one split.
    Sweep {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, value_delimiter = ',', default_values_t = default_grid())]
        grid: Vec<f64>,
        #[arg(long, default_value = "TestNew")]
        split: Split,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bundle evaluation, sweep and training outputs with a hashed index.
    Report {
        #[arg(long)]
        eval: PathBuf,
        #[arg(long)]
        sweep: PathBuf,
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Include wall-clock timings (makes the bundle run-dependent).
        #[arg(long)]
        timings: bool,
    },
    /// Run gen, label, train, eval, sweep and report into one work directory.
    Run {
        #[command(flatten)]
        gen: GenArgs,
        #[command(flatten)]
        train: TrainFlags,
        #[arg(long, default_value_t = default_threads())]
        threads: usize,
    },
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 12)]
    node_sets: usize,
    #[arg(long, default_value_t = 50)]
    variants: usize,
    #[arg(long, default_value_t = 2)]
    heldout: usize,
    #[arg(long, default_value_t = 0.1)]
    test_fraction: f64,
    #[arg(long, default_value_t = covertour::instance::DEFAULT_LOCATIONS)]
    locations: usize,
    #[arg(long, default_value_t = covertour::instance::DEFAULT_SIDE_KM)]
    side_km: f64,
    #[arg(long, default_value_t = covertour::instance::DEFAULT_COVERAGE_KM)]
    coverage_km: f64,
    /// Facility fixed cost range `lo,hi`.
    #[arg(long, value_delimiter = ',')]
    facility_cost: Option<Vec<f64>>,
    /// Assignment cost slope range `lo,hi` (cost per km).
    #[arg(long, value_delimiter = ',')]
    assignment_slope: Option<Vec<f64>>,
    /// Transport cost per km range `lo,hi`.
    #[arg(long, value_delimiter = ',')]
    per_km: Option<Vec<f64>>,
}

impl GenArgs {
    fn spec(&self) -> SplitSpec {
        SplitSpec {
            node_sets: self.node_sets,
            variants_per_set: self.variants,
            heldout_node_sets: self.heldout,
            test_fraction: self.test_fraction,
            seed: self.seed,
            locations: self.locations,
            side_km: self.side_km,
        }
    }

    fn costs(&self) -> CliResult<CostConfig> {
        let base = CostConfig::default();
        let pair = |name: &str, v: &Option<Vec<f64>>, d: (f64, f64)| match v.as_deref() {
            None => Ok(d),
            Some([lo, hi]) => Ok((*lo, *hi)),
            Some(_) => Err(CliError::Invalid(format!("--{name} expects `lo,hi`"))),
        };
        Ok(CostConfig {
            facility: pair("facility-cost", &self.facility_cost, base.facility)?,
            assignment_slope: pair("assignment-slope", &self.assignment_slope, base.assignment_slope)?,
            transport_per_km: pair("per-km", &self.per_km, base.transport_per_km)?,
            coverage_km: self.coverage_km,
        })
    }
}

#[derive(Args)]
struct TrainFlags {
    #[arg(long, default_value_t = 7)]
    train_seed: u64,
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().minibatch_size)]
    batch: usize,
    #[arg(long, default_value_t = TrainConfig::default().step_size)]
    step_size: f64,
    #[arg(long, default_value_t = TrainConfig::default().tuning_rounds)]
    rounds: usize,
    #[arg(long, value_delimiter = ',', default_values_t = TrainConfig::default().hidden)]
    hidden: Vec<usize>,
}

impl TrainFlags {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            minibatch_size: self.batch,
            step_size: self.step_size,
            seed: self.train_seed,
            tuning_rounds: self.rounds,
            hidden: self.hidden.clone(),
            ..TrainConfig::default()
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    flags: TrainFlags,
}

#[derive(Args)]
struct SourceArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Directory holding both checkpoints.
    #[arg(long, required_unless_present = "oracle", conflicts_with = "oracle")]
    models: Option<PathBuf>,
    /// Use the optimal labels as predictions.
    #[arg(long)]
    oracle: bool,
}

impl SourceArgs {
    fn predictor(&self) -> CliResult<Predictor> {
        match &self.models {
            Some(dir) => Predictor::from_dir(dir),
            None => Ok(Predictor::Oracle),
        }
    }
}

fn run(cli: Cli) -> CliResult<serde_json::Value> {
    match cli.command {
        Command::Gen(args) => {
            let m = cmd_gen(&args.spec(), &args.costs()?, &args.out)?;
            Ok(serde_json::json!({
                "instances": m.entries.len(),
                "train": m.count(Split::Train),
                "test": m.count(Split::Test),
                "test_new": m.count(Split::TestNew),
            }))
        }
        Command::Label { manifest, threads } => {
            let n = cmd_label(&manifest, threads)?;
            Ok(serde_json::json!({ "labeled": n }))
        }
        Command::Train(args) => {
            let out = cmd_train(&args.manifest, &args.flags.config(), &args.out)?;
            Ok(serde_json::json!({
                "scp_best_validation": out.scp_history.best_validation(),
                "tsp_best_validation": out.tsp_history.best_validation(),
            }))
        }
        Command::Eval { source, alpha, out } => {
            let report = cmd_eval(&source.manifest, &source.predictor()?, alpha, &out)?;
            Ok(serde_json::to_value(report)?)
        }
        Command::Sweep { source, grid, split, out } => {
            let report = cmd_sweep(&source.manifest, &source.predictor()?, &grid, split, &out)?;
            Ok(serde_json::json!({
                "instances": report.instances,
                "indifferent": report.indifferent,
                "histogram": report.histogram,
            }))
        }
        Command::Report { eval, sweep, models, out, timings } => {
            let files = cmd_report(&eval, &sweep, models.as_deref(), &out, timings)?;
            Ok(serde_json::json!({ "files": files }))
        }
        Command::Run { gen, train, threads } => run_all(&gen, &train, threads),
    }
}

fn run_all(gen: &GenArgs, train: &TrainFlags, threads: usize) -> CliResult<serde_json::Value> {
    let root: &Path = &gen.out;
    let manifest = root.join("manifest.txt");
    cmd_gen(&gen.spec(), &gen.costs()?, root)?;
    cmd_label(&manifest, threads)?;
    let models = root.join("models");
    cmd_train(&manifest, &train.config(), &models)?;
    let predictor = Predictor::from_dir(&models)?;
    let report = cmd_eval(&manifest, &predictor, DEFAULT_ALPHA, &root.join("eval"))?;
    cmd_sweep(&manifest, &predictor, &default_grid(), Split::TestNew, &root.join("sweep"))?;
    cmd_report(&root.join("eval"), &root.join("sweep"), Some(&models), &root.join("report"), false)?;
    Ok(serde_json::to_value(report)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string(&summary).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}

