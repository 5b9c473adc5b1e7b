//! Benchmark harness CLI.
//!
//! Subcommands: `run` (baseline / chc / pso / chc_qx / pso_qx experiments),
//! `curve-learning`, `curve-usefulness` and `cost-model`. Engine defaults
//! are overridable through a TOML config file; run reports are written as
//! one JSON document per seed and curves as flat CSV.
//!
//! Exit codes: 0 success, 1 configuration error, 2 data error, 3 runtime
//! failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use qxfs::bench::{
    cost_crossover, cost_model, geometric_schedule, learning_curve, run_experiment,
    usefulness_curve, write_curve_csv, CostModelInputs, EngineParams, ExperimentConfig, Method,
};
use qxfs::data::{load_dataset, preprocess, split, LabelColumn, LoadOptions, SplitSet};
use qxfs::error::Error;
use qxfs::report::CurvePoint;

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "FS_BENCH_OUT";

#[derive(Parser)]
#[command(name = "fs-bench", version, about = "Feature-selection benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a feature-selection experiment over one or more seeds.
    Run(RunArgs),
    /// Test accuracy of trees trained on geometrically growing samples.
    CurveLearning(CurveArgs),
    /// Rank correlation between original and sample-trained probe
    /// evaluations across geometrically growing samples.
    CurveUsefulness(CurveUsefulnessArgs),
    /// Analytic cost comparison of plain CHC versus the two-stage pipeline.
    CostModel(CostModelArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Delimiter-separated data file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Label column, by header name or zero-based index.
    #[arg(long)]
    label: String,
    /// Field delimiter (single character).
    #[arg(long, default_value = ",")]
    delimiter: char,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    /// baseline | chc | pso | chc_qx | pso_qx
    #[arg(long)]
    method: String,
    /// Comma-separated seed list; omitted seeds draw from entropy and are
    /// recorded in the reports.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// TOML file overriding engine defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for JSON reports (default: $FS_BENCH_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Wall-clock cap per seed in milliseconds, sampling stage included.
    #[arg(long)]
    budget_ms: Option<u64>,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    data: DataArgs,
    /// First sample size of the geometric schedule.
    #[arg(long, default_value_t = 32)]
    n0: usize,
    /// Geometric growth ratio.
    #[arg(long, default_value_t = 2.0)]
    ratio: f64,
    /// Largest sample size (default: the whole training split).
    #[arg(long)]
    n_max: Option<usize>,
    /// Seed; drawn from entropy when omitted.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CurveUsefulnessArgs {
    #[command(flatten)]
    curve: CurveArgs,
    /// Number of probe feature subsets.
    #[arg(long, default_value_t = 20)]
    q: usize,
}

#[derive(Args)]
struct CostModelArgs {
    /// Feature-selection generations.
    #[arg(long = "r")]
    generations: u32,
    /// Population size.
    #[arg(long = "e", default_value_t = 50)]
    population: u32,
    /// Probe count.
    #[arg(long = "q", default_value_t = 10)]
    probes: u32,
    /// Evolution-control frequency.
    #[arg(long = "f", default_value_t = 10)]
    frequency: u32,
    /// Training rows for unit scaling.
    #[arg(long = "n", default_value_t = 1)]
    rows: u64,
    /// Feature count for unit scaling.
    #[arg(long = "k", default_value_t = 1)]
    features: u64,
}

/// TOML overlay over the engine defaults; unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    chc: ChcSection,
    pso: PsoSection,
    qx: QxSection,
    tree: TreeSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ChcSection {
    population_size: Option<usize>,
    bit_prob: Option<f64>,
    initial_threshold: Option<usize>,
    divergence_rate: Option<f64>,
    max_generations: Option<usize>,
    no_change_limit: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PsoSection {
    particles: Option<usize>,
    cognitive: Option<f64>,
    social: Option<f64>,
    inertia: Option<f64>,
    v_max: Option<f64>,
    max_iterations: Option<usize>,
    no_change_limit: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct QxSection {
    probe_count: Option<usize>,
    control_frequency: Option<usize>,
    sampling_population: Option<usize>,
    sampling_max_generations: Option<usize>,
    sampling_no_change_limit: Option<usize>,
    instance_bit_prob: Option<f64>,
    probe_bit_prob: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TreeSection {
    max_depth: Option<usize>,
    min_samples_split: Option<usize>,
}

impl ConfigFile {
    fn apply(self, params: &mut EngineParams) {
        macro_rules! overlay {
            ($target:expr, $($field:ident <- $value:expr),+ $(,)?) => {
                $(if let Some(v) = $value { $target.$field = v; })+
            };
        }
        overlay!(params.chc,
            population_size <- self.chc.population_size,
            bit_prob <- self.chc.bit_prob,
            divergence_rate <- self.chc.divergence_rate,
            max_generations <- self.chc.max_generations,
            no_change_limit <- self.chc.no_change_limit,
        );
        if let Some(d0) = self.chc.initial_threshold {
            params.chc.initial_threshold = Some(d0);
        }
        overlay!(params.pso,
            particles <- self.pso.particles,
            cognitive <- self.pso.cognitive,
            social <- self.pso.social,
            inertia <- self.pso.inertia,
            v_max <- self.pso.v_max,
            max_iterations <- self.pso.max_iterations,
            no_change_limit <- self.pso.no_change_limit,
        );
        overlay!(params.qx,
            probe_count <- self.qx.probe_count,
            control_frequency <- self.qx.control_frequency,
            sampling_population <- self.qx.sampling_population,
            sampling_max_generations <- self.qx.sampling_max_generations,
            sampling_no_change_limit <- self.qx.sampling_no_change_limit,
            instance_bit_prob <- self.qx.instance_bit_prob,
            probe_bit_prob <- self.qx.probe_bit_prob,
        );
        if let Some(d) = self.tree.max_depth {
            params.tree.max_depth = Some(d);
        }
        if let Some(m) = self.tree.min_samples_split {
            params.tree.min_samples_split = m;
        }
    }
}

enum CliError {
    Config(String),
    Data(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::InvalidConfig(_) | Error::BadSchedule { .. } | Error::TooFewValues(_) => {
                CliError::Config(message)
            }
            Error::FileRead { .. }
            | Error::Csv(_)
            | Error::LabelColumnNotFound(_)
            | Error::NoRows
            | Error::RaggedRow { .. }
            | Error::AllMissingColumn(_)
            | Error::MissingLabel(_)
            | Error::TooFewRows(_)
            | Error::NonFinite
            | Error::SampleTooLarge { .. } => CliError::Data(message),
            _ => CliError::Runtime(message),
        }
    }
}

fn parse_label(raw: &str) -> LabelColumn {
    LabelColumn::Name(raw.to_string())
}

fn parse_delimiter(c: char) -> Result<u8, CliError> {
    u8::try_from(c).map_err(|_| CliError::Config(format!("delimiter `{c}` is not a single byte")))
}

fn load_params(path: Option<&Path>) -> Result<EngineParams, CliError> {
    let mut params = EngineParams::default();
    if let Some(path) = path {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config `{}`: {e}", path.display())))?;
        let file: ConfigFile = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("bad config `{}`: {e}", path.display())))?;
        file.apply(&mut params);
    }
    Ok(params)
}

fn default_out_dir(cli: Option<PathBuf>) -> Option<PathBuf> {
    cli.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
}

fn entropy_seed() -> u64 {
    use std::time::{SystemTime, UNIX_EPOCH};
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0);
    nanos ^ u64::from(std::process::id()).rotate_left(32)
}

/// Preprocess and split with sub-seeds derived from one curve seed.
fn prepare_splits(args: &DataArgs, seed: u64) -> Result<SplitSet, CliError> {
    let raw = load_dataset(
        &args.data,
        &parse_label(&args.label),
        &LoadOptions {
            delimiter: parse_delimiter(args.delimiter)?,
        },
    )?;
    let dataset = preprocess(&raw, seed)?;
    Ok(split(&dataset, seed.wrapping_add(1))?)
}

fn emit_curve(points: &[CurvePoint], out: Option<&Path>, file_name: &str) -> Result<(), CliError> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::Runtime(format!("cannot create `{}`: {e}", dir.display())))?;
            let path = dir.join(file_name);
            write_curve_csv(points, &path)?;
            println!("wrote {}", path.display());
        }
        None => {
            println!("sample_size,metric");
            for p in points {
                println!("{},{}", p.sample_size, p.metric);
            }
        }
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let method: Method = args
        .method
        .parse()
        .map_err(|e: Error| CliError::Config(e.to_string()))?;
    let mut cfg = ExperimentConfig::new(&args.data.data, parse_label(&args.data.label), method);
    cfg.delimiter = parse_delimiter(args.data.delimiter)?;
    cfg.seeds = if args.seeds.is_empty() {
        vec![entropy_seed()]
    } else {
        args.seeds.clone()
    };
    cfg.params = load_params(args.config.as_deref())?;
    cfg.budget_ms = args.budget_ms;
    cfg.out_dir = default_out_dir(args.out);

    let reports = run_experiment(&cfg)?;
    for report in &reports {
        let meta = report.meta.as_ref().expect("runner sets meta");
        let summary = report.final_summary.as_ref().expect("runner sets summary");
        println!(
            "method={} seed={} test_accuracy={:.4} selected={}/{} original_evals={} surrogate_evals={} time_ms={}",
            meta.method,
            meta.seed,
            summary.test_accuracy,
            summary.selected_features.len(),
            report.best_mask.len(),
            report.counters.original_evals,
            report.counters.surrogate_evals,
            summary.total_time_ms,
        );
    }
    if let Some(dir) = &cfg.out_dir {
        println!("reports written to {}", dir.display());
    }
    Ok(())
}

fn cmd_curve_learning(args: CurveArgs) -> Result<(), CliError> {
    let seed = args.seed.unwrap_or_else(entropy_seed);
    let params = load_params(args.config.as_deref())?;
    let splits = prepare_splits(&args.data, seed)?;
    let n_max = args.n_max.unwrap_or_else(|| splits.train.n_rows());
    let schedule = geometric_schedule(args.n0, args.ratio, n_max)?;
    let curve = learning_curve(&splits, &schedule, seed.wrapping_add(2), &params.tree)?;
    println!("seed={seed}");
    emit_curve(&curve, default_out_dir(args.out).as_deref(), "learning_curve.csv")
}

fn cmd_curve_usefulness(args: CurveUsefulnessArgs) -> Result<(), CliError> {
    let seed = args.curve.seed.unwrap_or_else(entropy_seed);
    let params = load_params(args.curve.config.as_deref())?;
    let splits = prepare_splits(&args.curve.data, seed)?;
    let n_max = args.curve.n_max.unwrap_or_else(|| splits.train.n_rows());
    let schedule = geometric_schedule(args.curve.n0, args.curve.ratio, n_max)?;
    let curve = usefulness_curve(&splits, &schedule, args.q, seed.wrapping_add(2), &params.tree)?;
    println!("seed={seed}");
    emit_curve(
        &curve,
        default_out_dir(args.curve.out).as_deref(),
        "usefulness_curve.csv",
    )
}

fn cmd_cost_model(args: CostModelArgs) -> Result<(), CliError> {
    if args.generations == 0 || args.frequency == 0 || args.population == 0 {
        return Err(CliError::Config(
            "generations, population and frequency must be positive".into(),
        ));
    }
    let out = cost_model(&CostModelInputs {
        generations: args.generations,
        population: args.population,
        probes: args.probes,
        frequency: args.frequency,
        rows: args.rows,
        features: args.features,
    });
    let crossover = cost_crossover(args.population, args.probes, args.frequency, 10_000);
    let doc = serde_json::json!({
        "chc_total_units": out.chc_total,
        "chc_qx_total_units": out.chc_qx_total,
        "chc_amortized_units": out.chc_amortized,
        "chc_qx_amortized_units": out.chc_qx_amortized,
        "chc_qx_cheaper": out.chc_qx_total < out.chc_total,
        "crossover_generations": crossover,
    });
    println!("{}", serde_json::to_string_pretty(&doc).expect("static document"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::CurveLearning(args) => cmd_curve_learning(args),
        Command::CurveUsefulness(args) => cmd_curve_usefulness(args),
        Command::CostModel(args) => cmd_cost_model(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
