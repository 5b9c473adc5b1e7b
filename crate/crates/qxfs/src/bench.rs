//! Benchmark harness: progressive-sampling curves, the analytic cost model
//! and the per-seed experiment runner behind the CLI.

use std::cell::RefCell;
use std::path::{Path, PathBuf};
use std::rc::Rc;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitmask::BitMask;
use crate::bpso::{self, PsoConfig};
use crate::chc::{self, ChcConfig};
use crate::data::{load_dataset, preprocess, split, view, LabelColumn, LoadOptions, SplitSet};
use crate::error::{Error, Result};
use crate::fitness::CostLedger;
use crate::report::{CurvePoint, FinalSummary, RunMeta, RunReport};
use crate::surrogate::{
    self, make_snapshot, qx_run, EngineKind, OriginalFitness, QxConfig,
};
use crate::tree::{self, TreeParams};

/// Geometric sample-size schedule `{n0 * ratio^i}` truncated at `n_max`,
/// with `n_max` appended when it is not already the last element. Sizes are
/// strictly increasing.
pub fn geometric_schedule(n0: usize, ratio: f64, n_max: usize) -> Result<Vec<usize>> {
    if n0 < 1 || ratio <= 1.0 || n_max < n0 {
        return Err(Error::BadSchedule { n0, ratio, n_max });
    }
    let mut sizes = Vec::new();
    let mut i = 0u32;
    loop {
        let value = n0 as f64 * ratio.powi(i as i32);
        if value > n_max as f64 {
            break;
        }
        let size = value.round() as usize;
        if size > n_max {
            break;
        }
        if sizes.last().is_none_or(|&last| size > last) {
            sizes.push(size);
        }
        i += 1;
    }
    if sizes.last() != Some(&n_max) {
        sizes.push(n_max);
    }
    Ok(sizes)
}

fn sample_rows<R: Rng>(n: usize, m: usize, rng: &mut R) -> BitMask {
    let chosen = rand::seq::index::sample(rng, n, m);
    let mut mask = BitMask::zeros(n);
    for idx in chosen {
        mask.set(idx, true);
    }
    mask
}

/// Test accuracy of trees fit on progressively larger random training
/// samples (all features).
pub fn learning_curve(
    splits: &SplitSet,
    schedule: &[usize],
    seed: u64,
    params: &TreeParams,
) -> Result<Vec<CurvePoint>> {
    let n_train = splits.train.n_rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(schedule.len());
    for &m in schedule {
        if m == 0 || m > n_train {
            return Err(Error::SampleTooLarge { m, n_train });
        }
        let mask = sample_rows(n_train, m, &mut rng);
        let train = view(&splits.train, None, Some(&mask))?;
        let model = tree::fit(&train, params)?;
        let accuracy =
            tree::accuracy(&tree::predict(&model, &splits.test)?, splits.test.labels())?;
        points.push(CurvePoint {
            sample_size: m,
            metric: accuracy,
        });
    }
    Ok(points)
}

/// Approximation-usefulness curve: one probe snapshot against the original
/// function, then the rank correlation of probe accuracies re-computed on
/// progressively larger random training samples.
pub fn usefulness_curve(
    splits: &SplitSet,
    schedule: &[usize],
    probe_count: usize,
    seed: u64,
    params: &TreeParams,
) -> Result<Vec<CurvePoint>> {
    let n_train = splits.train.n_rows();
    let ledger = RefCell::new(CostLedger::default());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let snapshot_seed = rng.gen::<u64>();
    let snapshot = make_snapshot(splits, probe_count, 0.5, snapshot_seed, params, &ledger)?;

    let mut points = Vec::with_capacity(schedule.len());
    for &m in schedule {
        if m == 0 || m > n_train {
            return Err(Error::SampleTooLarge { m, n_train });
        }
        let mask = sample_rows(n_train, m, &mut rng);
        let mut approx = Vec::with_capacity(snapshot.subsets.len());
        for probe in &snapshot.subsets {
            let train = view(&splits.train, Some(probe), Some(&mask))?;
            let model = tree::fit(&train, params)?;
            let validation = view(&splits.validation, Some(probe), None)?;
            approx.push(tree::accuracy(
                &tree::predict(&model, &validation)?,
                validation.labels(),
            )?);
        }
        let rho = match crate::metrics::spearman_rho(&snapshot.original_fitness, &approx) {
            Ok(rho) => rho,
            Err(Error::UndefinedCorrelation) => 0.0,
            Err(e) => return Err(e),
        };
        points.push(CurvePoint {
            sample_size: m,
            metric: rho,
        });
    }
    Ok(points)
}

/// Inputs of the amortized cost comparison, in abstract `n * k^2` units.
#[derive(Debug, Clone, Copy)]
pub struct CostModelInputs {
    /// Feature-selection generations `r`.
    pub generations: u32,
    /// Population size `e`.
    pub population: u32,
    /// Probe count `q`.
    pub probes: u32,
    /// Evolution-control frequency `f`.
    pub frequency: u32,
    /// Training rows `n`.
    pub rows: u64,
    /// Features `k`.
    pub features: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CostModelOutput {
    pub chc_total: f64,
    pub chc_qx_total: f64,
    pub chc_amortized: f64,
    pub chc_qx_amortized: f64,
}

/// Worst-case totals for `r` generations of plain CHC versus the two-stage
/// pipeline: `r*e*n*k^2` against `(21*q + (r/2 + ceil(r/f))*e) * n*k^2`.
/// The surrogate term uses `n/2` rows (the instance cap) and the control
/// term pays full price every `f`-th generation.
pub fn cost_model(inputs: &CostModelInputs) -> CostModelOutput {
    let r = f64::from(inputs.generations);
    let e = f64::from(inputs.population);
    let q = f64::from(inputs.probes);
    let controls = f64::from(inputs.generations.div_ceil(inputs.frequency));
    let unit = (inputs.rows * inputs.features * inputs.features) as f64;

    let chc_total = r * e * unit;
    let chc_qx_total = (21.0 * q + (r / 2.0 + controls) * e) * unit;
    CostModelOutput {
        chc_total,
        chc_qx_total,
        chc_amortized: chc_total / r,
        chc_qx_amortized: chc_qx_total / r,
    }
}

/// Smallest generation count at which the two-stage pipeline becomes
/// cheaper than plain CHC, if any within `r_max`.
pub fn cost_crossover(population: u32, probes: u32, frequency: u32, r_max: u32) -> Option<u32> {
    (1..=r_max).find(|&r| {
        let out = cost_model(&CostModelInputs {
            generations: r,
            population,
            probes,
            frequency,
            rows: 1,
            features: 1,
        });
        out.chc_qx_total < out.chc_total
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Baseline,
    Chc,
    Pso,
    ChcQx,
    PsoQx,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Chc => "chc",
            Method::Pso => "pso",
            Method::ChcQx => "chc_qx",
            Method::PsoQx => "pso_qx",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Method::Baseline),
            "chc" => Ok(Method::Chc),
            "pso" => Ok(Method::Pso),
            "chc_qx" => Ok(Method::ChcQx),
            "pso_qx" => Ok(Method::PsoQx),
            other => Err(Error::InvalidConfig(format!(
                "unknown method `{other}` (expected baseline|chc|pso|chc_qx|pso_qx)"
            ))),
        }
    }
}

/// Engine and surrogate settings shared by every seed of an experiment.
#[derive(Debug, Clone, Default)]
pub struct EngineParams {
    pub chc: ChcConfig,
    pub pso: PsoConfig,
    pub qx: QxSettings,
    pub tree: TreeParams,
}

/// The surrogate-stage knobs, without the embedded engine configs.
#[derive(Debug, Clone)]
pub struct QxSettings {
    pub probe_count: usize,
    pub control_frequency: usize,
    pub sampling_population: usize,
    pub sampling_max_generations: usize,
    pub sampling_no_change_limit: usize,
    pub instance_bit_prob: f64,
    pub probe_bit_prob: f64,
}

impl Default for QxSettings {
    fn default() -> Self {
        let d = QxConfig::default();
        QxSettings {
            probe_count: d.probe_count,
            control_frequency: d.control_frequency,
            sampling_population: d.sampling_population,
            sampling_max_generations: d.sampling_max_generations,
            sampling_no_change_limit: d.sampling_no_change_limit,
            instance_bit_prob: d.instance_bit_prob,
            probe_bit_prob: d.probe_bit_prob,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub data_path: PathBuf,
    pub label: LabelColumn,
    pub delimiter: u8,
    pub method: Method,
    pub seeds: Vec<u64>,
    pub params: EngineParams,
    /// Optional wall-clock cap per seed, covering the whole run including
    /// any sampling stage.
    pub budget_ms: Option<u64>,
    /// Directory for one JSON report per seed; no files when absent.
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(data_path: impl Into<PathBuf>, label: LabelColumn, method: Method) -> Self {
        ExperimentConfig {
            data_path: data_path.into(),
            label,
            delimiter: b',',
            method,
            seeds: vec![1],
            params: EngineParams::default(),
            budget_ms: None,
            out_dir: None,
        }
    }
}

/// Per-seed sub-seeds, all derived from the run seed through one stream so
/// no stage shares another's randomness.
struct SeedPlan {
    data: u64,
    split: u64,
    sampling: u64,
    engine: u64,
}

impl SeedPlan {
    fn derive(run_seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
        SeedPlan {
            data: rng.gen(),
            split: rng.gen(),
            sampling: rng.gen(),
            engine: rng.gen(),
        }
    }
}

fn qx_config(cfg: &ExperimentConfig, engine: EngineKind, plan: &SeedPlan) -> QxConfig {
    let qx = &cfg.params.qx;
    QxConfig {
        probe_count: qx.probe_count,
        control_frequency: qx.control_frequency,
        sampling_population: qx.sampling_population,
        sampling_max_generations: qx.sampling_max_generations,
        sampling_no_change_limit: qx.sampling_no_change_limit,
        instance_bit_prob: qx.instance_bit_prob,
        probe_bit_prob: qx.probe_bit_prob,
        engine,
        seed: plan.sampling,
        chc: ChcConfig {
            seed: plan.engine,
            ..cfg.params.chc.clone()
        },
        pso: PsoConfig {
            seed: plan.engine,
            ..cfg.params.pso.clone()
        },
        tree: cfg.params.tree.clone(),
    }
}

/// Retrain on the full training set with the selected mask and score the
/// held-out test split.
fn final_summary(
    splits: &SplitSet,
    mask: &BitMask,
    params: &TreeParams,
    started: Instant,
) -> Result<FinalSummary> {
    let train = view(&splits.train, Some(mask), None)?;
    let model = tree::fit(&train, params)?;
    let test = view(&splits.test, Some(mask), None)?;
    let test_accuracy = tree::accuracy(&tree::predict(&model, &test)?, test.labels())?;
    Ok(FinalSummary {
        test_accuracy,
        selected_features: mask.ones_indices(),
        selected_feature_names: mask
            .ones_indices()
            .iter()
            .map(|&i| splits.train.feature_names()[i].clone())
            .collect(),
        total_time_ms: started.elapsed().as_millis() as u64,
    })
}

fn run_one_seed(cfg: &ExperimentConfig, raw: &crate::data::RawTable, seed: u64) -> Result<RunReport> {
    let started = Instant::now();
    let deadline = cfg.budget_ms.map(|ms| started + Duration::from_millis(ms));
    let plan = SeedPlan::derive(seed);

    let dataset = preprocess(raw, plan.data)?;
    let splits = split(&dataset, plan.split)?;
    let k = splits.train.n_features();

    let (best, mut report) = match cfg.method {
        Method::Baseline => {
            let mask = BitMask::ones(k);
            let ledger = RefCell::new(CostLedger::default());
            let fitness = surrogate::evaluate_original(&mask, &splits, &cfg.params.tree, &ledger)?;
            let mut report = RunReport::new(mask.clone(), fitness);
            report.counters = ledger.borrow().snapshot();
            (mask, report)
        }
        Method::Chc => {
            let ledger = Rc::new(RefCell::new(CostLedger::default()));
            let fitness =
                OriginalFitness::new(&splits, cfg.params.tree.clone(), Rc::clone(&ledger));
            let engine_cfg = ChcConfig {
                seed: plan.engine,
                ..cfg.params.chc.clone()
            };
            chc::run_with_deadline(&engine_cfg, k, fitness, deadline)?
        }
        Method::Pso => {
            let ledger = Rc::new(RefCell::new(CostLedger::default()));
            let fitness =
                OriginalFitness::new(&splits, cfg.params.tree.clone(), Rc::clone(&ledger));
            let engine_cfg = PsoConfig {
                seed: plan.engine,
                ..cfg.params.pso.clone()
            };
            bpso::run_with_deadline(&engine_cfg, k, fitness, deadline)?
        }
        Method::ChcQx => qx_run(&splits, &qx_config(cfg, EngineKind::Chc, &plan), deadline)?,
        Method::PsoQx => qx_run(&splits, &qx_config(cfg, EngineKind::Pso, &plan), deadline)?,
    };

    report.final_summary = Some(final_summary(&splits, &best, &cfg.params.tree, started)?);
    report.meta = Some(RunMeta {
        method: cfg.method.name().to_string(),
        seed,
        dataset: cfg.data_path.display().to_string(),
        label_column: match &cfg.label {
            LabelColumn::Name(n) => n.clone(),
            LabelColumn::Index(i) => i.to_string(),
        },
        budget_ms: cfg.budget_ms,
        budget_scope: "total wall time including the sampling stage".to_string(),
    });

    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("run_{}_seed{}.json", cfg.method.name(), seed));
        std::fs::write(&path, serde_json::to_vec_pretty(&report)?)?;
    }
    Ok(report)
}

/// Execute the configured method once per seed. Seeds with no explicit list
/// draw from entropy and the drawn value is recorded in each report.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunReport>> {
    if cfg.seeds.is_empty() {
        return Err(Error::InvalidConfig("at least one seed is required".into()));
    }
    let raw = load_dataset(
        &cfg.data_path,
        &cfg.label,
        &LoadOptions {
            delimiter: cfg.delimiter,
        },
    )?;
    cfg.seeds.iter().map(|&s| run_one_seed(cfg, &raw, s)).collect()
}

/// Flat delimiter-separated curve output: `sample_size,metric`.
pub fn write_curve_csv(points: &[CurvePoint], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["sample_size", "metric"])?;
    for p in points {
        writer.write_record([p.sample_size.to_string(), format!("{}", p.metric)])?;
    }
    writer.flush()?;
    Ok(())
}
