//! Two-stage qualitative-approximation feature selection.
//!
//! Stage one (active sampling) evolves an instance subset whose trained
//! classifier ranks a set of probe feature subsets the way the full-data
//! classifier does, scored by `f_is = (1 - rho) + |s|/n`. Stage two runs the
//! chosen binary optimizer over feature masks against that meta-model,
//! re-grounding the whole population on the original fitness function every
//! `f` generations (evolution control); the reported solution always comes
//! from an original-function evaluation, never a surrogate-only value.

use std::cell::RefCell;
use std::rc::Rc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitmask::BitMask;
use crate::bpso::{PsoConfig, PsoState};
use crate::chc::{self, ChcConfig, ChcState};
use crate::data::{view, SplitSet};
use crate::error::{Error, Result};
use crate::fitness::{CostLedger, EvalCounters, FitnessEval};
use crate::metrics::spearman_rho;
use crate::report::{GenerationRecord, RunReport};
use crate::tree::{self, TreeParams};

/// Probe feature subsets and their original-function fitness, taken once
/// before instance selection as a sample of the optimization surface.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub subsets: Vec<BitMask>,
    pub original_fitness: Vec<f64>,
}

/// Instance subset used to train the approximate classifier.
#[derive(Debug, Clone)]
pub struct MetaModel {
    pub instance_mask: BitMask,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    Chc,
    Pso,
}

#[derive(Debug, Clone)]
pub struct QxConfig {
    /// Number of probe subsets `q`.
    pub probe_count: usize,
    /// Evolution-control frequency `f` in generations.
    pub control_frequency: usize,
    /// Instance-selection population size.
    pub sampling_population: usize,
    /// Instance-selection generation cap.
    pub sampling_max_generations: usize,
    /// Instance-selection stagnation window.
    pub sampling_no_change_limit: usize,
    /// Per-bit probability for initial instance genomes.
    pub instance_bit_prob: f64,
    /// Per-bit probability for probe feature subsets.
    pub probe_bit_prob: f64,
    /// Optimizer driving the feature-selection stage.
    pub engine: EngineKind,
    /// Seed for the sampling stage (probe draw + instance GA); the feature
    /// stage uses the embedded engine config's own seed.
    pub seed: u64,
    pub chc: ChcConfig,
    pub pso: PsoConfig,
    pub tree: TreeParams,
}

impl Default for QxConfig {
    fn default() -> Self {
        QxConfig {
            probe_count: 20,
            control_frequency: 10,
            sampling_population: 4,
            sampling_max_generations: 10,
            sampling_no_change_limit: 3,
            instance_bit_prob: 0.5,
            probe_bit_prob: 0.5,
            engine: EngineKind::Chc,
            seed: 0,
            chc: ChcConfig::default(),
            pso: PsoConfig::default(),
            tree: TreeParams::default(),
        }
    }
}

impl QxConfig {
    pub fn validate(&self) -> Result<()> {
        if self.probe_count < 2 {
            return Err(Error::InvalidConfig(format!(
                "probe_count must be >= 2, got {}",
                self.probe_count
            )));
        }
        if self.control_frequency == 0 {
            return Err(Error::InvalidConfig("control_frequency must be >= 1".into()));
        }
        if self.sampling_population < 2 || !self.sampling_population.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "sampling_population must be even and >= 2, got {}",
                self.sampling_population
            )));
        }
        for (name, p) in [
            ("instance_bit_prob", self.instance_bit_prob),
            ("probe_bit_prob", self.probe_bit_prob),
        ] {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidConfig(format!("{name} must be in (0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

/// Fit a tree on the masked training view and score it on the validation
/// split restricted to the same features. This is the expensive fitness the
/// meta-model stands in for; the ledger is charged at full training size.
pub fn evaluate_original(
    mask: &BitMask,
    splits: &SplitSet,
    params: &TreeParams,
    ledger: &RefCell<CostLedger>,
) -> Result<f64> {
    let train = view(&splits.train, Some(mask), None)?;
    let model = tree::fit(&train, params)?;
    let validation = view(&splits.validation, Some(mask), None)?;
    let accuracy = tree::accuracy(&tree::predict(&model, &validation)?, validation.labels())?;
    ledger
        .borrow_mut()
        .charge_original(splits.train.n_rows(), splits.train.n_features());
    Ok(accuracy)
}

/// Same contract as [`evaluate_original`] but training only on the
/// meta-model's instance subset, charged at the subset size.
pub fn meta_fitness(
    mask: &BitMask,
    meta: &MetaModel,
    splits: &SplitSet,
    params: &TreeParams,
    ledger: &RefCell<CostLedger>,
) -> Result<f64> {
    let train = view(&splits.train, Some(mask), Some(&meta.instance_mask))?;
    let model = tree::fit(&train, params)?;
    let validation = view(&splits.validation, Some(mask), None)?;
    let accuracy = tree::accuracy(&tree::predict(&model, &validation)?, validation.labels())?;
    ledger
        .borrow_mut()
        .charge_surrogate(meta.instance_mask.popcount(), splits.train.n_features());
    Ok(accuracy)
}

/// Instance-selection objective, minimized: `(1 - rho(o, a)) + |s|/n` where
/// `a` holds the probe accuracies of trees trained only on the candidate
/// instance subset. An undefined correlation (the candidate cannot
/// distinguish any probes) counts as rho = 0.
pub fn instance_fitness(
    instances: &BitMask,
    snapshot: &Snapshot,
    splits: &SplitSet,
    params: &TreeParams,
    ledger: &RefCell<CostLedger>,
) -> Result<f64> {
    let n_train = splits.train.n_rows();
    if instances.len() != n_train {
        return Err(Error::MaskLength {
            expected: n_train,
            got: instances.len(),
        });
    }
    let selected = instances.popcount();
    if selected == 0 {
        return Err(Error::EmptyInstanceMask);
    }

    let mut approx = Vec::with_capacity(snapshot.subsets.len());
    for probe in &snapshot.subsets {
        let train = view(&splits.train, Some(probe), Some(instances))?;
        let model = tree::fit(&train, params)?;
        let validation = view(&splits.validation, Some(probe), None)?;
        approx.push(tree::accuracy(
            &tree::predict(&model, &validation)?,
            validation.labels(),
        )?);
        ledger
            .borrow_mut()
            .charge_surrogate(selected, splits.train.n_features());
    }

    let rho = match spearman_rho(&snapshot.original_fitness, &approx) {
        Ok(rho) => rho,
        Err(Error::UndefinedCorrelation) => 0.0,
        Err(e) => return Err(e),
    };
    Ok((1.0 - rho) + selected as f64 / n_train as f64)
}

/// Evaluate fixed probe subsets with the original function.
pub fn snapshot_from_masks(
    masks: Vec<BitMask>,
    splits: &SplitSet,
    params: &TreeParams,
    ledger: &RefCell<CostLedger>,
) -> Result<Snapshot> {
    if masks.len() < 2 {
        return Err(Error::TooFewValues(masks.len()));
    }
    let mut original_fitness = Vec::with_capacity(masks.len());
    for mask in &masks {
        original_fitness.push(evaluate_original(mask, splits, params, ledger)?);
    }
    Ok(Snapshot {
        subsets: masks,
        original_fitness,
    })
}

fn draw_probes<R: Rng>(k: usize, q: usize, bit_prob: f64, rng: &mut R) -> Vec<BitMask> {
    (0..q)
        .map(|_| loop {
            let mask = BitMask::random(k, bit_prob, rng);
            if mask.popcount() > 0 {
                break mask;
            }
        })
        .collect()
}

/// Draw `q` random probe subsets and evaluate them with the original
/// function. A zero-variance fitness vector makes the rank correlation
/// undefined, so one fresh redraw is attempted before giving up.
pub fn make_snapshot(
    splits: &SplitSet,
    probe_count: usize,
    bit_prob: f64,
    seed: u64,
    params: &TreeParams,
    ledger: &RefCell<CostLedger>,
) -> Result<Snapshot> {
    let k = splits.train.n_features();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _attempt in 0..2 {
        let snapshot = snapshot_from_masks(
            draw_probes(k, probe_count, bit_prob, &mut rng),
            splits,
            params,
            ledger,
        )?;
        let first = snapshot.original_fitness[0];
        if snapshot.original_fitness.iter().any(|&v| v != first) {
            return Ok(snapshot);
        }
    }
    Err(Error::DegenerateSnapshot(probe_count))
}

/// Engine-facing wrapper around [`instance_fitness`]: negates the minimized
/// objective and enforces the popcount cap on every genome it is asked to
/// evaluate.
struct InstanceFitness<'a> {
    snapshot: &'a Snapshot,
    splits: &'a SplitSet,
    params: &'a TreeParams,
    ledger: Rc<RefCell<CostLedger>>,
    cap: usize,
}

impl FitnessEval for InstanceFitness<'_> {
    fn evaluate(&mut self, genome: &BitMask) -> Result<f64> {
        let popcount = genome.popcount();
        if popcount > self.cap {
            return Err(Error::InstanceCapExceeded {
                got: popcount,
                cap: self.cap,
            });
        }
        instance_fitness(genome, self.snapshot, self.splits, self.params, &self.ledger)
            .map(|f_is| -f_is)
    }

    fn counters(&self) -> EvalCounters {
        self.ledger.borrow().snapshot()
    }
}

struct MetaFitness<'a> {
    meta: &'a MetaModel,
    splits: &'a SplitSet,
    params: &'a TreeParams,
    ledger: Rc<RefCell<CostLedger>>,
}

impl FitnessEval for MetaFitness<'_> {
    fn evaluate(&mut self, genome: &BitMask) -> Result<f64> {
        meta_fitness(genome, self.meta, self.splits, self.params, &self.ledger)
    }

    fn counters(&self) -> EvalCounters {
        self.ledger.borrow().snapshot()
    }
}

/// Original-function fitness for plain (non-surrogate) wrapper runs.
pub struct OriginalFitness<'a> {
    splits: &'a SplitSet,
    params: TreeParams,
    ledger: Rc<RefCell<CostLedger>>,
}

impl<'a> OriginalFitness<'a> {
    pub fn new(splits: &'a SplitSet, params: TreeParams, ledger: Rc<RefCell<CostLedger>>) -> Self {
        OriginalFitness {
            splits,
            params,
            ledger,
        }
    }
}

impl FitnessEval for OriginalFitness<'_> {
    fn evaluate(&mut self, genome: &BitMask) -> Result<f64> {
        evaluate_original(genome, self.splits, &self.params, &self.ledger)
    }

    fn counters(&self) -> EvalCounters {
        self.ledger.borrow().snapshot()
    }
}

/// Stage one: evolve an instance mask with a small capped CHC run. Every
/// genome the engine evaluates is checked against the `n/2` cap, and the
/// returned meta-model satisfies `1 <= popcount <= n/2`.
pub fn active_sampling(
    splits: &SplitSet,
    cfg: &QxConfig,
    ledger: &Rc<RefCell<CostLedger>>,
    deadline: Option<Instant>,
) -> Result<(MetaModel, RunReport)> {
    cfg.validate()?;
    let n_train = splits.train.n_rows();
    let cap = (n_train / 2).max(1);

    let mut seed_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let snapshot_seed = seed_rng.gen::<u64>();
    let instance_seed = seed_rng.gen::<u64>();

    let snapshot = make_snapshot(
        splits,
        cfg.probe_count,
        cfg.probe_bit_prob,
        snapshot_seed,
        &cfg.tree,
        ledger,
    )?;

    let engine_cfg = ChcConfig {
        population_size: cfg.sampling_population,
        bit_prob: cfg.instance_bit_prob,
        initial_threshold: None,
        divergence_rate: cfg.chc.divergence_rate,
        max_generations: cfg.sampling_max_generations,
        no_change_limit: cfg.sampling_no_change_limit,
        max_popcount: Some(cap),
        seed: instance_seed,
    };
    let fitness = InstanceFitness {
        snapshot: &snapshot,
        splits,
        params: &cfg.tree,
        ledger: Rc::clone(ledger),
        cap,
    };
    let (best, report) = chc::run_with_deadline(&engine_cfg, n_train, fitness, deadline)?;

    let popcount = best.popcount();
    if popcount == 0 || popcount > cap {
        return Err(Error::InstanceCapExceeded { got: popcount, cap });
    }
    Ok((MetaModel { instance_mask: best }, report))
}

enum EngineState {
    Chc(ChcState),
    Pso(PsoState),
}

impl EngineState {
    fn step<F: FitnessEval>(&mut self, fitness: &mut F) -> Result<bool> {
        match self {
            EngineState::Chc(s) => s.step(fitness),
            EngineState::Pso(s) => s.step(fitness),
        }
    }

    fn genomes(&self) -> &[BitMask] {
        match self {
            EngineState::Chc(s) => &s.population().individuals,
            EngineState::Pso(s) => &s.swarm().positions,
        }
    }
}

/// Re-evaluate the working population with the original function and fold
/// the results into the best-so-far solution. Returns whether it improved.
fn control_pass(
    g_star: &mut Option<(BitMask, f64)>,
    genomes: &[BitMask],
    splits: &SplitSet,
    params: &TreeParams,
    ledger: &RefCell<CostLedger>,
) -> Result<bool> {
    let mut improved = false;
    for genome in genomes {
        if genome.popcount() == 0 {
            continue; // unevaluable; only PSO resampling can produce these
        }
        let value = evaluate_original(genome, splits, params, ledger)?;
        let better = match g_star {
            None => true,
            Some((_, best)) => value > *best,
        };
        if better {
            *g_star = Some((genome.clone(), value));
            improved = true;
        }
    }
    Ok(improved)
}

/// Stage two: drive the configured engine under the meta-model, with an
/// original-function control pass every `control_frequency` generations.
///
/// Control values feed only the best-so-far solution and the stagnation
/// counter; the engine's working fitness stays on the surrogate scale so
/// survivor selection never compares values from two different evaluators.
/// A final control pass runs if the loop ends between checkpoints, so the
/// returned mask is always original-evaluated.
pub fn feature_selection_with_meta(
    splits: &SplitSet,
    meta: &MetaModel,
    cfg: &QxConfig,
    ledger: &Rc<RefCell<CostLedger>>,
    deadline: Option<Instant>,
) -> Result<(BitMask, RunReport)> {
    cfg.validate()?;
    let start = Instant::now();
    let k = splits.train.n_features();
    let mut fitness = MetaFitness {
        meta,
        splits,
        params: &cfg.tree,
        ledger: Rc::clone(ledger),
    };
    let (mut engine, t_max, no_change_limit) = match cfg.engine {
        EngineKind::Chc => (
            EngineState::Chc(ChcState::new(&cfg.chc, k, &mut fitness)?),
            cfg.chc.max_generations,
            cfg.chc.no_change_limit,
        ),
        EngineKind::Pso => (
            EngineState::Pso(PsoState::new(&cfg.pso, k, &mut fitness)?),
            cfg.pso.max_iterations,
            cfg.pso.no_change_limit,
        ),
    };

    let mut g_star: Option<(BitMask, f64)> = None;
    let mut records: Vec<GenerationRecord> = Vec::new();
    let record_control = |g_star: &Option<(BitMask, f64)>,
                              generation: usize,
                              records: &mut Vec<GenerationRecord>,
                              ledger: &RefCell<CostLedger>| {
        if let Some((mask, fitness)) = g_star {
            let counters = ledger.borrow().snapshot();
            records.push(GenerationRecord {
                generation,
                best_original_fitness: *fitness,
                best_mask: mask.clone(),
                original_evals: counters.original_evals,
                surrogate_evals: counters.surrogate_evals,
                wall_ms: start.elapsed().as_millis() as u64,
            });
        }
    };

    let mut stagnant_controls = 0usize;
    let mut generation = 0usize;
    let mut last_control = 0usize;
    while generation < t_max {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
        generation += 1;
        engine.step(&mut fitness)?;
        if generation.is_multiple_of(cfg.control_frequency) {
            let improved = control_pass(&mut g_star, engine.genomes(), splits, &cfg.tree, ledger)?;
            last_control = generation;
            record_control(&g_star, generation, &mut records, ledger);
            if improved {
                stagnant_controls = 0;
            } else {
                stagnant_controls += 1;
                if stagnant_controls >= no_change_limit {
                    break;
                }
            }
        }
    }
    if last_control != generation || g_star.is_none() {
        control_pass(&mut g_star, engine.genomes(), splits, &cfg.tree, ledger)?;
        record_control(&g_star, generation, &mut records, ledger);
    }

    let (best_mask, best_fitness) = g_star.ok_or_else(|| {
        Error::InvalidConfig("population contains no evaluable genome".into())
    })?;
    let mut report = RunReport::new(best_mask.clone(), best_fitness);
    report.records = records;
    report.counters = ledger.borrow().snapshot();
    Ok((best_mask, report))
}

/// The full two-stage pipeline: active sampling builds the meta-model, the
/// feature stage searches under it with evolution control.
pub fn qx_run(
    splits: &SplitSet,
    cfg: &QxConfig,
    deadline: Option<Instant>,
) -> Result<(BitMask, RunReport)> {
    let ledger = Rc::new(RefCell::new(CostLedger::default()));
    let (meta, sampling_report) = active_sampling(splits, cfg, &ledger, deadline)?;
    let (best, mut report) = feature_selection_with_meta(splits, &meta, cfg, &ledger, deadline)?;
    report.sampling_records = sampling_report.records;
    report.counters = ledger.borrow().snapshot();
    Ok((best, report))
}
