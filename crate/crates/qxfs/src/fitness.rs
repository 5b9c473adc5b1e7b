//! Fitness evaluation plumbing shared by the engines.
//!
//! Engines see candidates through [`FitnessEval`] so the same optimizer can
//! run against the expensive original function, the instance-subset
//! meta-model, or a plain closure in tests. The cost ledger separates
//! original-function work from surrogate work, in abstract `rows * k^2`
//! training units plus raw call counts.

use serde::{Deserialize, Serialize};

use crate::bitmask::BitMask;
use crate::error::Result;

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounters {
    pub original_evals: u64,
    pub surrogate_evals: u64,
    /// Original-function cost in `n_train * k^2` units.
    pub original_units: u64,
    /// Surrogate cost in `|instance subset| * k^2` units.
    pub surrogate_units: u64,
}

/// Accumulates evaluation costs across the stages of a run.
#[derive(Debug, Default, Clone)]
pub struct CostLedger {
    counters: EvalCounters,
}

impl CostLedger {
    pub fn charge_original(&mut self, rows: usize, features: usize) {
        self.counters.original_evals += 1;
        self.counters.original_units += (rows * features * features) as u64;
    }

    pub fn charge_surrogate(&mut self, rows: usize, features: usize) {
        self.counters.surrogate_evals += 1;
        self.counters.surrogate_units += (rows * features * features) as u64;
    }

    pub fn snapshot(&self) -> EvalCounters {
        self.counters
    }
}

/// A fitness function over bitstring genomes. Engines maximize the returned
/// value. `counters` reports cumulative evaluation costs for run reports.
pub trait FitnessEval {
    fn evaluate(&mut self, genome: &BitMask) -> Result<f64>;

    fn counters(&self) -> EvalCounters {
        EvalCounters::default()
    }
}

impl<T: FitnessEval + ?Sized> FitnessEval for &mut T {
    fn evaluate(&mut self, genome: &BitMask) -> Result<f64> {
        (**self).evaluate(genome)
    }

    fn counters(&self) -> EvalCounters {
        (**self).counters()
    }
}

/// Wraps a plain closure as a fitness function, counting calls as
/// original-function evaluations.
pub struct FnFitness<F> {
    f: F,
    calls: u64,
}

impl<F: FnMut(&BitMask) -> Result<f64>> FnFitness<F> {
    pub fn new(f: F) -> Self {
        FnFitness { f, calls: 0 }
    }
}

impl<F: FnMut(&BitMask) -> Result<f64>> FitnessEval for FnFitness<F> {
    fn evaluate(&mut self, genome: &BitMask) -> Result<f64> {
        self.calls += 1;
        (self.f)(genome)
    }

    fn counters(&self) -> EvalCounters {
        EvalCounters {
            original_evals: self.calls,
            ..EvalCounters::default()
        }
    }
}
