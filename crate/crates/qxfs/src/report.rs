//! Machine-readable run reports and curve points.

use serde::{Deserialize, Serialize};

use crate::bitmask::BitMask;
use crate::fitness::EvalCounters;

/// One line of run history. For plain optimizer runs a record is written per
/// generation; for surrogate-assisted runs a record is written per
/// evolution-control checkpoint, so `best_original_fitness` always comes
/// from the original fitness function and is non-decreasing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_original_fitness: f64,
    pub best_mask: BitMask,
    pub original_evals: u64,
    pub surrogate_evals: u64,
    pub wall_ms: u64,
}

/// Final model summary: the classifier retrained on the full training set
/// with the selected mask and scored on the held-out test split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FinalSummary {
    pub test_accuracy: f64,
    pub selected_features: Vec<usize>,
    pub selected_feature_names: Vec<String>,
    pub total_time_ms: u64,
}

/// Experiment identity attached by the harness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub method: String,
    pub seed: u64,
    pub dataset: String,
    pub label_column: String,
    pub budget_ms: Option<u64>,
    /// The wall-clock budget covers the whole run including any
    /// instance-sampling stage.
    pub budget_scope: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub best_mask: BitMask,
    pub best_fitness: f64,
    pub records: Vec<GenerationRecord>,
    /// Instance-selection stage history; empty for non-surrogate methods.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sampling_records: Vec<GenerationRecord>,
    pub counters: EvalCounters,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_summary: Option<FinalSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<RunMeta>,
}

impl RunReport {
    pub fn new(best_mask: BitMask, best_fitness: f64) -> Self {
        RunReport {
            best_mask,
            best_fitness,
            records: Vec::new(),
            sampling_records: Vec::new(),
            counters: EvalCounters::default(),
            final_summary: None,
            meta: None,
        }
    }
}

/// One point of a learning or approximation-usefulness curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub sample_size: usize,
    pub metric: f64,
}
