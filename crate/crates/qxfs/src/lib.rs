//! Surrogate-assisted evolutionary feature selection.
//!
//! Wrapper feature selection trains a classifier per candidate feature
//! subset, which is prohibitively slow on large datasets. This crate builds
//! a lightweight qualitative meta-model — a classifier trained on an
//! actively selected instance subset that ranks feature subsets like the
//! full-data classifier does — and runs CHC or binary-PSO search against it,
//! periodically re-grounding the population on the original fitness
//! function (evolution control).
//!
//! Modules:
//! - [`data`]: loading, preprocessing, 60/20/20 splits, masked views
//! - [`tree`]: deterministic CART induction (the wrapped classifier)
//! - [`metrics`]: Spearman rank correlation
//! - [`chc`]: CHC binary optimizer (HUX, incest prevention, restarts)
//! - [`bpso`]: global-topology binary PSO
//! - [`surrogate`]: active instance sampling and the two-stage QX pipeline
//! - [`bench`]: curves, the analytic cost model and the experiment runner

pub mod bench;
pub mod bitmask;
pub mod bpso;
pub mod chc;
pub mod data;
pub mod error;
pub mod fitness;
pub mod metrics;
pub mod report;
pub mod surrogate;
pub mod tree;

pub use bitmask::BitMask;
pub use data::{Dataset, LabelColumn, LoadOptions, RawTable, SplitSet};
pub use error::{Error, Result};
pub use report::{CurvePoint, RunReport};
