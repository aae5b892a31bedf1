//! Instance space analysis for a single labeled classification dataset.
//!
//! The pipeline computes thirteen per-instance hardness measures, evaluates a
//! pool of classifiers with nested cross-validation to obtain per-instance
//! log-loss and instance hardness, selects the measures most related to that
//! performance, fits a 2-D linear-trend projection oriented so harder
//! instances sit toward the upper left, and delineates footprints of good
//! performance in the resulting plane.

pub mod dataset;
pub mod distance;
pub mod error;
pub mod folds;
pub mod footprints;
pub mod measures;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub mod pool;
pub mod projection;
pub mod rng;
pub mod selection;
pub mod server;

pub use dataset::{load_dataset, Dataset, IngestOptions, RawRecords};
pub use distance::{build_distance_index, DistanceIndex};
pub use error::{Error, Result};
pub use folds::{stratified_kfold, FoldAssignment};
pub use pipeline::{
    run_and_write, run_pipeline, validate_bundle, write_bundle, AnalysisBundle, RunConfig,
};
