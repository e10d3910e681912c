//! Manifest-driven analysis runs.
//!
//! [`run_pipeline`] takes an [`AnalysisManifest`] through segmentation,
//! peeled CSPs, moments, PCA and tracks, and writes every intermediate to a
//! run directory (see [`artifacts`]). Steps whose inputs and CSP settings are
//! unchanged are reloaded from disk instead of recomputed.

pub mod artifacts;
pub mod error;
pub mod manifest;
pub mod render;
pub mod run;
pub mod source;
pub mod stages;

pub use error::{PipelineError, Result};
pub use manifest::AnalysisManifest;
pub use run::{run_manifest, run_pipeline, RunOptions, RunOutcome, RunReport, Stage};
pub use source::FieldSource;
