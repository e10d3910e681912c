//! Analysis manifest: which series to analyse and how.
//!
//! ```json
//! {
//!   "series": [
//!     {"state_label": "S1", "steps": [{"time_fs": 0.0, "f1_path": "h0.cube", "f2_path": "p0.cube"}]},
//!     {"state_label": "rot", "synthetic": {"kind": "rotation", "steps": 50}}
//!   ],
//!   "csp": {"res": 256, "window": "auto", "padding": 0.05},
//!   "moments": {"pooling": "per-order"},
//!   "segmentation": {"weights": "covalent"},
//!   "output_dir": "out"
//! }
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::path::{Path, PathBuf};

use bimoment_core::csp::DEFAULT_RES;
use bimoment_core::{Pooling, RangeWindow};
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisManifest {
    pub series: Vec<SeriesSpec>,
    #[serde(default)]
    pub csp: CspConfig,
    #[serde(default)]
    pub moments: MomentsConfig,
    #[serde(default)]
    pub segmentation: SegmentationConfig,
    pub output_dir: PathBuf,
    /// Seed for random synthetic offsets; the `--seed` flag overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSpec {
    pub state_label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<StepFiles>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepFiles {
    pub time_fs: f64,
    pub f1_path: PathBuf,
    pub f2_path: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyntheticKind {
    Rotation,
    Scaling,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    #[serde(default = "default_steps")]
    pub steps: u32,
    /// Offset of the scaling field; drawn from `[-0.5, 0]` with the run seed
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Vertices per side of the unit square.
    #[serde(default = "default_n")]
    pub n: usize,
    /// Vertex layers along z.
    #[serde(default = "default_nz")]
    pub nz: usize,
    #[serde(default = "default_dt")]
    pub dt_fs: f64,
}

fn default_steps() -> u32 {
    50
}
fn default_n() -> usize {
    64
}
fn default_nz() -> usize {
    2
}
fn default_dt() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CspConfig {
    #[serde(default = "default_res")]
    pub res: usize,
    #[serde(default)]
    pub window: WindowSpec,
    #[serde(default = "default_padding")]
    pub padding: f64,
}

fn default_res() -> usize {
    DEFAULT_RES
}
fn default_padding() -> f64 {
    0.05
}

impl Default for CspConfig {
    fn default() -> Self {
        CspConfig {
            res: default_res(),
            window: WindowSpec::Auto,
            padding: default_padding(),
        }
    }
}

/// `"auto"` or an explicit `{min1, max1, min2, max2}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WindowSpec {
    #[default]
    #[serde(with = "auto_tag")]
    Auto,
    Explicit(RangeWindow<f64>),
}

mod auto_tag {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("auto")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "auto" {
            Ok(())
        } else {
            Err(serde::de::Error::custom(format!("expected \"auto\", got {s:?}")))
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsConfig {
    #[serde(default)]
    pub pooling: Pooling,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightSource {
    /// Squared covalent radius of the element.
    #[default]
    Covalent,
    /// All weights zero: plain Voronoi cells.
    Uniform,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentationConfig {
    #[serde(default)]
    pub weights: WeightSource,
}

fn invalid(path: &Path, msg: impl Into<String>) -> PipelineError {
    PipelineError::Manifest {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

/// Characters allowed in state labels, which become directory names.
pub fn valid_label(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        && s != "."
        && s != ".."
}

impl AnalysisManifest {
    /// Reads, resolves relative paths against the manifest's directory and
    /// validates.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| invalid(path, e.to_string()))?;
        let mut m: AnalysisManifest = serde_json::from_str(&text).map_err(|e| invalid(path, e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        m.resolve_paths(base);
        m.validate().map_err(|e| match e {
            PipelineError::Validation(msg) => invalid(path, msg),
            other => other,
        })?;
        Ok(m)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        for s in &mut self.series {
            for step in s.steps.iter_mut().flatten() {
                fix(&mut step.f1_path);
                fix(&mut step.f2_path);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(PipelineError::Validation(msg));
        if self.series.is_empty() {
            return bad("series list is empty".into());
        }
        if self.csp.res < 2 {
            return bad(format!("csp.res must be >= 2, got {}", self.csp.res));
        }
        if !(self.csp.padding >= 0.0 && self.csp.padding.is_finite()) {
            return bad(format!("csp.padding must be >= 0, got {}", self.csp.padding));
        }
        if let WindowSpec::Explicit(w) = &self.csp.window {
            w.validate().map_err(|e| PipelineError::Validation(e.to_string()))?;
        }
        let mut labels = std::collections::BTreeSet::new();
        for s in &self.series {
            if !valid_label(&s.state_label) {
                return bad(format!(
                    "state label {:?} must be non-empty and use only letters, digits, '-', '_' or '.'",
                    s.state_label
                ));
            }
            if !labels.insert(&s.state_label) {
                return bad(format!("duplicate state label {:?}", s.state_label));
            }
            match (&s.steps, &s.synthetic) {
                (Some(steps), None) => {
                    if steps.is_empty() {
                        return bad(format!("series {} has no steps", s.state_label));
                    }
                    for (i, st) in steps.iter().enumerate() {
                        if i > 0 && !(st.time_fs > steps[i - 1].time_fs) {
                            return bad(format!("series {}: time_fs must increase strictly", s.state_label));
                        }
                        for p in [&st.f1_path, &st.f2_path] {
                            if !p.is_file() {
                                return bad(format!("series {}: missing file {}", s.state_label, p.display()));
                            }
                        }
                    }
                }
                (None, Some(syn)) => {
                    if syn.steps == 0 {
                        return bad(format!("series {} has no steps", s.state_label));
                    }
                    if syn.n < 2 || syn.nz < 2 {
                        return bad(format!(
                            "series {}: synthetic grid needs n >= 2 and nz >= 2",
                            s.state_label
                        ));
                    }
                    if !(syn.dt_fs > 0.0) {
                        return bad(format!("series {}: dt_fs must be positive", s.state_label));
                    }
                    if let Some(b) = syn.b {
                        if !(-0.5..=0.0).contains(&b) {
                            return bad(format!("series {}: b must lie in [-0.5, 0], got {b}", s.state_label));
                        }
                    }
                }
                _ => {
                    return bad(format!(
                        "series {} needs exactly one of \"steps\" or \"synthetic\"",
                        s.state_label
                    ))
                }
            }
        }
        Ok(())
    }
}
