//! On-disk layout of a run directory.
//!
//! ```text
//! index.json                      states, steps, segments, field sources
//! labels/<state>/tNNNN.{bin,json} label grids
//! csp/<state>/tNNNN/<seg>.{bin,json}
//! csp/<state>/tNNNN/step.json     cache record, written last
//! moments.{json,csv}
//! tracks.{json,csv}
//! run_report.json
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use bimoment_core::{CspHistogram, PcaModel, Pooling, RangeWindow, SegmentKey, TrackSet};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{PipelineError, Result};
use crate::manifest::WeightSource;
use crate::source::FieldSource;

pub const INDEX_FILE: &str = "index.json";
pub const MOMENTS_JSON: &str = "moments.json";
pub const MOMENTS_CSV: &str = "moments.csv";
pub const TRACKS_JSON: &str = "tracks.json";
pub const TRACKS_CSV: &str = "tracks.csv";
pub const REPORT_FILE: &str = "run_report.json";

/// Path helper rooted at a run directory.
#[derive(Clone, Debug)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn labels_stem(&self, state: &str, t: usize) -> PathBuf {
        self.root.join("labels").join(state).join(step_dir(t))
    }

    pub fn step_dir(&self, state: &str, t: usize) -> PathBuf {
        self.root.join("csp").join(state).join(step_dir(t))
    }

    pub fn csp_stem(&self, state: &str, t: usize, segment: SegmentKey) -> PathBuf {
        self.step_dir(state, t).join(segment.to_string())
    }
}

fn step_dir(t: usize) -> String {
    format!("t{t:04}")
}

pub fn ensure_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| PipelineError::io(p, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    fs::write(path, bytes).map_err(|e| PipelineError::io(path, e))
}

pub fn write_json<V: Serialize>(path: &Path, value: &V) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact types serialize");
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn read_json<V: DeserializeOwned>(path: &Path) -> Result<V> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| PipelineError::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, e)))
}

/// JSON sidecar of a stored histogram.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CspSidecar {
    pub window: RangeWindow<f64>,
    pub res: [usize; 2],
    pub total_mass: f64,
    pub out_of_window: f64,
    pub segment_id: SegmentKey,
    pub time_index: usize,
    pub time_fs: f64,
    pub state_label: String,
}

/// Writes `<stem>.bin` (little-endian f64, f1 fastest) and `<stem>.json`.
pub fn write_csp(stem: &Path, hist: &CspHistogram<f64>, meta: CspMeta<'_>) -> Result<()> {
    write_bytes(&stem.with_extension("bin"), &hist.to_le_bytes())?;
    let side = CspSidecar {
        window: hist.window,
        res: hist.res,
        total_mass: hist.total_mass(),
        out_of_window: hist.out_of_window,
        segment_id: meta.segment,
        time_index: meta.time_index,
        time_fs: meta.time_fs,
        state_label: meta.state_label.to_owned(),
    };
    write_json(&stem.with_extension("json"), &side)
}

#[derive(Clone, Copy, Debug)]
pub struct CspMeta<'a> {
    pub state_label: &'a str,
    pub segment: SegmentKey,
    pub time_index: usize,
    pub time_fs: f64,
}

pub fn read_csp(stem: &Path) -> Result<(CspHistogram<f64>, CspSidecar)> {
    let side: CspSidecar = read_json(&stem.with_extension("json"))?;
    let bin = stem.with_extension("bin");
    let bytes = fs::read(&bin).map_err(|e| PipelineError::io(&bin, e))?;
    let hist = CspHistogram::from_le_bytes(side.window, side.res, side.out_of_window, &bytes)?;
    Ok((hist, side))
}

/// Written after all CSPs of a step; its presence with a matching key marks
/// the step as reusable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub cache_key: String,
    pub segments: Vec<SegmentKey>,
    pub domain_volume: f64,
}

/// Directory-level description of a run, read by the HTTP service.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunIndex {
    pub window: RangeWindow<f64>,
    pub res: [usize; 2],
    pub pooling: Pooling,
    pub weights: WeightSource,
    pub states: Vec<StateIndex>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateIndex {
    pub state_label: String,
    /// Atom segments seen at any step, ascending.
    pub segments: Vec<i32>,
    pub steps: Vec<StepIndex>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepIndex {
    pub time_index: usize,
    pub time_fs: f64,
    pub source: FieldSource,
}

/// One row of the moments table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub state_label: String,
    pub segment_id: SegmentKey,
    pub time_index: usize,
    pub time_fs: f64,
    pub raw: [f64; 4],
    pub normalized: [f64; 4],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentsTable {
    pub pooling: Pooling,
    pub columns: [String; 4],
    pub rows: Vec<MomentRow>,
}

pub fn moment_columns() -> [String; 4] {
    ["m00", "m20", "m11", "m02"].map(String::from)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelExport {
    pub mean: [f64; 4],
    pub components: [[f64; 4]; 4],
    pub eigenvalues: [f64; 4],
    pub explained_variance_ratio: [f64; 4],
    /// Names of the moment inputs each component row weighs.
    pub loadings_on: [String; 4],
}

impl ModelExport {
    pub fn new(m: &PcaModel) -> Self {
        ModelExport {
            mean: m.mean,
            components: m.components,
            eigenvalues: m.eigenvalues,
            explained_variance_ratio: m.explained_variance_ratio(),
            loadings_on: moment_columns(),
        }
    }

    pub fn model(&self) -> PcaModel {
        PcaModel {
            mean: self.mean,
            components: self.components,
            eigenvalues: self.eigenvalues,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracksExport {
    pub model: ModelExport,
    #[serde(flatten)]
    pub tracks: TrackSet,
}

fn csv_error(path: &Path, e: csv::Error) -> PipelineError {
    PipelineError::io(path, std::io::Error::other(e))
}

pub fn write_moments_csv(path: &Path, table: &MomentsTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "state_label".to_owned(),
        "segment_id".into(),
        "time_index".into(),
        "time_fs".into(),
    ];
    header.extend(moment_columns());
    header.extend(moment_columns().map(|c| format!("{c}_norm")));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for r in &table.rows {
        let mut rec = vec![
            r.state_label.clone(),
            r.segment_id.to_string(),
            r.time_index.to_string(),
            r.time_fs.to_string(),
        ];
        rec.extend(r.raw.iter().chain(&r.normalized).map(f64::to_string));
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| PipelineError::io(path, std::io::Error::other(e.to_string())))?;
    write_bytes(path, &bytes)
}

pub fn write_tracks_csv(path: &Path, tracks: &TrackSet) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "state_label",
        "segment_id",
        "time_index",
        "time_fs",
        "pc1",
        "pc2",
        "pc3",
        "pc4",
    ])
    .map_err(|e| csv_error(path, e))?;
    for t in &tracks.tracks {
        for p in &t.points {
            let mut rec = vec![
                t.state_label.clone(),
                t.segment_id.to_string(),
                p.time_index.to_string(),
                p.time_fs.to_string(),
            ];
            rec.extend(p.scores.iter().map(f64::to_string));
            w.write_record(&rec).map_err(|e| csv_error(path, e))?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| PipelineError::io(path, std::io::Error::other(e.to_string())))?;
    write_bytes(path, &bytes)
}
