//! Stage commands outside the main run: synthetic dataset emission, fiber
//! surfaces and CSP rendering.

use std::path::{Path, PathBuf};

use bimoment_core::cube::{write_cube, CubeFile};
use bimoment_core::fiber::{export_mesh, MeshFormat};
use bimoment_core::series::RangeBounds;
use bimoment_core::synthetic::default_synthetic_grid;
use bimoment_core::{extract_fiber_surface, ControlPolygon, RangeWindow, TriangleMesh};
use serde::{Deserialize, Serialize};

use crate::artifacts::{ensure_dir, read_csp, read_json, write_json, RunIndex, INDEX_FILE};
use crate::error::{PipelineError, Result};
use crate::manifest::{
    AnalysisManifest, CspConfig, MomentsConfig, SegmentationConfig, SeriesSpec, StepFiles, SyntheticKind, SyntheticSpec,
};
use crate::render::write_csp_png;
use crate::source::{plan_series, synthetic_seed, FieldSource, LoadedStep};

#[derive(Clone, Debug)]
pub struct GenOptions {
    pub steps: u32,
    pub n: usize,
    pub nz: usize,
    /// Scaling offset; drawn from the seed when `None`.
    pub b: Option<f64>,
    pub seed: u64,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            steps: 50,
            n: 64,
            nz: 2,
            b: None,
            seed: 0,
        }
    }
}

/// Writes cube files for the rotating and scaling series plus a
/// `manifest.json` that analyses them into `<out>/run`. Returns the manifest
/// path.
pub fn gen_synthetic_dataset(out: &Path, opts: &GenOptions) -> Result<PathBuf> {
    let plan_manifest = AnalysisManifest {
        series: [
            ("rotation", SyntheticKind::Rotation),
            ("scaling", SyntheticKind::Scaling),
        ]
        .into_iter()
        .map(|(label, kind)| SeriesSpec {
            state_label: label.into(),
            steps: None,
            synthetic: Some(SyntheticSpec {
                kind,
                steps: opts.steps,
                b: opts.b,
                n: opts.n,
                nz: opts.nz,
                dt_fs: 1.0,
            }),
        })
        .collect(),
        csp: CspConfig::default(),
        moments: MomentsConfig::default(),
        segmentation: SegmentationConfig::default(),
        output_dir: PathBuf::from("run"),
        seed: Some(opts.seed),
    };
    plan_manifest.validate()?;
    let spec = default_synthetic_grid::<f64>(opts.n, opts.nz)?;
    let atoms = synthetic_seed(&spec)?;
    let mut series = Vec::new();
    for plan in plan_series(&plan_manifest, opts.seed) {
        let dir = out.join("cubes").join(&plan.state_label);
        ensure_dir(&dir)?;
        let mut steps = Vec::new();
        for step in &plan.steps {
            let LoadedStep { field, .. } = step.source.load(Default::default())?;
            let mut files = Vec::new();
            for (ch, grid) in [("f1", field.f1()), ("f2", field.f2())] {
                let name = format!("{ch}_t{:04}.cube", step.time_index);
                let cube = CubeFile {
                    comments: [
                        format!("synthetic {} field, channel {ch}", plan.state_label),
                        format!("step {} {}", step.time_index, source_params(&step.source)),
                    ],
                    grid: grid.clone(),
                    atoms: atoms.clone(),
                    bohr_units: true,
                };
                write_cube(dir.join(&name), &cube)?;
                files.push(PathBuf::from("cubes").join(&plan.state_label).join(name));
            }
            steps.push(StepFiles {
                time_fs: step.time_fs,
                f1_path: files[0].clone(),
                f2_path: files[1].clone(),
            });
        }
        series.push(SeriesSpec {
            state_label: plan.state_label,
            steps: Some(steps),
            synthetic: None,
        });
    }
    let manifest = AnalysisManifest {
        series,
        seed: None,
        ..plan_manifest
    };
    let path = out.join("manifest.json");
    write_json(&path, &manifest)?;
    Ok(path)
}

fn source_params(s: &FieldSource) -> String {
    match s {
        FieldSource::Synthetic { b, .. } => format!("b={b}"),
        FieldSource::Cube { .. } => String::new(),
    }
}

/// Control polygon as accepted from files and HTTP: a bare vertex list, or
/// `{"vertices": [...], "closed": bool}`. Open polylines are closed with a
/// far edge outside the window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolygonInput {
    Vertices(Vec<[f64; 2]>),
    Object {
        vertices: Vec<[f64; 2]>,
        #[serde(default = "yes")]
        closed: bool,
    },
}

fn yes() -> bool {
    true
}

impl PolygonInput {
    pub fn build(self, window: &RangeWindow<f64>) -> Result<ControlPolygon<f64>> {
        let poly = match self {
            PolygonInput::Vertices(v)
            | PolygonInput::Object {
                vertices: v,
                closed: true,
            } => ControlPolygon::new(v),
            PolygonInput::Object {
                vertices,
                closed: false,
            } => ControlPolygon::close_open_polyline(vertices, window),
        };
        poly.map_err(|e| PipelineError::Validation(e.to_string()))
    }
}

/// Range of a field padded by 5%, used to close open polylines.
pub fn field_window(step: &LoadedStep) -> Result<RangeWindow<f64>> {
    let mut b = RangeBounds::default();
    b.include_field(&step.field);
    Ok(b.to_window(0.05)?)
}

pub fn read_polygon(path: &Path) -> Result<PolygonInput> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Validation(format!("{}: {e}", path.display())))
}

/// Fiber surface of one step's field.
pub fn fiber_for_source(source: &FieldSource, polygon: PolygonInput) -> Result<TriangleMesh<f64>> {
    let step = source.load(Default::default())?;
    let poly = polygon.build(&field_window(&step)?)?;
    Ok(extract_fiber_surface(&step.field, &poly))
}

/// Finds a step's field source in a run directory's index.
pub fn run_step_source(run_dir: &Path, state: &str, t: usize) -> Result<FieldSource> {
    let index: RunIndex = read_json(&run_dir.join(INDEX_FILE))?;
    index
        .states
        .iter()
        .find(|s| s.state_label == state)
        .and_then(|s| s.steps.iter().find(|st| st.time_index == t))
        .map(|st| st.source.clone())
        .ok_or_else(|| PipelineError::Validation(format!("no step {t} of state {state} in {}", run_dir.display())))
}

/// Finds a step's field source in a manifest.
pub fn manifest_step_source(manifest: &AnalysisManifest, seed: u64, state: &str, t: usize) -> Result<FieldSource> {
    plan_series(manifest, seed)
        .into_iter()
        .find(|p| p.state_label == state)
        .and_then(|p| p.steps.into_iter().find(|s| s.time_index == t))
        .map(|s| s.source)
        .ok_or_else(|| PipelineError::Validation(format!("no step {t} of state {state} in the manifest")))
}

pub fn write_mesh(mesh: &TriangleMesh<f64>, path: &Path, format: MeshFormat) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    Ok(export_mesh(mesh, path, format)?)
}

/// Renders a stored CSP (`.bin` with its `.json` sidecar) to PNG.
pub fn render_stored_csp(csp_path: &Path, png: &Path) -> Result<()> {
    let (hist, _) = read_csp(&csp_path.with_extension(""))?;
    write_csp_png(&hist, png)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polygon_forms() {
        let w = RangeWindow::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let bare: PolygonInput = serde_json::from_str("[[0.2,0.2],[0.8,0.2],[0.5,0.9]]").unwrap();
        assert_eq!(bare.build(&w).unwrap().vertices().len(), 3);
        let open: PolygonInput =
            serde_json::from_str(r#"{"vertices": [[0.2,0.2],[0.8,0.2],[0.8,0.8]], "closed": false}"#).unwrap();
        let p = open.build(&w).unwrap();
        assert!(p.vertices().len() > 3);
        let bow: PolygonInput = serde_json::from_str("[[0,0],[1,1],[1,0],[0,1]]").unwrap();
        assert!(matches!(bow.build(&w), Err(PipelineError::Validation(_))));
        let short: PolygonInput = serde_json::from_str(r#"{"vertices": [[0,0],[1,1]]}"#).unwrap();
        assert!(short.build(&w).is_err());
    }
}
