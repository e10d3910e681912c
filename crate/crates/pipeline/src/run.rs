//! End-to-end runs: segmentation, peeled CSPs, moments, PCA and tracks.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use bimoment_core::series::RangeBounds;
use bimoment_core::{
    build_tracks, csp_moments, fit_pca, label_power_diagram, normalize_moments, peel_all, CspHistogram, ExecMode,
    MomentVector, Provenance, RangeWindow, SegmentKey, TrackSet,
};
use log::{debug, info};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::artifacts::{
    ensure_dir, moment_columns, read_csp, read_json, write_csp, write_json, write_moments_csv, write_tracks_csv,
    CspMeta, ModelExport, MomentRow, MomentsTable, RunDir, RunIndex, StateIndex, StepIndex, StepRecord, TracksExport,
    INDEX_FILE, MOMENTS_CSV, MOMENTS_JSON, REPORT_FILE, TRACKS_CSV, TRACKS_JSON,
};
use crate::error::{PipelineError, Result};
use crate::manifest::{AnalysisManifest, WindowSpec};
use crate::source::{plan_series, SeriesPlan, StepPlan};

/// Bumped whenever the stored CSP layout or its computation changes.
const CACHE_VERSION: u32 = 1;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Single accumulator and fixed order; byte-identical artifacts, and the
    /// report leaves out timing and cache statistics.
    pub strict: bool,
    /// Overrides the manifest's seed.
    pub seed: Option<u64>,
    /// Overrides the manifest's output directory.
    pub out_dir: Option<PathBuf>,
}

/// Last stage a command runs; each includes the ones before it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Segment,
    Csp,
    Moments,
    Pca,
}

impl Stage {
    fn name(self) -> &'static str {
        match self {
            Stage::Segment => "segment",
            Stage::Csp => "csp",
            Stage::Moments => "moments",
            Stage::Pca => "pca",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Complete,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: String,
    pub key: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub series: usize,
    pub steps: usize,
    pub label_grids: usize,
    /// Stored histograms, including boundary and whole-domain ones.
    pub csps: usize,
    pub moment_rows: usize,
    pub tracks: usize,
    pub track_points: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MassReport {
    /// Sum of grid volumes over all steps.
    pub domain_volume: f64,
    /// Mass in all segment and boundary peels.
    pub binned: f64,
    pub out_of_window: f64,
    /// `|binned + out_of_window - domain_volume| / domain_volume`.
    pub global_relative_residual: f64,
    pub max_step_relative_residual: f64,
    /// Step with the largest relative residual.
    pub worst_step: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheStats {
    pub hits: usize,
    pub misses: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub status: RunStatus,
    pub requested_stage: Stage,
    pub completed_stages: Vec<Stage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<StageFailure>,
    /// Some artifacts were written before the failure.
    pub partial_outputs: bool,
    pub exec_mode: ExecMode,
    pub seed: u64,
    pub window: Option<RangeWindow<f64>>,
    pub res: [usize; 2],
    pub counts: Counts,
    pub mass: MassReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_s: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache: Option<CacheStats>,
}

/// What a run produced, for callers that continue in memory.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub report: RunReport,
    pub moments: Option<MomentsTable>,
    pub tracks: Option<TrackSet>,
}

struct Timer {
    enabled: bool,
    totals: BTreeMap<String, f64>,
}

impl Timer {
    fn time<R>(&mut self, name: &str, f: impl FnOnce() -> R) -> R {
        let start = Instant::now();
        let r = f();
        if self.enabled {
            *self.totals.entry(name.to_owned()).or_default() += start.elapsed().as_secs_f64();
        }
        r
    }
}

struct Ctx<'a> {
    manifest: &'a AnalysisManifest,
    mode: ExecMode,
    run: RunDir,
    report: RunReport,
    timer: Timer,
    cache: CacheStats,
    wrote_any: bool,
}

/// Runs the pipeline through `until`, writing artifacts and
/// `run_report.json` under the output directory. On failure the report
/// names the stage and input key and the error is returned.
pub fn run_pipeline(manifest: &AnalysisManifest, opts: &RunOptions, until: Stage) -> Result<RunOutcome> {
    manifest.validate()?;
    let out_dir = opts.out_dir.clone().unwrap_or_else(|| manifest.output_dir.clone());
    let seed = opts.seed.or(manifest.seed).unwrap_or(0);
    let mode = if opts.strict {
        ExecMode::Strict
    } else {
        ExecMode::Parallel
    };
    let res = [manifest.csp.res; 2];
    let mut ctx = Ctx {
        manifest,
        mode,
        run: RunDir::new(&out_dir),
        report: RunReport {
            status: RunStatus::Complete,
            requested_stage: until,
            completed_stages: Vec::new(),
            failure: None,
            partial_outputs: false,
            exec_mode: mode,
            seed,
            window: None,
            res,
            counts: Counts::default(),
            mass: MassReport::default(),
            timing_s: None,
            cache: None,
        },
        timer: Timer {
            enabled: !opts.strict,
            totals: BTreeMap::new(),
        },
        cache: CacheStats { hits: 0, misses: 0 },
        wrote_any: false,
    };
    let start = Instant::now();
    ensure_dir(&out_dir)?;
    let result = execute(&mut ctx, seed, until);
    if !opts.strict {
        ctx.timer.totals.insert("total".into(), start.elapsed().as_secs_f64());
        ctx.report.timing_s = Some(ctx.timer.totals.clone());
        ctx.report.cache = Some(ctx.cache.clone());
    }
    match result {
        Ok((moments, tracks)) => {
            write_json(&ctx.run.file(REPORT_FILE), &ctx.report)?;
            Ok(RunOutcome {
                out_dir,
                report: ctx.report,
                moments,
                tracks,
            })
        }
        Err((stage, key, err)) => {
            ctx.report.status = RunStatus::Failed;
            ctx.report.partial_outputs = ctx.wrote_any;
            ctx.report.failure = Some(StageFailure {
                stage: stage.to_owned(),
                key: key.clone(),
                message: err.to_string(),
            });
            // The original error matters more than a failure to record it.
            let _ = write_json(&ctx.run.file(REPORT_FILE), &ctx.report);
            Err(match err {
                e @ (PipelineError::Validation(_) | PipelineError::Manifest { .. } | PipelineError::Stage { .. }) => e,
                other => PipelineError::stage(stage, key, other),
            })
        }
    }
}

type StageErr = (&'static str, String, PipelineError);

fn at<T>(stage: &'static str, key: &str, r: Result<T, impl Into<PipelineError>>) -> Result<T, StageErr> {
    r.map_err(|e| (stage, key.to_owned(), e.into()))
}

fn step_key(state: &str, t: usize) -> String {
    format!("{state}/t{t:04}")
}

fn execute(ctx: &mut Ctx<'_>, seed: u64, until: Stage) -> Result<(Option<MomentsTable>, Option<TrackSet>), StageErr> {
    let plans = plan_series(ctx.manifest, seed);
    ctx.report.counts.series = plans.len();
    ctx.report.counts.steps = plans.iter().map(|p| p.steps.len()).sum();

    let window = ctx.timer.time("window", || resolve_window(ctx.manifest, &plans))?;
    ctx.report.window = Some(window);
    info!("range window {window:?}");

    let mut raw = Vec::new();
    let mut state_segments: Vec<BTreeSet<i32>> = vec![BTreeSet::new(); plans.len()];
    for (si, plan) in plans.iter().enumerate() {
        for step in &plan.steps {
            let segs = process_step(ctx, &plan.state_label, step, &window, until, &mut raw)?;
            state_segments[si].extend(segs);
        }
    }
    ctx.report.completed_stages.push(Stage::Segment);
    let index = RunIndex {
        window,
        res: ctx.report.res,
        pooling: ctx.manifest.moments.pooling,
        weights: ctx.manifest.segmentation.weights,
        states: plans
            .iter()
            .zip(&state_segments)
            .map(|(p, segs)| StateIndex {
                state_label: p.state_label.clone(),
                segments: segs.iter().copied().collect(),
                steps: p
                    .steps
                    .iter()
                    .map(|s| StepIndex {
                        time_index: s.time_index,
                        time_fs: s.time_fs,
                        source: s.source.clone(),
                    })
                    .collect(),
            })
            .collect(),
    };
    at("index", INDEX_FILE, write_json(&ctx.run.file(INDEX_FILE), &index))?;
    if until == Stage::Segment {
        return Ok((None, None));
    }
    ctx.report.completed_stages.push(Stage::Csp);
    finish_mass(&mut ctx.report.mass);
    if until == Stage::Csp {
        return Ok((None, None));
    }

    let pooling = ctx.manifest.moments.pooling;
    let normalized = at("moments", "all", normalize_moments(&raw, pooling))?;
    let rows: Vec<MomentRow> = raw
        .iter()
        .zip(&normalized)
        .map(|(r, n)| {
            let p = r.provenance.clone().expect("set when computed");
            MomentRow {
                state_label: p.state_label,
                segment_id: p.segment_id,
                time_index: p.time_index,
                time_fs: p.time_fs,
                raw: r.as_array(),
                normalized: n.as_array(),
            }
        })
        .collect();
    let table = MomentsTable {
        pooling,
        columns: moment_columns(),
        rows,
    };
    at("moments", MOMENTS_JSON, write_json(&ctx.run.file(MOMENTS_JSON), &table))?;
    at(
        "moments",
        MOMENTS_CSV,
        write_moments_csv(&ctx.run.file(MOMENTS_CSV), &table),
    )?;
    ctx.report.counts.moment_rows = table.rows.len();
    ctx.report.completed_stages.push(Stage::Moments);
    if until == Stage::Moments {
        return Ok((Some(table), None));
    }

    let vectors: Vec<[f64; 4]> = normalized.iter().map(MomentVector::as_array).collect();
    let model = at("pca", "all", ctx.timer.time("pca", || fit_pca(&vectors)))?;
    let tracks = at("tracks", "all", build_tracks(&model, &normalized))?;
    let export = TracksExport {
        model: ModelExport::new(&model),
        tracks,
    };
    at("tracks", TRACKS_JSON, write_json(&ctx.run.file(TRACKS_JSON), &export))?;
    at(
        "tracks",
        TRACKS_CSV,
        write_tracks_csv(&ctx.run.file(TRACKS_CSV), &export.tracks),
    )?;
    ctx.report.counts.tracks = export.tracks.len();
    ctx.report.counts.track_points = export.tracks.num_points();
    ctx.report.completed_stages.push(Stage::Pca);
    Ok((Some(table), Some(export.tracks)))
}

fn resolve_window(manifest: &AnalysisManifest, plans: &[SeriesPlan]) -> Result<RangeWindow<f64>, StageErr> {
    match &manifest.csp.window {
        WindowSpec::Explicit(w) => Ok(*w),
        WindowSpec::Auto => {
            let mut bounds = RangeBounds::default();
            for plan in plans {
                for step in &plan.steps {
                    let key = step_key(&plan.state_label, step.time_index);
                    let loaded = at("load", &key, step.source.load(manifest.segmentation.weights))?;
                    bounds.include_field(&loaded.field);
                }
            }
            at("window", "all", bounds.to_window(manifest.csp.padding))
        }
    }
}

fn cache_key(source_hash: &str, window: &RangeWindow<f64>, res: [usize; 2], ctx: &Ctx<'_>) -> String {
    let desc = serde_json::json!({
        "version": CACHE_VERSION,
        "source": source_hash,
        "window": window,
        "res": res,
        "weights": ctx.manifest.segmentation.weights,
        "mode": ctx.mode,
    });
    hex::encode(Sha256::digest(desc.to_string().as_bytes()))
}

/// Loads the stored peels of a step when its record matches `key`.
fn cached_peels(
    run: &RunDir,
    state: &str,
    t: usize,
    key: &str,
) -> Option<(StepRecord, Vec<(SegmentKey, CspHistogram<f64>)>)> {
    let record: StepRecord = read_json(&run.step_dir(state, t).join("step.json")).ok()?;
    if record.cache_key != key || !run.labels_stem(state, t).with_extension("bin").is_file() {
        return None;
    }
    let mut peels = Vec::with_capacity(record.segments.len());
    for &seg in &record.segments {
        let (h, _) = read_csp(&run.csp_stem(state, t, seg)).ok()?;
        peels.push((seg, h));
    }
    Some((record, peels))
}

/// Segments one step, computes or reloads its peels and appends the raw
/// moments of its atom segments. Returns the step's atom ids.
fn process_step(
    ctx: &mut Ctx<'_>,
    state: &str,
    step: &StepPlan,
    window: &RangeWindow<f64>,
    until: Stage,
    raw: &mut Vec<MomentVector<f64>>,
) -> Result<Vec<i32>, StageErr> {
    let t = step.time_index;
    let key = step_key(state, t);
    let res = ctx.report.res;
    let source_hash = at("load", &key, step.source.content_hash())?;
    let ck = cache_key(&source_hash, window, res, ctx);

    let hit = if until >= Stage::Csp {
        cached_peels(&ctx.run, state, t, &ck)
    } else {
        None
    };
    let (record, peels) = match hit {
        Some(found) => {
            debug!("{key}: cache hit");
            ctx.cache.hits += 1;
            ctx.report.counts.label_grids += 1;
            found
        }
        None => {
            ctx.cache.misses += 1;
            let weights = ctx.manifest.segmentation.weights;
            let loaded = at("load", &key, ctx.timer.time("load", || step.source.load(weights)))?;
            let labels = at(
                "segment",
                &key,
                ctx.timer
                    .time("segment", || label_power_diagram(loaded.field.spec(), &loaded.atoms)),
            )?;
            let stem = ctx.run.labels_stem(state, t);
            at("segment", &key, stem.parent().map_or(Ok(()), ensure_dir))?;
            ctx.wrote_any = true;
            at("segment", &key, labels.write(&stem))?;
            ctx.report.counts.label_grids += 1;
            if until == Stage::Segment {
                return Ok(labels.ids().to_vec());
            }

            let mode = ctx.mode;
            let map = at(
                "csp",
                &key,
                ctx.timer
                    .time("csp", || peel_all(&loaded.field, &labels, window, res, mode)),
            )?;
            let dir = ctx.run.step_dir(state, t);
            if dir.exists() {
                at(
                    "csp",
                    &key,
                    std::fs::remove_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e)),
                )?;
            }
            let record = StepRecord {
                cache_key: ck,
                segments: map.keys().copied().collect(),
                domain_volume: loaded.field.spec().domain_volume(),
            };
            let peels: Vec<_> = map.into_iter().collect();
            at("csp", &key, write_step(&ctx.run, state, step, &peels, &record))?;
            (record, peels)
        }
    };

    ctx.report.counts.csps += peels.len() + 1;
    account_mass(&mut ctx.report.mass, &key, &record, &peels);

    let mut ids = Vec::new();
    for (seg, hist) in &peels {
        let SegmentKey::Atom(id) = *seg else { continue };
        ids.push(id);
        if until >= Stage::Moments {
            let prov = Provenance {
                state_label: state.to_owned(),
                segment_id: *seg,
                time_index: t,
                time_fs: step.time_fs,
            };
            raw.push(csp_moments(hist).with_provenance(prov));
        }
    }
    Ok(ids)
}

fn write_step(
    run: &RunDir,
    state: &str,
    step: &StepPlan,
    peels: &[(SegmentKey, CspHistogram<f64>)],
    record: &StepRecord,
) -> Result<()> {
    let meta = |segment| CspMeta {
        state_label: state,
        segment,
        time_index: step.time_index,
        time_fs: step.time_fs,
    };
    let t = step.time_index;
    let mut all = peels
        .first()
        .map(|(_, h)| CspHistogram::zeros(h.window, h.res))
        .transpose()?
        .ok_or_else(|| PipelineError::Validation(format!("{}: no segments", step_key(state, t))))?;
    for (seg, h) in peels {
        write_csp(&run.csp_stem(state, t, *seg), h, meta(*seg))?;
        all.add_assign(h)?;
    }
    write_csp(&run.csp_stem(state, t, SegmentKey::All), &all, meta(SegmentKey::All))?;
    write_json(&run.step_dir(state, t).join("step.json"), record)
}

fn account_mass(m: &mut MassReport, key: &str, record: &StepRecord, peels: &[(SegmentKey, CspHistogram<f64>)]) {
    let binned: f64 = peels.iter().map(|(_, h)| h.total_mass()).sum();
    let oow: f64 = peels.iter().map(|(_, h)| h.out_of_window).sum();
    let rel = (binned + oow - record.domain_volume).abs() / record.domain_volume;
    m.domain_volume += record.domain_volume;
    m.binned += binned;
    m.out_of_window += oow;
    if m.worst_step.is_none() || rel > m.max_step_relative_residual {
        m.max_step_relative_residual = rel;
        m.worst_step = Some(key.to_owned());
    }
}

fn finish_mass(m: &mut MassReport) {
    if m.domain_volume > 0.0 {
        m.global_relative_residual = (m.binned + m.out_of_window - m.domain_volume).abs() / m.domain_volume;
    }
}

/// Loads a manifest and runs it.
pub fn run_manifest(path: &Path, opts: &RunOptions, until: Stage) -> Result<RunOutcome> {
    let manifest = AnalysisManifest::load(path)?;
    run_pipeline(&manifest, opts, until)
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
