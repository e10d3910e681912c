//! Immutable view of a run directory, loaded once at startup.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use bimoment_core::SegmentKey;
use bimoment_pipeline::artifacts::{
    read_json, MomentsTable, RunDir, RunIndex, StepIndex, StepRecord, TracksExport, INDEX_FILE, MOMENTS_JSON,
    TRACKS_JSON,
};
use bimoment_pipeline::PipelineError;
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{0} is not a run directory")]
    NotFound(PathBuf),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// Identifies one stored CSP.
pub type CspKey = (String, SegmentKey, usize);

#[derive(Debug)]
pub struct Snapshot {
    pub run: RunDir,
    pub index: RunIndex,
    pub tracks: TracksExport,
    pub moments: MomentsTable,
    /// Hex digest of the index, tables and every step record.
    pub content_hash: String,
    csps: BTreeSet<CspKey>,
}

impl Snapshot {
    pub fn load(dir: &Path) -> Result<Snapshot, LoadError> {
        if !dir.join(INDEX_FILE).is_file() || !dir.join(TRACKS_JSON).is_file() {
            return Err(LoadError::NotFound(dir.to_path_buf()));
        }
        let run = RunDir::new(dir);
        let mut h = Sha256::new();
        let mut digest_file = |p: &Path| -> Result<(), LoadError> {
            let bytes = std::fs::read(p).map_err(|e| PipelineError::io(p, e))?;
            h.update((bytes.len() as u64).to_le_bytes());
            h.update(&bytes);
            Ok(())
        };
        for name in [INDEX_FILE, MOMENTS_JSON, TRACKS_JSON] {
            digest_file(&run.file(name))?;
        }
        let index: RunIndex = read_json(&run.file(INDEX_FILE))?;
        let mut csps = BTreeSet::new();
        for state in &index.states {
            for step in &state.steps {
                let record_path = run.step_dir(&state.state_label, step.time_index).join("step.json");
                digest_file(&record_path)?;
                let record: StepRecord = read_json(&record_path)?;
                for seg in record.segments.into_iter().chain([SegmentKey::All]) {
                    csps.insert((state.state_label.clone(), seg, step.time_index));
                }
            }
        }
        Ok(Snapshot {
            tracks: read_json(&run.file(TRACKS_JSON))?,
            moments: read_json(&run.file(MOMENTS_JSON))?,
            content_hash: hex::encode(h.finalize()),
            run,
            index,
            csps,
        })
    }

    pub fn has_csp(&self, key: &CspKey) -> bool {
        self.csps.contains(key)
    }

    pub fn step(&self, state: &str, t: usize) -> Option<&StepIndex> {
        self.index
            .states
            .iter()
            .find(|s| s.state_label == state)?
            .steps
            .iter()
            .find(|s| s.time_index == t)
    }
}
