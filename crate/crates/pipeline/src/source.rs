//! Where a time step's field comes from, and how to load it.

use std::path::PathBuf;

use bimoment_core::cube::load_cube;
use bimoment_core::synthetic::{default_synthetic_grid, gen_rotation_field, gen_scaling_field};
use bimoment_core::{Atom, AtomList, BivariateField, GridSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{PipelineError, Result};
use crate::manifest::{AnalysisManifest, SyntheticKind, WeightSource};

/// Recipe for one step's bivariate field and atom seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FieldSource {
    Cube {
        f1_path: PathBuf,
        f2_path: PathBuf,
    },
    Synthetic {
        field: SyntheticKind,
        t: u32,
        /// Scaling offset; unused by the rotation field.
        b: f64,
        n: usize,
        nz: usize,
    },
}

/// Id of the single seed placed in synthetic fields.
pub const SYNTHETIC_ATOM_ID: i32 = 1;

#[derive(Clone, Debug)]
pub struct LoadedStep {
    pub field: BivariateField<f64>,
    pub atoms: AtomList<f64>,
}

impl FieldSource {
    pub fn load(&self, weights: WeightSource) -> Result<LoadedStep> {
        let (field, atoms) = match self {
            FieldSource::Cube { f1_path, f2_path } => {
                let (g1, atoms) = load_cube::<f64>(f1_path)?;
                let (g2, _) = load_cube::<f64>(f2_path)?;
                let field = BivariateField::new(g1, g2).map_err(|e| {
                    PipelineError::Validation(format!(
                        "{} and {} do not share a grid: {e}",
                        f1_path.display(),
                        f2_path.display()
                    ))
                })?;
                (field, atoms)
            }
            FieldSource::Synthetic { field, t, b, n, nz } => {
                let spec = default_synthetic_grid::<f64>(*n, *nz)?;
                let f = match field {
                    SyntheticKind::Rotation => gen_rotation_field(*t, &spec)?,
                    SyntheticKind::Scaling => gen_scaling_field(*t, *b, &spec)?,
                };
                (f, synthetic_seed(&spec)?)
            }
        };
        let atoms = match weights {
            WeightSource::Covalent => atoms,
            WeightSource::Uniform => atoms.with_weights(|_| 0.0)?,
        };
        if atoms.is_empty() {
            return Err(PipelineError::Validation(format!(
                "{} has no atoms to segment by",
                self.describe()
            )));
        }
        Ok(LoadedStep { field, atoms })
    }

    /// Digest of everything the loaded field depends on: file contents for
    /// cubes, parameters for synthetic fields.
    pub fn content_hash(&self) -> Result<String> {
        let mut h = Sha256::new();
        match self {
            FieldSource::Cube { f1_path, f2_path } => {
                for p in [f1_path, f2_path] {
                    let bytes = std::fs::read(p).map_err(|e| PipelineError::io(p, e))?;
                    h.update((bytes.len() as u64).to_le_bytes());
                    h.update(&bytes);
                }
            }
            FieldSource::Synthetic { .. } => {
                h.update(serde_json::to_vec(self).expect("plain data serializes"));
            }
        }
        Ok(hex::encode(h.finalize()))
    }

    pub fn describe(&self) -> String {
        match self {
            FieldSource::Cube { f1_path, f2_path } => format!("{} + {}", f1_path.display(), f2_path.display()),
            FieldSource::Synthetic { field, t, .. } => format!("synthetic {field:?} t={t}"),
        }
    }
}

/// One hydrogen at the centre of the grid, so synthetic fields form a single
/// segment that covers the whole domain.
pub fn synthetic_seed(spec: &GridSpec<f64>) -> Result<AtomList<f64>> {
    let hi = spec.extent_max();
    let center = [0, 1, 2].map(|a| 0.5 * (spec.origin[a] + hi[a]));
    Ok(AtomList::new(vec![Atom {
        id: SYNTHETIC_ATOM_ID,
        element: "H".into(),
        center,
        weight: bimoment_core::atoms::default_weight("H", true),
    }])?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepPlan {
    pub time_index: usize,
    pub time_fs: f64,
    pub source: FieldSource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPlan {
    pub state_label: String,
    pub steps: Vec<StepPlan>,
}

/// Expands a manifest into concrete steps. Scaling offsets left open in the
/// manifest are drawn from `[-0.5, 0]`, one per series, in manifest order.
pub fn plan_series(manifest: &AnalysisManifest, seed: u64) -> Vec<SeriesPlan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    manifest
        .series
        .iter()
        .map(|s| {
            let steps = if let Some(syn) = &s.synthetic {
                let b = match (syn.kind, syn.b) {
                    (_, Some(b)) => b,
                    (SyntheticKind::Scaling, None) => rng.random_range(-0.5..=0.0),
                    (SyntheticKind::Rotation, None) => 0.0,
                };
                (0..syn.steps)
                    .map(|t| StepPlan {
                        time_index: t as usize,
                        time_fs: t as f64 * syn.dt_fs,
                        source: FieldSource::Synthetic {
                            field: syn.kind,
                            t,
                            b,
                            n: syn.n,
                            nz: syn.nz,
                        },
                    })
                    .collect()
            } else {
                s.steps
                    .iter()
                    .flatten()
                    .enumerate()
                    .map(|(i, st)| StepPlan {
                        time_index: i,
                        time_fs: st.time_fs,
                        source: FieldSource::Cube {
                            f1_path: st.f1_path.clone(),
                            f2_path: st.f2_path.clone(),
                        },
                    })
                    .collect()
            };
            SeriesPlan {
                state_label: s.state_label.clone(),
                steps,
            }
        })
        .collect()
}
