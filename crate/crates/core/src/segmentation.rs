//! Atomic segmentation by power distance (discrete weighted Voronoi).
//!
//! Each grid vertex gets the id of the atom minimizing `|v - c|^2 - w`.
//! Ties go to the smallest atom id.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atoms::AtomList;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::num::Real;

pub const UNASSIGNED: i32 = -1;

/// Which part of the domain a CSP is restricted to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SegmentKey {
    /// Atom segment by id.
    Atom(i32),
    /// Tetrahedra whose vertices carry more than one label.
    Boundary,
    /// The whole domain.
    All,
}

impl fmt::Display for SegmentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SegmentKey::Atom(id) => write!(f, "{id}"),
            SegmentKey::Boundary => f.write_str("boundary"),
            SegmentKey::All => f.write_str("all"),
        }
    }
}

impl FromStr for SegmentKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(SegmentKey::All),
            "boundary" => Ok(SegmentKey::Boundary),
            _ => s
                .parse::<i32>()
                .map(SegmentKey::Atom)
                .map_err(|_| Error::UnknownSegment(s.to_owned())),
        }
    }
}

impl From<SegmentKey> for String {
    fn from(k: SegmentKey) -> String {
        k.to_string()
    }
}

impl TryFrom<String> for SegmentKey {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Per-vertex segment labels on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelGrid<T> {
    spec: GridSpec<T>,
    labels: Vec<i32>,
    /// Atom ids that may appear as labels, ascending.
    ids: Vec<i32>,
    elements: BTreeMap<i32, String>,
}

impl<T: Real> LabelGrid<T> {
    pub fn new(spec: GridSpec<T>, labels: Vec<i32>, elements: BTreeMap<i32, String>) -> Result<Self> {
        spec.validate()?;
        if labels.len() != spec.num_vertices() {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} vertices",
                labels.len(),
                spec.num_vertices()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l != UNASSIGNED && !elements.contains_key(&l)) {
            return Err(Error::InvalidInput(format!("label {bad} is not a known atom id")));
        }
        let ids = elements.keys().copied().collect();
        Ok(LabelGrid {
            spec,
            labels,
            ids,
            elements,
        })
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn labels(&self) -> &[i32] {
        &self.labels
    }

    pub fn ids(&self) -> &[i32] {
        &self.ids
    }

    pub fn element(&self, id: i32) -> Option<&str> {
        self.elements.get(&id).map(String::as_str)
    }

    pub fn contains_segment(&self, key: SegmentKey) -> bool {
        match key {
            SegmentKey::Atom(id) => self.elements.contains_key(&id),
            SegmentKey::Boundary | SegmentKey::All => true,
        }
    }

    /// Little-endian int32 labels, x-fastest.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.labels.iter().flat_map(|l| l.to_le_bytes()).collect()
    }

    pub fn sidecar(&self) -> LabelSidecar {
        LabelSidecar {
            dims: self.spec.dims,
            origin: self.spec.origin.map(|v| v.as_f64()),
            spacing: self.spec.spacing.map(|v| v.as_f64()),
            id_map: self
                .elements
                .iter()
                .map(|(&id, e)| SegmentEntry { id, element: e.clone() })
                .collect(),
        }
    }

    /// Writes `<stem>.bin` and `<stem>.json`.
    pub fn write(&self, stem: &Path) -> Result<()> {
        let bin = stem.with_extension("bin");
        let json = stem.with_extension("json");
        fs::write(&bin, self.to_bytes()).map_err(|e| Error::io(&bin, e))?;
        let text = serde_json::to_string_pretty(&self.sidecar()).map_err(|e| Error::InvalidInput(e.to_string()))?;
        fs::write(&json, text + "\n").map_err(|e| Error::io(&json, e))
    }

    pub fn read(stem: &Path) -> Result<Self> {
        let bin = stem.with_extension("bin");
        let json = stem.with_extension("json");
        let text = fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?;
        let side: LabelSidecar =
            serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", json.display())))?;
        let bytes = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
        if bytes.len() % 4 != 0 {
            return Err(Error::InvalidInput(format!(
                "{}: length not a multiple of 4",
                bin.display()
            )));
        }
        let labels = bytes
            .chunks_exact(4)
            .map(|c| i32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let spec = GridSpec::new(side.dims, side.origin.map(T::lit), side.spacing.map(T::lit))?;
        let elements = side.id_map.into_iter().map(|e| (e.id, e.element)).collect();
        Self::new(spec, labels, elements)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelSidecar {
    pub dims: [usize; 3],
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
    pub id_map: Vec<SegmentEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentEntry {
    pub id: i32,
    pub element: String,
}

/// Labels every vertex with the atom of minimal power distance.
pub fn label_power_diagram<T: Real>(spec: &GridSpec<T>, atoms: &AtomList<T>) -> Result<LabelGrid<T>> {
    spec.validate()?;
    if atoms.is_empty() {
        return Err(Error::InvalidInput("power diagram needs at least one atom".into()));
    }
    let mut seeds: Vec<_> = atoms.atoms().iter().collect();
    seeds.sort_by_key(|a| a.id);

    let mut labels = vec![UNASSIGNED; spec.num_vertices()];
    let row = spec.dims[0];
    labels.par_chunks_mut(row).enumerate().for_each(|(r, out)| {
        let j = r % spec.dims[1];
        let k = r / spec.dims[1];
        for (i, slot) in out.iter_mut().enumerate() {
            let p = spec.position(i, j, k);
            let mut best = T::infinity();
            let mut best_id = UNASSIGNED;
            for a in &seeds {
                let d = (0..3).fold(T::zero(), |acc, ax| {
                    let t = p[ax] - a.center[ax];
                    acc + t * t
                }) - a.weight;
                if d < best {
                    best = d;
                    best_id = a.id;
                }
            }
            *slot = best_id;
        }
    });

    let elements = atoms.atoms().iter().map(|a| (a.id, a.element.clone())).collect();
    LabelGrid::new(spec.clone(), labels, elements)
}

/// Vertex count per atom id; ids without vertices are reported as 0.
pub fn segment_vertex_counts<T: Real>(labels: &LabelGrid<T>) -> BTreeMap<i32, usize> {
    let mut counts: BTreeMap<i32, usize> = labels.ids().iter().map(|&id| (id, 0)).collect();
    for &l in labels.labels() {
        if l != UNASSIGNED {
            *counts.entry(l).or_default() += 1;
        }
    }
    counts
}
