//! Atom seeds used to segment the domain, and the bundled covalent-radius table.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

/// Bohr radius in Angstrom.
pub const BOHR_IN_ANGSTROM: f64 = 0.529_177_210_903;

const RADII_JSON: &str = include_str!("../data/covalent_radii.json");

/// Radius assumed for elements missing from the table.
const FALLBACK_RADIUS: f64 = 1.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom<T> {
    pub id: i32,
    pub element: String,
    pub center: [T; 3],
    /// Power-diagram weight, squared length units.
    pub weight: T,
}

/// Atoms with unique, time-stable ids.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AtomList<T> {
    atoms: Vec<Atom<T>>,
}

impl<T: Real> AtomList<T> {
    pub fn new(atoms: Vec<Atom<T>>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for a in &atoms {
            if !seen.insert(a.id) {
                return Err(Error::InvalidInput(format!("duplicate atom id {}", a.id)));
            }
            if !(a.weight >= T::zero()) || !a.weight.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "atom {} has invalid weight {}",
                    a.id, a.weight
                )));
            }
            if a.center.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidInput(format!("atom {} has non-finite center", a.id)));
            }
        }
        Ok(AtomList { atoms })
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn ids(&self) -> Vec<i32> {
        self.atoms.iter().map(|a| a.id).collect()
    }

    /// Returns a copy with every weight replaced by `f(atom)`.
    pub fn with_weights(&self, f: impl Fn(&Atom<T>) -> T) -> Result<Self> {
        Self::new(
            self.atoms
                .iter()
                .map(|a| Atom {
                    weight: f(a),
                    ..a.clone()
                })
                .collect(),
        )
    }
}

#[derive(Debug, Deserialize)]
struct RadiusTable {
    version: u32,
    elements: Vec<RadiusEntry>,
}

#[derive(Debug, Deserialize)]
struct RadiusEntry {
    z: u32,
    symbol: String,
    radius: f64,
}

fn table() -> &'static RadiusTable {
    static TABLE: OnceLock<RadiusTable> = OnceLock::new();
    TABLE.get_or_init(|| serde_json::from_str(RADII_JSON).expect("bundled radius table is valid"))
}

pub fn radius_table_version() -> u32 {
    table().version
}

pub fn element_symbol(atomic_number: u32) -> Option<&'static str> {
    table()
        .elements
        .iter()
        .find(|e| e.z == atomic_number)
        .map(|e| e.symbol.as_str())
}

pub fn atomic_number(symbol: &str) -> Option<u32> {
    table()
        .elements
        .iter()
        .find(|e| e.symbol.eq_ignore_ascii_case(symbol))
        .map(|e| e.z)
}

/// Single-bond covalent radius in Angstrom, looked up by symbol (case-insensitive).
pub fn covalent_radius_angstrom(symbol: &str) -> Option<f64> {
    table()
        .elements
        .iter()
        .find(|e| e.symbol.eq_ignore_ascii_case(symbol))
        .map(|e| e.radius)
}

/// Default power weight: squared covalent radius, expressed in Bohr when
/// `bohr_units` is set and Angstrom otherwise.
pub fn default_weight(symbol: &str, bohr_units: bool) -> f64 {
    let r = covalent_radius_angstrom(symbol).unwrap_or(FALLBACK_RADIUS);
    let r = if bohr_units { r / BOHR_IN_ANGSTROM } else { r };
    r * r
}
