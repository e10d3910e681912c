//! Continuous scatterplots (CSPs) of piecewise-linear bivariate fields.
//!
//! Every grid cell is split into six tetrahedra; the field is linear on each,
//! so each tetrahedron pushes its volume onto range space with a known tent
//! density ([`footprint`]). Footprints are integrated into a fixed
//! [`RangeWindow`] at a chosen resolution ([`raster`]). A bin's value is the
//! spatial volume whose bivariate value falls into it.

pub mod footprint;
mod oracle;
pub mod raster;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::BivariateField;
use crate::num::Real;
use crate::segmentation::{LabelGrid, SegmentKey, UNASSIGNED};
use crate::series::RangeWindow;
use crate::tet::{cell_corners, tet_volume, FREUDENTHAL_TETS};

pub use footprint::{tet_footprint, FootprintKind, TetFootprint, HULL_AREA_EPS};
pub use oracle::mc_csp_oracle;
pub use raster::rasterize_footprint;

/// Default bins per axis.
pub const DEFAULT_RES: usize = 256;

/// How tetrahedra are scheduled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    /// Per-thread private histograms merged by summation.
    #[default]
    Parallel,
    /// One accumulator, fixed tetrahedron order; bit-reproducible.
    Strict,
}

/// Discrete CSP over a fixed range window.
#[derive(Clone, Debug, PartialEq)]
pub struct CspHistogram<T> {
    pub window: RangeWindow<T>,
    /// Bins along f1 and f2.
    pub res: [usize; 2],
    /// Row-major, f1 fastest: bin `(i1, i2)` is `density[i2 * res[0] + i1]`.
    pub(crate) density: Vec<T>,
    /// Volume that mapped outside the window.
    pub out_of_window: T,
}

impl<T: Real> CspHistogram<T> {
    pub fn zeros(window: RangeWindow<T>, res: [usize; 2]) -> Result<Self> {
        window.validate()?;
        if res[0] == 0 || res[1] == 0 {
            return Err(Error::InvalidInput(format!("resolution must be positive, got {res:?}")));
        }
        Ok(CspHistogram {
            window,
            res,
            density: vec![T::zero(); res[0] * res[1]],
            out_of_window: T::zero(),
        })
    }

    pub fn from_density(window: RangeWindow<T>, res: [usize; 2], density: Vec<T>) -> Result<Self> {
        let mut h = Self::zeros(window, res)?;
        if density.len() != h.density.len() {
            return Err(Error::InvalidInput(format!(
                "{} bins for resolution {res:?}",
                density.len()
            )));
        }
        if density.iter().any(|d| !(*d >= T::zero()) || !d.is_finite()) {
            return Err(Error::InvalidInput("densities must be finite and non-negative".into()));
        }
        h.density = density;
        Ok(h)
    }

    pub fn density(&self) -> &[T] {
        &self.density
    }

    #[inline]
    pub fn get(&self, i1: usize, i2: usize) -> T {
        self.density[i2 * self.res[0] + i1]
    }

    pub fn total_mass(&self) -> T {
        self.density.iter().copied().sum()
    }

    /// Range-space area of one bin.
    pub fn bin_area(&self) -> T {
        self.window.width() * self.window.height()
            / (T::from_usize_lossy(self.res[0]) * T::from_usize_lossy(self.res[1]))
    }

    /// Bin-center coordinates in `[0, 1]^2` window units.
    #[inline]
    pub fn normalized_center(&self, i1: usize, i2: usize) -> [T; 2] {
        let half = T::lit(0.5);
        [
            (T::from_usize_lossy(i1) + half) / T::from_usize_lossy(self.res[0]),
            (T::from_usize_lossy(i2) + half) / T::from_usize_lossy(self.res[1]),
        ]
    }

    /// Maps a range-space value to raster coordinates.
    #[inline]
    pub fn to_raster(&self, p: [T; 2]) -> [T; 2] {
        let q = self.window.normalize(p);
        [
            q[0] * T::from_usize_lossy(self.res[0]),
            q[1] * T::from_usize_lossy(self.res[1]),
        ]
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.res != other.res || self.window != other.window {
            return Err(Error::InvalidInput("histograms differ in window or resolution".into()));
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.check_compatible(other)?;
        for (a, b) in self.density.iter_mut().zip(&other.density) {
            *a = *a + *b;
        }
        self.out_of_window = self.out_of_window + other.out_of_window;
        Ok(())
    }

    /// Number of bins whose value exceeds `floor`.
    pub fn count_nonzero(&self, floor: T) -> usize {
        self.density.iter().filter(|&&d| d > floor).count()
    }

    /// Orientation of the density's principal axis in degrees, from the
    /// second central moments with bin centers in range-space units.
    pub fn principal_axis_angle(&self) -> Option<T> {
        let mut m = T::zero();
        let mut sx = T::zero();
        let mut sy = T::zero();
        for i2 in 0..self.res[1] {
            for i1 in 0..self.res[0] {
                let d = self.get(i1, i2);
                if d == T::zero() {
                    continue;
                }
                let [x, y] = self.window.denormalize(self.normalized_center(i1, i2));
                m = m + d;
                sx = sx + d * x;
                sy = sy + d * y;
            }
        }
        if !(m > T::zero()) {
            return None;
        }
        let (cx, cy) = (sx / m, sy / m);
        let (mut mu20, mut mu11, mut mu02) = (T::zero(), T::zero(), T::zero());
        for i2 in 0..self.res[1] {
            for i1 in 0..self.res[0] {
                let d = self.get(i1, i2);
                if d == T::zero() {
                    continue;
                }
                let [x, y] = self.window.denormalize(self.normalized_center(i1, i2));
                let (dx, dy) = (x - cx, y - cy);
                mu20 = mu20 + d * dx * dx;
                mu11 = mu11 + d * dx * dy;
                mu02 = mu02 + d * dy * dy;
            }
        }
        let two = T::lit(2.0);
        let theta = T::lit(0.5) * (two * mu11).atan2(mu20 - mu02);
        Some(theta.to_degrees())
    }

    /// Densities as little-endian f64, row-major with f1 fastest.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.density.iter().flat_map(|d| d.as_f64().to_le_bytes()).collect()
    }

    pub fn from_le_bytes(window: RangeWindow<T>, res: [usize; 2], out_of_window: T, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != res[0] * res[1] * 8 {
            return Err(Error::InvalidInput(format!(
                "{} bytes for a {}x{} histogram",
                bytes.len(),
                res[0],
                res[1]
            )));
        }
        let density = bytes
            .chunks_exact(8)
            .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8-byte chunk"))))
            .collect();
        let mut h = Self::from_density(window, res, density)?;
        h.out_of_window = out_of_window;
        Ok(h)
    }
}

/// Accumulates the footprints of all tetrahedra into `n_out` histograms.
/// `route` maps a tetrahedron (flat vertex indices) to an output index or
/// `None` to skip it.
pub fn accumulate<T, F>(
    field: &BivariateField<T>,
    window: &RangeWindow<T>,
    res: [usize; 2],
    mode: ExecMode,
    n_out: usize,
    route: F,
) -> Result<Vec<CspHistogram<T>>>
where
    T: Real,
    F: Fn(&[usize; 4]) -> Option<usize> + Sync,
{
    window.validate()?;
    if res[0] < 2 || res[1] < 2 {
        return Err(Error::InvalidInput(format!(
            "CSP resolution must be >= 2 per axis, got {res:?}"
        )));
    }
    let empty = CspHistogram::zeros(*window, res)?;
    let spec = field.spec();
    let cells = spec.cell_dims();
    let volume = tet_volume(spec);
    let (r1, r2) = (T::from_usize_lossy(res[0]), T::from_usize_lossy(res[1]));
    let (sx, sy) = (r1 / window.width(), r2 / window.height());
    let area_eps = T::lit(HULL_AREA_EPS) * r1 * r2;
    let len_eps = T::lit(HULL_AREA_EPS) * r1.max(r2);

    let slab = |k: usize, outs: &mut Vec<CspHistogram<T>>, scratch: &mut raster::Scratch<T>| {
        for j in 0..cells[1] {
            for i in 0..cells[0] {
                let corners = cell_corners(spec, [i, j, k]);
                let raster = corners.map(|v| {
                    let [a, b] = field.value(v);
                    [(a - window.min1) * sx, (b - window.min2) * sy]
                });
                for t in FREUDENTHAL_TETS {
                    let tet = t.map(|c| corners[c]);
                    let Some(dst) = route(&tet) else { continue };
                    let fp = footprint::classify(t.map(|c| raster[c]), volume, area_eps, len_eps);
                    raster::rasterize_with(&fp, &mut outs[dst], scratch);
                }
            }
        }
    };

    let fresh = || vec![empty.clone(); n_out];
    let outs = match mode {
        ExecMode::Strict => {
            let mut outs = fresh();
            let mut scratch = raster::Scratch::new();
            for k in 0..cells[2] {
                slab(k, &mut outs, &mut scratch);
            }
            outs
        }
        ExecMode::Parallel => (0..cells[2])
            .into_par_iter()
            .fold(
                || (fresh(), raster::Scratch::new()),
                |(mut outs, mut scratch), k| {
                    slab(k, &mut outs, &mut scratch);
                    (outs, scratch)
                },
            )
            .map(|(outs, _)| outs)
            .reduce(fresh, |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    x.add_assign(y).expect("same window and resolution");
                }
                a
            }),
    };
    Ok(outs)
}

/// CSP of the whole field, or of the tetrahedra accepted by `tet_mask`.
pub fn compute_csp<T: Real>(
    field: &BivariateField<T>,
    window: &RangeWindow<T>,
    res: [usize; 2],
    tet_mask: Option<&(dyn Fn(&[usize; 4]) -> bool + Sync)>,
    mode: ExecMode,
) -> Result<CspHistogram<T>> {
    let mut outs = match tet_mask {
        Some(mask) => accumulate(field, window, res, mode, 1, |t| mask(t).then_some(0))?,
        None => accumulate(field, window, res, mode, 1, |_| Some(0))?,
    };
    Ok(outs.pop().expect("one output"))
}

fn check_labels<T: Real>(field: &BivariateField<T>, labels: &LabelGrid<T>) -> Result<()> {
    if !field.spec().same_geometry(labels.spec()) {
        return Err(Error::InvalidInput("label grid does not match the field grid".into()));
    }
    Ok(())
}

/// Segment a tetrahedron belongs to: its common label, or the boundary
/// pseudo-segment when labels differ (or are unassigned).
#[inline]
pub fn tet_segment(labels: &[i32], tet: &[usize; 4]) -> SegmentKey {
    let l = labels[tet[0]];
    if l != UNASSIGNED && tet[1..].iter().all(|&v| labels[v] == l) {
        SegmentKey::Atom(l)
    } else {
        SegmentKey::Boundary
    }
}

/// CSP restricted to one segment (peel operator).
pub fn peel_csp<T: Real>(
    field: &BivariateField<T>,
    labels: &LabelGrid<T>,
    segment: SegmentKey,
    window: &RangeWindow<T>,
    res: [usize; 2],
    mode: ExecMode,
) -> Result<CspHistogram<T>> {
    check_labels(field, labels)?;
    if !labels.contains_segment(segment) {
        return Err(Error::UnknownSegment(segment.to_string()));
    }
    if segment == SegmentKey::All {
        return compute_csp(field, window, res, None, mode);
    }
    let lab = labels.labels();
    let mask = move |t: &[usize; 4]| tet_segment(lab, t) == segment;
    compute_csp(field, window, res, Some(&mask), mode)
}

/// Peeled CSPs of every atom segment plus the boundary pseudo-segment, in
/// one pass over the grid.
pub fn peel_all<T: Real>(
    field: &BivariateField<T>,
    labels: &LabelGrid<T>,
    window: &RangeWindow<T>,
    res: [usize; 2],
    mode: ExecMode,
) -> Result<BTreeMap<SegmentKey, CspHistogram<T>>> {
    check_labels(field, labels)?;
    let ids = labels.ids();
    let boundary = ids.len();
    let lab = labels.labels();
    let outs = accumulate(field, window, res, mode, ids.len() + 1, |t| {
        Some(match tet_segment(lab, t) {
            SegmentKey::Atom(id) => ids.binary_search(&id).unwrap_or(boundary),
            _ => boundary,
        })
    })?;
    let keys = ids
        .iter()
        .map(|&id| SegmentKey::Atom(id))
        .chain(std::iter::once(SegmentKey::Boundary));
    Ok(keys.zip(outs).collect())
}
