//! CSP shape descriptors: raw image moments of `log(1 + density)` and
//! global min-max normalization.
//!
//! Coordinates are bin centers in window-normalized `[0, 1]^2` units, so
//! moments do not depend on the raster resolution's pixel indexing.

use serde::{Deserialize, Serialize};

use crate::csp::CspHistogram;
use crate::error::{Error, Result};
use crate::num::Real;
use crate::segmentation::SegmentKey;

/// Which CSP a descriptor was computed from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub state_label: String,
    pub segment_id: SegmentKey,
    pub time_index: usize,
    pub time_fs: f64,
}

/// `[M00, M20, M11, M02]` of one CSP.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentVector<T> {
    pub m00: T,
    pub m20: T,
    pub m11: T,
    pub m02: T,
    pub normalized: bool,
    pub provenance: Option<Provenance>,
}

impl<T: Real> MomentVector<T> {
    pub fn raw(values: [T; 4]) -> Self {
        MomentVector {
            m00: values[0],
            m20: values[1],
            m11: values[2],
            m02: values[3],
            normalized: false,
            provenance: None,
        }
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = Some(p);
        self
    }

    pub fn as_array(&self) -> [T; 4] {
        [self.m00, self.m20, self.m11, self.m02]
    }
}

/// How order-2 components share min/max statistics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    /// One pool per order `i + j`: {M00} and {M20, M11, M02}.
    #[default]
    PerOrder,
    /// One pool per component.
    PerComponent,
}

/// `sum x^i y^j I(x, y)` over a row-major (x fastest) image.
pub fn raw_moments<T: Real>(image: &[T], res: [usize; 2], i: u32, j: u32) -> T {
    debug_assert_eq!(image.len(), res[0] * res[1]);
    let half = T::lit(0.5);
    let (r1, r2) = (T::from_usize_lossy(res[0]), T::from_usize_lossy(res[1]));
    let mut acc = T::zero();
    for iy in 0..res[1] {
        let y = (T::from_usize_lossy(iy) + half) / r2;
        let yj = y.powi(j as i32);
        for ix in 0..res[0] {
            let v = image[iy * res[0] + ix];
            if v == T::zero() {
                continue;
            }
            let x = (T::from_usize_lossy(ix) + half) / r1;
            acc = acc + x.powi(i as i32) * yj * v;
        }
    }
    acc
}

/// Raw `[M00, M20, M11, M02]` of `log(1 + d)`, where `d` is the bin's mass
/// divided by its range-space area (volume per unit range area).
pub fn csp_moments<T: Real>(hist: &CspHistogram<T>) -> MomentVector<T> {
    let half = T::lit(0.5);
    let inv_area = T::one() / hist.bin_area();
    let (r1, r2) = (T::from_usize_lossy(hist.res[0]), T::from_usize_lossy(hist.res[1]));
    let mut m = [T::zero(); 4];
    for iy in 0..hist.res[1] {
        let y = (T::from_usize_lossy(iy) + half) / r2;
        for ix in 0..hist.res[0] {
            let mass = hist.get(ix, iy);
            if mass == T::zero() {
                continue;
            }
            let w = (mass * inv_area).ln_1p();
            let x = (T::from_usize_lossy(ix) + half) / r1;
            m[0] = m[0] + w;
            m[1] = m[1] + x * x * w;
            m[2] = m[2] + x * y * w;
            m[3] = m[3] + y * y * w;
        }
    }
    MomentVector::raw(m)
}

fn min_max<T: Real>(vals: impl Iterator<Item = T>) -> (T, T) {
    vals.fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

#[inline]
fn rescale<T: Real>(v: T, (lo, hi): (T, T)) -> T {
    if hi > lo {
        ((v - lo) / (hi - lo)).max(T::zero()).min(T::one())
    } else {
        T::zero()
    }
}

/// Min-max rescales every component against the pool it belongs to. A pool
/// with a single distinct value maps to 0.
pub fn normalize_moments<T: Real>(all: &[MomentVector<T>], pooling: Pooling) -> Result<Vec<MomentVector<T>>> {
    if all.is_empty() {
        return Err(Error::InvalidInput("no moment vectors to normalize".into()));
    }
    if all.iter().any(|m| m.normalized) {
        return Err(Error::InvalidInput("moment vectors are already normalized".into()));
    }
    let comp = |c: usize| min_max(all.iter().map(move |m| m.as_array()[c]));
    let pools: [(T, T); 4] = match pooling {
        Pooling::PerOrder => {
            let second = min_max(all.iter().flat_map(|m| [m.m20, m.m11, m.m02]));
            [comp(0), second, second, second]
        }
        Pooling::PerComponent => [comp(0), comp(1), comp(2), comp(3)],
    };
    Ok(all
        .iter()
        .map(|m| {
            let v = m.as_array();
            MomentVector {
                m00: rescale(v[0], pools[0]),
                m20: rescale(v[1], pools[1]),
                m11: rescale(v[2], pools[2]),
                m02: rescale(v[3], pools[3]),
                normalized: true,
                provenance: m.provenance.clone(),
            }
        })
        .collect())
}
