use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::series::RangeWindow;

/// Relative tolerance of the simplicity test, measured in units of the
/// polygon's bounding-box extent.
pub const SIMPLICITY_TOL: f64 = 1e-12;

/// Closed, simple polygon in range space.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ControlPolygon<T> {
    vertices: Vec<[T; 2]>,
    closed: bool,
}

impl<T: Real> ControlPolygon<T> {
    /// Closed polygon through `vertices`; the last vertex connects back to
    /// the first and must not repeat it.
    pub fn new(vertices: Vec<[T; 2]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidPolygon(format!(
                "need at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPolygon("non-finite vertex".into()));
        }
        check_simple(&vertices)?;
        Ok(ControlPolygon { vertices, closed: true })
    }

    /// Closes an open polyline with an edge parallel to its chord, offset far
    /// to the chord's right so the added edges stay outside `window`.
    pub fn close_open_polyline(mut vertices: Vec<[T; 2]>, window: &RangeWindow<T>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidPolygon("open polyline needs at least 2 vertices".into()));
        }
        let a = vertices[0];
        let b = vertices[vertices.len() - 1];
        let chord = [b[0] - a[0], b[1] - a[1]];
        let len = chord[0].hypot(chord[1]);
        if !(len > T::zero()) {
            return Err(Error::InvalidPolygon("open polyline endpoints coincide".into()));
        }
        let offset = T::lit(4.0) * window.width().hypot(window.height());
        let n = [chord[1] / len * offset, -chord[0] / len * offset];
        vertices.push([b[0] + n[0], b[1] + n[1]]);
        vertices.push([a[0] + n[0], a[1] + n[1]]);
        Self::new(vertices)
    }

    pub fn vertices(&self) -> &[[T; 2]] {
        &self.vertices
    }

    pub fn closed(&self) -> bool {
        self.closed
    }

    pub fn edges(&self) -> impl Iterator<Item = ([T; 2], [T; 2])> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Even-odd containment.
    pub fn contains(&self, p: [T; 2]) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn bounds(&self) -> ([T; 2], [T; 2]) {
        let mut lo = self.vertices[0];
        let mut hi = lo;
        for v in &self.vertices {
            for c in 0..2 {
                lo[c] = lo[c].min(v[c]);
                hi[c] = hi[c].max(v[c]);
            }
        }
        (lo, hi)
    }
}

impl<'de, T: Real> Deserialize<'de> for ControlPolygon<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw<T> {
            vertices: Vec<[T; 2]>,
            #[serde(default = "yes")]
            closed: bool,
        }
        fn yes() -> bool {
            true
        }
        let raw = Raw::<T>::deserialize(d)?;
        if !raw.closed {
            return Err(serde::de::Error::custom(
                "open polylines need a range window to be closed",
            ));
        }
        ControlPolygon::new(raw.vertices).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn point_segment_distance<T: Real>(p: [T; 2], a: [T; 2], b: [T; 2]) -> T {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > T::zero() {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).max(T::zero()).min(T::one())
    } else {
        T::zero()
    };
    let d = [ap[0] - t * ab[0], ap[1] - t * ab[1]];
    d[0].hypot(d[1])
}

fn orient<T: Real>(a: [T; 2], b: [T; 2], c: [T; 2]) -> T {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segment_distance<T: Real>(a: [T; 2], b: [T; 2], c: [T; 2], d: [T; 2]) -> T {
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    let zero = T::zero();
    if ((o1 > zero && o2 < zero) || (o1 < zero && o2 > zero)) && ((o3 > zero && o4 < zero) || (o3 < zero && o4 > zero))
    {
        return zero;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

fn check_simple<T: Real>(v: &[[T; 2]]) -> Result<()> {
    let n = v.len();
    let mut lo = v[0];
    let mut hi = v[0];
    for p in v {
        for c in 0..2 {
            lo[c] = lo[c].min(p[c]);
            hi[c] = hi[c].max(p[c]);
        }
    }
    let scale = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    if !(scale > T::zero()) {
        return Err(Error::InvalidPolygon("all vertices coincide".into()));
    }
    let tol = T::lit(SIMPLICITY_TOL) * scale;
    let edge = |i: usize| (v[i], v[(i + 1) % n]);
    for i in 0..n {
        let (a, b) = edge(i);
        if (b[0] - a[0]).hypot(b[1] - a[1]) <= tol {
            return Err(Error::InvalidPolygon(format!("edge {i} has zero length")));
        }
    }
    for i in 0..n {
        let (a, b) = edge(i);
        for j in i + 1..n {
            let (c, d) = edge(j);
            let adjacent_next = j == i + 1;
            let adjacent_wrap = i == 0 && j == n - 1;
            let bad = if adjacent_next {
                // shared vertex b == c: the edges must not fold onto each other
                point_segment_distance(d, a, b) <= tol || point_segment_distance(a, c, d) <= tol
            } else if adjacent_wrap {
                point_segment_distance(c, a, b) <= tol || point_segment_distance(b, c, d) <= tol
            } else {
                segment_distance(a, b, c, d) <= tol
            };
            if bad {
                return Err(Error::InvalidPolygon(format!(
                    "edges {i} and {j} intersect; polygon is not simple"
                )));
            }
        }
    }
    Ok(())
}

/// Distance from `p` to the polygon boundary, negative inside.
pub fn polygon_signed_distance<T: Real>(p: [T; 2], poly: &ControlPolygon<T>) -> T {
    let d = poly
        .edges()
        .map(|(a, b)| point_segment_distance(p, a, b))
        .fold(T::infinity(), T::min);
    if d == T::zero() {
        T::zero()
    } else if poly.contains(p) {
        -d
    } else {
        d
    }
}
