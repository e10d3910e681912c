//! Image of one linearly interpolated tetrahedron in range space.
//!
//! An affine map from a tetrahedron to the plane pushes its volume forward
//! onto the convex hull of the four projected vertices with a "tent"
//! density: linear on each triangle spanned by the apex and a hull edge,
//! maximal at the apex and zero on the hull boundary. The apex is the
//! projected vertex lying inside a triangular hull, or the crossing of the
//! diagonals of a quadrilateral hull. The tent integrates to
//! `peak * area / 3`, so `peak = 3 * volume / area`.

use arrayvec::ArrayVec;

use crate::num::Real;

/// Absolute hull-area threshold (window-normalized units) below which a
/// footprint degrades to a segment or a point.
pub const HULL_AREA_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FootprintKind {
    Tent,
    Segment,
    Point,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TetFootprint<T> {
    pub kind: FootprintKind,
    /// Tent: counter-clockwise hull (3 or 4 points). Segment: the two
    /// endpoints. Point: the single location.
    pub hull: ArrayVec<[T; 2], 4>,
    pub apex: [T; 2],
    /// Tent height at the apex; zero for segment and point footprints.
    pub peak: T,
    pub volume: T,
}

impl<T: Real> TetFootprint<T> {
    pub fn hull_area(&self) -> T {
        match self.kind {
            FootprintKind::Tent => polygon_area(&self.hull),
            _ => T::zero(),
        }
    }
}

#[inline]
pub(crate) fn cross<T: Real>(o: [T; 2], a: [T; 2], b: [T; 2]) -> T {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn polygon_area<T: Real>(pts: &[[T; 2]]) -> T {
    let n = pts.len();
    let mut s = T::zero();
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        s = s + a[0] * b[1] - a[1] * b[0];
    }
    (s * T::lit(0.5)).abs()
}

/// Footprint of a tetrahedron whose vertices map to `values`, with the
/// degeneracy threshold applied in the coordinates the values are given in.
pub fn tet_footprint<T: Real>(values: [[T; 2]; 4], volume: T) -> TetFootprint<T> {
    let eps = T::lit(HULL_AREA_EPS);
    classify(values, volume, eps, eps)
}

const TRIPLES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];
const PAIRINGS: [([usize; 2], [usize; 2]); 3] = [([0, 2], [1, 3]), ([0, 1], [2, 3]), ([0, 3], [1, 2])];

pub(crate) fn classify<T: Real>(p: [[T; 2]; 4], volume: T, area_eps: T, len_eps: T) -> TetFootprint<T> {
    let half = T::lit(0.5);
    // Triple areas; triple t omits vertex t. Their sum is twice the hull
    // area whether the hull is a triangle or a quadrilateral.
    let areas = TRIPLES.map(|[a, b, c]| (cross(p[a], p[b], p[c]) * half).abs());
    let hull_area = (areas[0] + areas[1] + areas[2] + areas[3]) * half;

    if !(hull_area >= area_eps) {
        return degenerate(p, volume, len_eps);
    }

    let (omit, max_area) =
        areas.iter().copied().enumerate().fold(
            (0, T::neg_infinity()),
            |best, (i, a)| if a > best.1 { (i, a) } else { best },
        );

    let tol = T::lit(1e-10);
    if max_area >= hull_area * (T::one() - tol) {
        return triangle_tent(p, omit, volume);
    }

    // Quadrilateral: pick the pairing whose segments cross most clearly.
    let mut best: Option<(T, [usize; 4], [T; 2])> = None;
    for ([a, c], [b, d]) in PAIRINGS {
        let r = [p[c][0] - p[a][0], p[c][1] - p[a][1]];
        let q = [p[d][0] - p[b][0], p[d][1] - p[b][1]];
        let denom = r[0] * q[1] - r[1] * q[0];
        if denom == T::zero() {
            continue;
        }
        let w = [p[b][0] - p[a][0], p[b][1] - p[a][1]];
        let s = (w[0] * q[1] - w[1] * q[0]) / denom;
        let t = (w[0] * r[1] - w[1] * r[0]) / denom;
        let score = s.min(T::one() - s).min(t).min(T::one() - t);
        if best.map_or(true, |(bs, _, _)| score > bs) {
            let x = [p[a][0] + s * r[0], p[a][1] + s * r[1]];
            best = Some((score, [a, b, c, d], x));
        }
    }
    match best {
        Some((score, order, apex)) if score > T::zero() => {
            let mut hull: ArrayVec<[T; 2], 4> = order.iter().map(|&i| p[i]).collect();
            if cross(hull[0], hull[1], hull[2]) + cross(hull[0], hull[2], hull[3]) < T::zero() {
                hull.reverse();
            }
            let area = polygon_area(&hull);
            TetFootprint {
                kind: FootprintKind::Tent,
                hull,
                apex,
                peak: T::lit(3.0) * volume / area,
                volume,
            }
        }
        _ => triangle_tent(p, omit, volume),
    }
}

fn triangle_tent<T: Real>(p: [[T; 2]; 4], inner: usize, volume: T) -> TetFootprint<T> {
    let [a, b, c] = TRIPLES[inner];
    let mut hull: ArrayVec<[T; 2], 4> = [p[a], p[b], p[c]].into_iter().collect();
    if cross(hull[0], hull[1], hull[2]) < T::zero() {
        hull.swap(1, 2);
    }
    let area = polygon_area(&hull);
    TetFootprint {
        kind: FootprintKind::Tent,
        hull,
        apex: p[inner],
        peak: T::lit(3.0) * volume / area,
        volume,
    }
}

fn degenerate<T: Real>(p: [[T; 2]; 4], volume: T, len_eps: T) -> TetFootprint<T> {
    let mut far = (0, 0, T::zero());
    for a in 0..4 {
        for b in a + 1..4 {
            let d = ((p[b][0] - p[a][0]).powi(2) + (p[b][1] - p[a][1]).powi(2)).sqrt();
            if d > far.2 {
                far = (a, b, d);
            }
        }
    }
    let quarter = T::lit(0.25);
    let centroid = [
        (p[0][0] + p[1][0] + p[2][0] + p[3][0]) * quarter,
        (p[0][1] + p[1][1] + p[2][1] + p[3][1]) * quarter,
    ];
    if !(far.2 > len_eps) {
        return TetFootprint {
            kind: FootprintKind::Point,
            hull: [centroid].into_iter().collect(),
            apex: centroid,
            peak: T::zero(),
            volume,
        };
    }
    TetFootprint {
        kind: FootprintKind::Segment,
        hull: [p[far.0], p[far.1]].into_iter().collect(),
        apex: centroid,
        peak: T::zero(),
        volume,
    }
}
