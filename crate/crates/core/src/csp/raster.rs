//! Deposits footprints into a histogram.
//!
//! Footprints are given in raster coordinates, where bin `(i1, i2)` covers
//! `[i1, i1 + 1) x [i2, i2 + 1)` and the window is `[0, R1] x [0, R2]`.
//! Tents are integrated exactly over each bin by clipping their linear
//! pieces against bin rows and columns; segments are split by in-bin arc
//! length; points land in one bin. Every footprint's contributions are then
//! scaled by one factor so that in-window mass plus out-of-window mass
//! equals the footprint volume.

use arrayvec::ArrayVec;

use super::footprint::{FootprintKind, TetFootprint};
use super::CspHistogram;
use crate::num::Real;

/// Polygon vertex: raster u, raster v, and the tent's apex weight `g`.
type Vert<T> = [T; 3];
type Poly<T> = ArrayVec<Vert<T>, 12>;

/// Reusable buffer of `(bin, weight)` pairs for one footprint.
#[derive(Debug, Default)]
pub struct Scratch<T> {
    hits: Vec<(usize, T)>,
    cuts: Vec<T>,
}

impl<T> Scratch<T> {
    pub fn new() -> Self {
        Scratch {
            hits: Vec::new(),
            cuts: Vec::new(),
        }
    }
}

/// Splits a convex polygon by the line `x[axis] = c` into (below, above).
fn split<T: Real>(poly: &Poly<T>, axis: usize, c: T) -> (Poly<T>, Poly<T>) {
    let mut lo = Poly::new();
    let mut hi = Poly::new();
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let da = a[axis] - c;
        let db = b[axis] - c;
        if da <= T::zero() {
            lo.push(a);
        }
        if da >= T::zero() {
            hi.push(a);
        }
        if (da < T::zero() && db > T::zero()) || (da > T::zero() && db < T::zero()) {
            let t = da / (da - db);
            let mut x = [
                a[0] + t * (b[0] - a[0]),
                a[1] + t * (b[1] - a[1]),
                a[2] + t * (b[2] - a[2]),
            ];
            x[axis] = c;
            lo.push(x);
            hi.push(x);
        }
    }
    if lo.len() < 3 {
        lo.clear();
    }
    if hi.len() < 3 {
        hi.clear();
    }
    (lo, hi)
}

/// Integral of the affine weight `g` over a convex polygon (fan rule).
fn integral<T: Real>(poly: &Poly<T>) -> T {
    if poly.len() < 3 {
        return T::zero();
    }
    let third = T::one() / T::lit(3.0);
    let half = T::lit(0.5);
    let o = poly[0];
    let mut s = T::zero();
    for w in poly[1..].windows(2) {
        let (a, b) = (w[0], w[1]);
        let area = ((a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])) * half;
        s = s + area * (o[2] + a[2] + b[2]) * third;
    }
    s.abs()
}

fn bounds<T: Real>(poly: &Poly<T>, axis: usize) -> (T, T) {
    poly.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| {
        (lo.min(v[axis]), hi.max(v[axis]))
    })
}

/// Clips `poly` to the window and pushes per-bin integrals; returns the
/// in-window total.
fn clip_into_bins<T: Real>(poly: Poly<T>, res: [usize; 2], hits: &mut Vec<(usize, T)>) -> T {
    let (r1, r2) = (T::from_usize_lossy(res[0]), T::from_usize_lossy(res[1]));
    let (vmin, vmax) = bounds(&poly, 1);
    let (umin, umax) = bounds(&poly, 0);
    if vmax < T::zero() || vmin > r2 || umax < T::zero() || umin > r1 {
        return T::zero();
    }
    let row0 = vmin.max(T::zero()).floor().to_usize().unwrap_or(0).min(res[1] - 1);
    let row1 = vmax.min(r2).floor().to_usize().unwrap_or(0).min(res[1] - 1);
    if row0 == row1 && vmin >= T::zero() && vmax <= r2 && umin >= T::zero() && umax <= r1 {
        let col0 = umin.floor().to_usize().unwrap_or(0).min(res[0] - 1);
        let col1 = umax.floor().to_usize().unwrap_or(0).min(res[0] - 1);
        if col0 == col1 {
            let w = integral(&poly);
            if w > T::zero() {
                hits.push((row0 * res[0] + col0, w));
            }
            return w;
        }
    }
    let mut rest = if vmin < T::zero() {
        split(&poly, 1, T::zero()).1
    } else {
        poly
    };
    let mut inside = T::zero();
    for row in row0..=row1 {
        if rest.is_empty() {
            break;
        }
        let (strip, above) = split(&rest, 1, T::from_usize_lossy(row + 1));
        rest = above;
        if strip.is_empty() {
            continue;
        }
        let (smin, smax) = bounds(&strip, 0);
        if smax < T::zero() || smin > r1 {
            continue;
        }
        let col0 = smin.max(T::zero()).floor().to_usize().unwrap_or(0).min(res[0] - 1);
        let col1 = smax.min(r1).floor().to_usize().unwrap_or(0).min(res[0] - 1);
        let mut rest_c = if smin < T::zero() {
            split(&strip, 0, T::zero()).1
        } else {
            strip
        };
        for col in col0..=col1 {
            if rest_c.is_empty() {
                break;
            }
            let (cell, right) = split(&rest_c, 0, T::from_usize_lossy(col + 1));
            rest_c = right;
            let w = integral(&cell);
            if w > T::zero() {
                hits.push((row * res[0] + col, w));
                inside = inside + w;
            }
        }
    }
    inside
}

/// Bin containing a raster point of the closed window, if any.
#[inline]
pub(crate) fn bin_of<T: Real>(p: [T; 2], res: [usize; 2]) -> Option<usize> {
    let (r1, r2) = (T::from_usize_lossy(res[0]), T::from_usize_lossy(res[1]));
    if !(p[0] >= T::zero() && p[0] <= r1 && p[1] >= T::zero() && p[1] <= r2) {
        return None;
    }
    let i = p[0].floor().to_usize().unwrap_or(0).min(res[0] - 1);
    let j = p[1].floor().to_usize().unwrap_or(0).min(res[1] - 1);
    Some(j * res[0] + i)
}

/// Adds one footprint (raster coordinates) to `hist`.
pub fn rasterize_footprint<T: Real>(fp: &TetFootprint<T>, hist: &mut CspHistogram<T>) {
    let mut scratch = Scratch::new();
    rasterize_with(fp, hist, &mut scratch);
}

pub(crate) fn rasterize_with<T: Real>(fp: &TetFootprint<T>, hist: &mut CspHistogram<T>, scratch: &mut Scratch<T>) {
    if fp.volume == T::zero() {
        return;
    }
    let res = hist.res;
    scratch.hits.clear();
    // `total` is the unscaled weight of the whole footprint, `inside` the
    // part that fell into bins.
    let (total, inside) = match fp.kind {
        FootprintKind::Point => match bin_of(fp.apex, res) {
            Some(b) => {
                scratch.hits.push((b, T::one()));
                (T::one(), T::one())
            }
            None => (T::one(), T::zero()),
        },
        FootprintKind::Segment => segment_hits(fp.hull[0], fp.hull[1], res, scratch),
        FootprintKind::Tent => {
            let mut total = T::zero();
            let mut inside = T::zero();
            let n = fp.hull.len();
            let third = T::one() / T::lit(3.0);
            for k in 0..n {
                let (b, c) = (fp.hull[k], fp.hull[(k + 1) % n]);
                let piece: Poly<T> = [
                    [fp.apex[0], fp.apex[1], T::one()],
                    [b[0], b[1], T::zero()],
                    [c[0], c[1], T::zero()],
                ]
                .into_iter()
                .collect();
                let area = super::footprint::cross(fp.apex, b, c).abs() * T::lit(0.5);
                if area == T::zero() {
                    continue;
                }
                total = total + area * third;
                inside = inside + clip_into_bins(piece, res, &mut scratch.hits);
            }
            if !(total > T::zero()) {
                // no measurable area left after all: treat as a point mass at the apex
                match bin_of(fp.apex, res) {
                    Some(b) => {
                        scratch.hits.push((b, T::one()));
                        (T::one(), T::one())
                    }
                    None => (T::one(), T::zero()),
                }
            } else {
                (total, inside.min(total))
            }
        }
    };

    let scale = fp.volume / total;
    for &(b, w) in &scratch.hits {
        hist.density[b] = hist.density[b] + w * scale;
    }
    hist.out_of_window = hist.out_of_window + (total - inside) * scale;
}

/// Splits a segment by bin boundaries; weights are parameter lengths.
fn segment_hits<T: Real>(a: [T; 2], b: [T; 2], res: [usize; 2], scratch: &mut Scratch<T>) -> (T, T) {
    let cuts = &mut scratch.cuts;
    cuts.clear();
    cuts.push(T::zero());
    cuts.push(T::one());
    for axis in 0..2 {
        let (p, q) = (a[axis], b[axis]);
        if p == q {
            continue;
        }
        let lim = T::from_usize_lossy(res[axis]);
        let lo = p.min(q).max(T::zero()).ceil();
        let hi = p.max(q).min(lim).floor();
        let mut x = lo;
        while x <= hi {
            let t = (x - p) / (q - p);
            if t > T::zero() && t < T::one() {
                cuts.push(t);
            }
            x = x + T::one();
        }
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite cut parameters"));
    let half = T::lit(0.5);
    let mut inside = T::zero();
    for w in cuts.windows(2) {
        let dt = w[1] - w[0];
        if !(dt > T::zero()) {
            continue;
        }
        let tm = (w[0] + w[1]) * half;
        let m = [a[0] + tm * (b[0] - a[0]), a[1] + tm * (b[1] - a[1])];
        if let Some(bin) = bin_of(m, res) {
            scratch.hits.push((bin, dt));
            inside = inside + dt;
        }
    }
    (T::one(), inside)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::footprint::tet_footprint;
    use crate::series::RangeWindow;

    fn hist(res: [usize; 2]) -> CspHistogram<f64> {
        CspHistogram::zeros(RangeWindow::new(0.0, 1.0, 0.0, 1.0).unwrap(), res).unwrap()
    }

    #[test]
    fn point_mass_lands_in_one_bin() {
        let mut h = hist([8, 8]);
        let fp = tet_footprint([[3.5, 7.5]; 4], 0.25);
        rasterize_footprint(&fp, &mut h);
        assert_eq!(h.get(3, 7), 0.25);
        assert_eq!(h.total_mass(), 0.25);
    }

    #[test]
    fn quad_inside_conserves_mass() {
        let mut h = hist([16, 16]);
        let fp = tet_footprint([[2.3, 4.1], [9.7, 3.2], [3.1, 11.9], [10.4, 12.6]], 1.0);
        rasterize_footprint(&fp, &mut h);
        assert!((h.total_mass() - 1.0).abs() < 1e-12);
        assert_eq!(h.out_of_window, 0.0);
    }

    #[test]
    fn exact_tent_integral_per_bin() {
        // Unit-square quad tent of volume 1 on a 2x2 raster with the apex
        // at the shared corner: by symmetry each bin holds a quarter.
        let mut h = hist([2, 2]);
        let fp = tet_footprint([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0]], 1.0);
        rasterize_footprint(&fp, &mut h);
        for b in h.density() {
            assert!((b - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn straddling_footprint_books_outside_mass() {
        let mut h = hist([4, 4]);
        // tent hull [-2, 2] x [1, 3]: half of it lies left of the window
        let fp = tet_footprint([[-2.0, 1.0], [2.0, 1.0], [-2.0, 3.0], [2.0, 3.0]], 2.0);
        rasterize_footprint(&fp, &mut h);
        let inside = h.total_mass();
        assert!((inside + h.out_of_window - 2.0).abs() < 1e-14);
        assert!((inside - 1.0).abs() < 1e-14);
    }

    #[test]
    fn segment_split_by_arc_length() {
        let mut h = hist([4, 4]);
        let fp = tet_footprint([[0.5, 0.5], [2.5, 0.5], [1.0, 0.5], [2.0, 0.5]], 1.0);
        assert_eq!(fp.kind, FootprintKind::Segment);
        rasterize_footprint(&fp, &mut h);
        assert!((h.get(0, 0) - 0.25).abs() < 1e-15);
        assert!((h.get(1, 0) - 0.5).abs() < 1e-15);
        assert!((h.get(2, 0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn segment_half_outside() {
        let mut h = hist([4, 4]);
        let fp = tet_footprint([[3.0, 1.5], [5.0, 1.5], [4.0, 1.5], [3.5, 1.5]], 1.0);
        rasterize_footprint(&fp, &mut h);
        assert!((h.get(3, 1) - 0.5).abs() < 1e-15);
        assert!((h.out_of_window - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tiny_tent_inside_one_bin() {
        let mut h = hist([4, 4]);
        let fp = tet_footprint([[1.2, 2.2], [1.2001, 2.2], [1.2, 2.2001], [1.2001, 2.2001]], 0.5);
        assert_eq!(fp.kind, FootprintKind::Tent);
        rasterize_footprint(&fp, &mut h);
        assert!((h.get(1, 2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn point_on_window_max_corner_is_inside() {
        let mut h = hist([4, 4]);
        rasterize_footprint(&tet_footprint([[4.0, 4.0]; 4], 1.0), &mut h);
        assert_eq!(h.get(3, 3), 1.0);
        rasterize_footprint(&tet_footprint([[4.5, 4.0]; 4], 1.0), &mut h);
        assert_eq!(h.out_of_window, 1.0);
    }
}
