//! Regular axis-aligned grids and the scalar / bivariate fields sampled on them.
//!
//! Values are stored x-fastest: the flat index of vertex `(i, j, k)` is
//! `i + dims[0] * (j + dims[1] * k)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

/// Geometry of a regular grid: vertex counts, world-space origin and spacing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    pub dims: [usize; 3],
    pub origin: [T; 3],
    pub spacing: [T; 3],
}

impl<T: Real> GridSpec<T> {
    pub fn new(dims: [usize; 3], origin: [T; 3], spacing: [T; 3]) -> Result<Self> {
        let spec = GridSpec { dims, origin, spacing };
        spec.validate()?;
        Ok(spec)
    }

    /// Grid covering `[lo, hi]` on every axis with the given vertex counts.
    pub fn spanning(dims: [usize; 3], lo: [T; 3], hi: [T; 3]) -> Result<Self> {
        let mut spacing = [T::one(); 3];
        for a in 0..3 {
            if dims[a] < 2 {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} needs at least 2 vertices to span an interval"
                )));
            }
            spacing[a] = (hi[a] - lo[a]) / T::from_usize_lossy(dims[a] - 1);
        }
        Self::new(dims, lo, spacing)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidGrid(format!(
                "dims must be positive, got {:?}",
                self.dims
            )));
        }
        if self
            .dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .is_none()
        {
            return Err(Error::InvalidGrid("vertex count overflows".into()));
        }
        if self.spacing.iter().any(|&s| !(s > T::zero()) || !s.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "spacing must be strictly positive and finite, got {:?}",
                self.spacing
            )));
        }
        if self.origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    /// Cell counts per axis (zero on an axis with a single vertex).
    pub fn cell_dims(&self) -> [usize; 3] {
        self.dims.map(|d| d.saturating_sub(1))
    }

    pub fn num_cells(&self) -> usize {
        let c = self.cell_dims();
        c[0] * c[1] * c[2]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let i = index % self.dims[0];
        let rest = index / self.dims[0];
        [i, rest % self.dims[1], rest / self.dims[1]]
    }

    #[inline]
    pub fn position(&self, i: usize, j: usize, k: usize) -> [T; 3] {
        [
            self.origin[0] + T::from_usize_lossy(i) * self.spacing[0],
            self.origin[1] + T::from_usize_lossy(j) * self.spacing[1],
            self.origin[2] + T::from_usize_lossy(k) * self.spacing[2],
        ]
    }

    pub fn cell_volume(&self) -> T {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    /// Total volume covered by the cells of the grid.
    pub fn domain_volume(&self) -> T {
        self.cell_volume() * T::from_usize_lossy(self.num_cells())
    }

    /// Upper corner of the grid's bounding box.
    pub fn extent_max(&self) -> [T; 3] {
        let c = self.cell_dims();
        [0, 1, 2].map(|a| self.origin[a] + T::from_usize_lossy(c[a]) * self.spacing[a])
    }

    /// True when both specs describe the same vertices (exact comparison).
    pub fn same_geometry(&self, other: &GridSpec<T>) -> bool {
        self.dims == other.dims && self.origin == other.origin && self.spacing == other.spacing
    }

    pub fn cast<U: Real>(&self) -> GridSpec<U> {
        GridSpec {
            dims: self.dims,
            origin: self.origin.map(|v| U::lit(v.as_f64())),
            spacing: self.spacing.map(|v| U::lit(v.as_f64())),
        }
    }
}

/// One scalar field sampled at the vertices of a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarGrid<T> {
    spec: GridSpec<T>,
    values: Vec<T>,
}

impl<T: Real> ScalarGrid<T> {
    pub fn new(spec: GridSpec<T>, values: Vec<T>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.num_vertices() {
            return Err(Error::InvalidField(format!(
                "{} values for a grid of {} vertices",
                values.len(),
                spec.num_vertices()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!(
                "non-finite value at vertex {:?}",
                spec.coords(pos)
            )));
        }
        Ok(ScalarGrid { spec, values })
    }

    /// Samples `f(x, y, z)` at every vertex.
    pub fn from_fn(spec: GridSpec<T>, f: impl Fn([T; 3]) -> T) -> Result<Self> {
        spec.validate()?;
        let [nx, ny, nz] = spec.dims;
        let mut values = Vec::with_capacity(spec.num_vertices());
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    values.push(f(spec.position(i, j, k)));
                }
            }
        }
        Self::new(spec, values)
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> T {
        self.values[self.spec.index(i, j, k)]
    }

    /// `(min, max)` over all values.
    pub fn min_max(&self) -> (T, T) {
        self.values
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Trilinear interpolation at a world-space point; points outside the
    /// grid are clamped to the boundary.
    pub fn sample_trilinear(&self, p: [T; 3]) -> T {
        let mut base = [0usize; 3];
        let mut frac = [T::zero(); 3];
        for a in 0..3 {
            let n = self.spec.dims[a];
            if n == 1 {
                continue;
            }
            let g = ((p[a] - self.spec.origin[a]) / self.spec.spacing[a])
                .max(T::zero())
                .min(T::from_usize_lossy(n - 1));
            let cell = g.floor().to_usize().unwrap_or(0).min(n - 2);
            base[a] = cell;
            frac[a] = g - T::from_usize_lossy(cell);
        }
        let step = |a: usize, bit: usize| -> usize {
            if self.spec.dims[a] == 1 {
                0
            } else {
                bit
            }
        };
        let mut acc = T::zero();
        for corner in 0..8usize {
            let (bx, by, bz) = (corner & 1, (corner >> 1) & 1, (corner >> 2) & 1);
            let w = |a: usize, b: usize| if b == 1 { frac[a] } else { T::one() - frac[a] };
            let weight = w(0, bx) * w(1, by) * w(2, bz);
            if weight == T::zero() {
                continue;
            }
            acc = acc + weight * self.at(base[0] + step(0, bx), base[1] + step(1, by), base[2] + step(2, bz));
        }
        acc
    }
}

/// A pair of scalar fields on a common grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BivariateField<T> {
    f1: ScalarGrid<T>,
    f2: ScalarGrid<T>,
}

impl<T: Real> BivariateField<T> {
    pub fn new(f1: ScalarGrid<T>, f2: ScalarGrid<T>) -> Result<Self> {
        if !f1.spec().same_geometry(f2.spec()) {
            return Err(Error::InvalidField(format!(
                "f1 and f2 grids differ: {:?} vs {:?}",
                f1.spec(),
                f2.spec()
            )));
        }
        Ok(BivariateField { f1, f2 })
    }

    pub fn spec(&self) -> &GridSpec<T> {
        self.f1.spec()
    }

    pub fn f1(&self) -> &ScalarGrid<T> {
        &self.f1
    }

    pub fn f2(&self) -> &ScalarGrid<T> {
        &self.f2
    }

    /// Range-space value at a vertex index.
    #[inline]
    pub fn value(&self, index: usize) -> [T; 2] {
        [self.f1.values[index], self.f2.values[index]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_spec(n: usize) -> GridSpec<f64> {
        GridSpec::spanning([n, n, n], [0.0; 3], [1.0; 3]).unwrap()
    }

    #[test]
    fn index_round_trip() {
        let spec = GridSpec::new([3, 4, 5], [0.0; 3], [1.0; 3]).unwrap();
        for idx in 0..spec.num_vertices() {
            let [i, j, k] = spec.coords(idx);
            assert_eq!(spec.index(i, j, k), idx);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(GridSpec::new([0, 2, 2], [0.0; 3], [1.0; 3]).is_err());
        assert!(GridSpec::new([2, 2, 2], [0.0; 3], [1.0, 0.0, 1.0]).is_err());
        assert!(GridSpec::new([2, 2, 2], [0.0; 3], [1.0, -1.0, 1.0]).is_err());
        assert!(GridSpec::new([2, 2, 2], [f64::NAN, 0.0, 0.0], [1.0; 3]).is_err());
    }

    #[test]
    fn value_count_and_finiteness_checked() {
        let spec = unit_spec(2);
        assert!(ScalarGrid::new(spec.clone(), vec![0.0; 7]).is_err());
        let mut v = vec![0.0; 8];
        v[3] = f64::INFINITY;
        assert!(ScalarGrid::new(spec.clone(), v).is_err());
        assert!(ScalarGrid::new(spec, vec![1.0; 8]).is_ok());
    }

    #[test]
    fn x_fastest_layout() {
        let spec = GridSpec::new([2, 3, 4], [0.0; 3], [1.0; 3]).unwrap();
        let g = ScalarGrid::from_fn(spec, |p| p[0] + 10.0 * p[1] + 100.0 * p[2]).unwrap();
        assert_eq!(g.values()[1], 1.0);
        assert_eq!(g.values()[2], 10.0);
        assert_eq!(g.values()[6], 100.0);
        assert_eq!(g.at(1, 2, 3), 321.0);
    }

    #[test]
    fn trilinear_reproduces_linear_fields() {
        let g = ScalarGrid::from_fn(unit_spec(5), |p| 2.0 * p[0] - p[1] + 0.5 * p[2]).unwrap();
        for &p in &[[0.1, 0.2, 0.3], [0.99, 0.01, 0.5], [0.5, 0.5, 0.5], [1.0, 1.0, 1.0]] {
            let want = 2.0 * p[0] - p[1] + 0.5 * p[2];
            assert!((g.sample_trilinear(p) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn bivariate_requires_matching_geometry() {
        let a = ScalarGrid::new(unit_spec(2), vec![0.0; 8]).unwrap();
        let b = ScalarGrid::new(GridSpec::new([2, 2, 2], [0.0; 3], [2.0; 3]).unwrap(), vec![0.0; 8]).unwrap();
        assert!(BivariateField::new(a.clone(), b).is_err());
        assert!(BivariateField::new(a.clone(), a).is_ok());
    }

    #[test]
    fn domain_volume() {
        let spec = GridSpec::new([3, 3, 2], [0.0; 3], [0.5, 0.5, 2.0]).unwrap();
        assert_eq!(spec.domain_volume(), 4.0 * 0.25 * 2.0);
    }
}
