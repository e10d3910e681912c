//! Synthetic time-varying bivariate fields: a rotating and a scaling second
//! channel against the fixed first channel `f1(x, y, z) = x`.
//!
//! Both fields are constant along z so planar examples run through the
//! volumetric pipeline unchanged; use a grid with at least two z-slabs.

use crate::error::Result;
use crate::grid::{BivariateField, GridSpec, ScalarGrid};
use crate::num::Real;

/// Blend coefficient of the rotating field at integer step `t`: 0.01 + 0.02 t.
pub fn rotation_coefficient<T: Real>(t: u32) -> T {
    T::lit(0.01) + T::lit(0.02) * T::lit(t as f64)
}

/// Scale coefficient of the scaling field at integer step `t`: 1 − 0.02 t.
pub fn scaling_coefficient<T: Real>(t: u32) -> T {
    T::one() - T::lit(0.02) * T::lit(t as f64)
}

/// `f1 = x`, `f2 = a_t y + (1 − a_t) x`.
pub fn gen_rotation_field<T: Real>(t: u32, spec: &GridSpec<T>) -> Result<BivariateField<T>> {
    rotation_field_with(rotation_coefficient(t), spec)
}

/// Rotating field for an explicit blend coefficient.
pub fn rotation_field_with<T: Real>(a: T, spec: &GridSpec<T>) -> Result<BivariateField<T>> {
    let f1 = ScalarGrid::from_fn(spec.clone(), |p| p[0])?;
    let f2 = ScalarGrid::from_fn(spec.clone(), |p| a * p[1] + (T::one() - a) * p[0])?;
    BivariateField::new(f1, f2)
}

/// `f1 = x`, `f2 = a_t (x + b)`. `b` is the per-series offset in `[-0.5, 0]`.
pub fn gen_scaling_field<T: Real>(t: u32, b: T, spec: &GridSpec<T>) -> Result<BivariateField<T>> {
    let a = scaling_coefficient::<T>(t);
    let f1 = ScalarGrid::from_fn(spec.clone(), |p| p[0])?;
    let f2 = ScalarGrid::from_fn(spec.clone(), |p| a * (p[0] + b))?;
    BivariateField::new(f1, f2)
}

/// Unit cube with `n` vertices per side in x/y and `nz` layers in z. The
/// fields do not vary along z, so `nz = 2` gives the same CSP as a fully
/// resolved cube.
pub fn default_synthetic_grid<T: Real>(n: usize, nz: usize) -> Result<GridSpec<T>> {
    let nz = nz.max(2);
    let h = T::one() / T::from_usize_lossy(n.max(2) - 1);
    let hz = T::one() / T::from_usize_lossy(nz - 1);
    GridSpec::new([n, n, nz], [T::zero(); 3], [h, h, hz])
}
