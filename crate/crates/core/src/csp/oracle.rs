//! Monte-Carlo CSP used as an independent reference in tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::raster::bin_of;
use super::CspHistogram;
use crate::error::{Error, Result};
use crate::grid::BivariateField;
use crate::num::Real;
use crate::series::RangeWindow;

/// Bins `n_samples` uniformly distributed points of the grid's bounding box,
/// evaluating both channels by trilinear interpolation. Each sample carries
/// `domain_volume / n_samples`.
///
/// Points are jittered: the box is split into `m^3` equal strata
/// (`m = floor(cbrt(n_samples))`) and sample `s` is drawn uniformly inside
/// stratum `s mod m^3`.
pub fn mc_csp_oracle<T: Real>(
    field: &BivariateField<T>,
    window: &RangeWindow<T>,
    res: [usize; 2],
    n_samples: usize,
    rng_seed: u64,
) -> Result<CspHistogram<T>> {
    if n_samples == 0 {
        return Err(Error::InvalidInput("n_samples must be >= 1".into()));
    }
    let mut hist = CspHistogram::zeros(*window, res)?;
    let spec = field.spec();
    let lo = spec.origin;
    let hi = spec.extent_max();
    let mass = spec.domain_volume() / T::from_usize_lossy(n_samples);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut m = (n_samples as f64).cbrt().floor().max(1.0) as usize;
    while (m + 1).pow(3) <= n_samples {
        m += 1;
    }
    while m.pow(3) > n_samples {
        m -= 1;
    }
    let strata = m.pow(3);
    for s in 0..n_samples {
        let cell = s % strata;
        let idx = [cell % m, (cell / m) % m, cell / (m * m)];
        let p = [0, 1, 2].map(|a| {
            let u = (idx[a] as f64 + rng.random::<f64>()) / m as f64;
            lo[a] + (hi[a] - lo[a]) * T::lit(u)
        });
        let v = [field.f1().sample_trilinear(p), field.f2().sample_trilinear(p)];
        match bin_of(hist.to_raster(v), res) {
            Some(b) => hist.density[b] = hist.density[b] + mass,
            None => hist.out_of_window = hist.out_of_window + mass,
        }
    }
    Ok(hist)
}
