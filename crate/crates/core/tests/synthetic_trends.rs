use bimoment_core::csp::{compute_csp, ExecMode};
use bimoment_core::moments::{csp_moments, normalize_moments, Pooling};
use bimoment_core::synthetic::{default_synthetic_grid, gen_rotation_field, gen_scaling_field};
use bimoment_core::{global_range_window, AtomList, BivariateTimeSeries, TimeStep};
use proptest::prelude::*;

const SAMPLED: [usize; 5] = [0, 12, 24, 39, 48];

/// Globally normalized M00 of the scaling series at the sampled steps, with
/// both series in the normalization pool.
fn scaling_m00(b: f64) -> Vec<f64> {
    let spec = default_synthetic_grid::<f64>(64, 2).unwrap();
    let series: Vec<_> = [true, false]
        .into_iter()
        .map(|rot| {
            let steps = (0..50u32)
                .map(|t| TimeStep {
                    time: t as f64,
                    field: if rot {
                        gen_rotation_field(t, &spec).unwrap()
                    } else {
                        gen_scaling_field(t, b, &spec).unwrap()
                    },
                    seeds: AtomList::default(),
                })
                .collect();
            BivariateTimeSeries::new(if rot { "R" } else { "S" }, steps).unwrap()
        })
        .collect();
    let w = global_range_window(&series, 0.05).unwrap();
    let raw: Vec<_> = series
        .iter()
        .flat_map(|s| s.steps())
        .map(|st| csp_moments(&compute_csp(&st.field, &w, [256, 256], None, ExecMode::Parallel).unwrap()))
        .collect();
    let norm = normalize_moments(&raw, Pooling::PerOrder).unwrap();
    SAMPLED.iter().map(|&t| norm[50 + t].m00).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    #[test]
    fn scaling_m00_decreases(b in -0.5f64..-0.05) {
        let m = scaling_m00(b);
        prop_assert!(m.windows(2).all(|w| w[1] < w[0]), "b = {b}: {m:?}");
        prop_assert!(m[4] < 0.05);
    }
}

#[test]
fn aligned_diagonal_at_zero_offset() {
    // f2 = f1 at t = 0 puts all mass on bin corners, the sparsest CSP of the run
    let m = scaling_m00(0.0);
    assert_eq!(m[0], 0.0);
    assert!(m[1..].windows(2).all(|w| w[1] < w[0]), "{m:?}");
}
