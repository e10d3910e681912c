//! CSP engine checked against analytic densities and the Monte-Carlo oracle.

use bimoment_core::csp::{compute_csp, mc_csp_oracle, peel_all, peel_csp, tet_footprint, ExecMode, FootprintKind};
use bimoment_core::synthetic::{default_synthetic_grid, gen_rotation_field};
use bimoment_core::{
    label_power_diagram, Atom, AtomList, BivariateField, CspHistogram, GridSpec, RangeWindow, ScalarGrid, SegmentKey,
};

fn field_on(spec: &GridSpec<f64>, f1: impl Fn([f64; 3]) -> f64, f2: impl Fn([f64; 3]) -> f64) -> BivariateField<f64> {
    BivariateField::new(
        ScalarGrid::from_fn(spec.clone(), f1).unwrap(),
        ScalarGrid::from_fn(spec.clone(), f2).unwrap(),
    )
    .unwrap()
}

fn unit_window() -> RangeWindow<f64> {
    RangeWindow::new(0.0, 1.0, 0.0, 1.0).unwrap()
}

fn l1(a: &CspHistogram<f64>, b: &CspHistogram<f64>) -> f64 {
    a.density().iter().zip(b.density()).map(|(x, y)| (x - y).abs()).sum()
}

#[test]
fn xy_field_has_uniform_csp() {
    let spec = GridSpec::spanning([64, 64, 64], [0.0; 3], [1.0; 3]).unwrap();
    let f = field_on(&spec, |p| p[0], |p| p[1]);
    let h = compute_csp(&f, &unit_window(), [64, 64], None, ExecMode::Parallel).unwrap();
    let expect = 1.0 / 4096.0;
    let worst = h
        .density()
        .iter()
        .map(|d| (d - expect).abs() / expect)
        .fold(0.0, f64::max);
    assert!(worst < 0.10, "max relative deviation {worst}");
}

#[test]
fn identical_channels_stay_on_the_diagonal() {
    let spec = GridSpec::spanning([12, 12, 12], [0.0; 3], [1.0; 3]).unwrap();
    let f = field_on(&spec, |p| p[0], |p| p[0]);
    let h = compute_csp(&f, &unit_window(), [32, 32], None, ExecMode::Strict).unwrap();
    for i2 in 0..32 {
        for i1 in 0..32 {
            if h.get(i1, i2) > 0.0 {
                assert!(i1.abs_diff(i2) <= 1, "mass at ({i1},{i2})");
            }
        }
    }
    assert!((h.total_mass() - 1.0).abs() < 1e-12);
}

#[test]
fn monte_carlo_oracle_converges_on_xy_field() {
    let spec = GridSpec::spanning([8, 8, 8], [0.0; 3], [1.0; 3]).unwrap();
    let f = field_on(&spec, |p| p[0], |p| p[1]);
    let h = mc_csp_oracle(&f, &unit_window(), [32, 32], 1_000_000, 11).unwrap();
    let uniform = CspHistogram::from_density(unit_window(), [32, 32], vec![1.0 / 1024.0; 1024]).unwrap();
    assert!(l1(&h, &uniform) < 0.02);
}

#[test]
fn rotation_field_matches_monte_carlo() {
    let spec = default_synthetic_grid::<f64>(64, 2).unwrap();
    let f = gen_rotation_field(24, &spec).unwrap();
    let w = RangeWindow::new(-0.05, 1.05, -0.05, 1.05).unwrap();
    let exact = compute_csp(&f, &w, [32, 32], None, ExecMode::Parallel).unwrap();
    let mc = mc_csp_oracle(&f, &w, [32, 32], 1_000_000, 3).unwrap();
    let d = l1(&exact, &mc) / exact.total_mass();
    assert!(d < 0.05, "L1 distance {d}");
}

/// Tent value of a footprint at `p`, by barycentric interpolation on the
/// sub-triangle (apex, hull edge) containing `p`.
fn tent_value(hull: &[[f64; 2]], apex: [f64; 2], peak: f64, p: [f64; 2]) -> f64 {
    let n = hull.len();
    for e in 0..n {
        let (a, b) = (hull[e], hull[(e + 1) % n]);
        let det = (a[0] - apex[0]) * (b[1] - apex[1]) - (a[1] - apex[1]) * (b[0] - apex[0]);
        if det.abs() < 1e-15 {
            continue;
        }
        let la = ((p[0] - apex[0]) * (b[1] - apex[1]) - (p[1] - apex[1]) * (b[0] - apex[0])) / det;
        let lb = ((a[0] - apex[0]) * (p[1] - apex[1]) - (a[1] - apex[1]) * (p[0] - apex[0])) / det;
        let lc = 1.0 - la - lb;
        if la >= -1e-12 && lb >= -1e-12 && lc >= -1e-12 {
            return peak * lc;
        }
    }
    0.0
}

/// Density of an affine map from the tetrahedron `(0,0,0), (c,0,0), (0,c,0),
/// (0,0,c)` with the given vertex values: the length of the fiber through
/// `p` divided by `|grad f1 x grad f2|`.
fn fiber_length_density(values: [[f64; 2]; 4], c: f64, p: [f64; 2]) -> f64 {
    let rows: [[f64; 3]; 2] = [0, 1].map(|ch| [1, 2, 3].map(|v| (values[v][ch] - values[0][ch]) / c));
    let n = [
        rows[0][1] * rows[1][2] - rows[0][2] * rows[1][1],
        rows[0][2] * rows[1][0] - rows[0][0] * rows[1][2],
        rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0],
    ];
    // minimum-norm solution of J y = p - v0
    let r = [p[0] - values[0][0], p[1] - values[0][1]];
    let g = [
        [
            rows[0].iter().map(|x| x * x).sum::<f64>(),
            rows[0].iter().zip(&rows[1]).map(|(a, b)| a * b).sum(),
        ],
        [0.0, rows[1].iter().map(|x| x * x).sum::<f64>()],
    ];
    let g10 = g[0][1];
    let det = g[0][0] * g[1][1] - g10 * g10;
    let a0 = (g[1][1] * r[0] - g10 * r[1]) / det;
    let a1 = (g[0][0] * r[1] - g10 * r[0]) / det;
    let y0 = [0, 1, 2].map(|k| a0 * rows[0][k] + a1 * rows[1][k]);
    // barycentric constraints y_k >= 0 and y_x + y_y + y_z <= c along y0 + t n
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut clip = |base: f64, slope: f64| {
        // base + t slope >= 0
        if slope.abs() < 1e-300 {
            if base < 0.0 {
                lo = f64::INFINITY;
            }
        } else if slope > 0.0 {
            lo = lo.max(-base / slope);
        } else {
            hi = hi.min(-base / slope);
        }
    };
    for k in 0..3 {
        clip(y0[k], n[k]);
    }
    clip(c - y0.iter().sum::<f64>(), -n.iter().sum::<f64>());
    let nn = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    // fiber length (hi - lo) |n| over |n|
    if hi > lo {
        (hi - lo) * nn / nn
    } else {
        0.0
    }
}

#[test]
fn interior_apex_tent_matches_fiber_lengths() {
    use rand::{Rng, SeedableRng};
    let values = [[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [0.5, 0.5]];
    let c = 6f64.cbrt();
    let fp = tet_footprint::<f64>(values, 1.0);
    assert_eq!(fp.kind, FootprintKind::Tent);
    assert!((fp.peak - 1.5).abs() < 1e-12);
    let hull: Vec<[f64; 2]> = fp.hull.iter().copied().collect();
    assert!((fiber_length_density(values, c, [0.5, 0.5]) - 1.5).abs() < 1e-9);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..2000 {
        let (u, v): (f64, f64) = (rng.random(), rng.random());
        let p = [2.0 * u, 2.0 * v * (1.0 - u)];
        let oracle = fiber_length_density(values, c, p);
        let tent = tent_value(&hull, fp.apex, fp.peak, p);
        assert!((oracle - tent).abs() < 1e-9, "at {p:?}: oracle {oracle}, tent {tent}");
    }
}

#[test]
fn quad_tent_matches_fiber_lengths() {
    use rand::{Rng, SeedableRng};
    let values = [[0.1, 0.2], [1.3, 0.0], [0.9, 1.4], [-0.2, 1.1]];
    let c = 1.7;
    let fp = tet_footprint(values, c * c * c / 6.0);
    assert_eq!(fp.kind, FootprintKind::Tent);
    assert_eq!(fp.hull.len(), 4);
    let hull: Vec<[f64; 2]> = fp.hull.iter().copied().collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
    for _ in 0..2000 {
        let p = [rng.random_range(-0.3..1.4), rng.random_range(-0.1..1.5)];
        let oracle = fiber_length_density(values, c, p);
        let tent = tent_value(&hull, fp.apex, fp.peak, p);
        assert!((oracle - tent).abs() < 1e-9, "at {p:?}: oracle {oracle}, tent {tent}");
    }
}

fn three_atoms() -> AtomList<f64> {
    let atom = |id, c: [f64; 3], w| Atom {
        id,
        element: "C".into(),
        center: c,
        weight: w,
    };
    AtomList::new(vec![
        atom(1, [0.2, 0.3, 0.5], 0.02),
        atom(2, [0.8, 0.3, 0.4], 0.0),
        atom(3, [0.5, 0.8, 0.6], 0.01),
    ])
    .unwrap()
}

#[test]
fn peel_additivity_three_atoms() {
    let spec = GridSpec::spanning([20, 20, 20], [0.0; 3], [1.0; 3]).unwrap();
    let f = field_on(&spec, |p| (p[0] * 3.0).sin() + p[2], |p| p[1] * p[1] - p[0] * p[2]);
    let labels = label_power_diagram(&spec, &three_atoms()).unwrap();
    let w = RangeWindow::new(-0.2, 2.0, -1.1, 1.1).unwrap();
    let full = compute_csp(&f, &w, [64, 64], None, ExecMode::Strict).unwrap();
    let peels = peel_all(&f, &labels, &w, [64, 64], ExecMode::Strict).unwrap();
    assert_eq!(peels.len(), 4);
    let mut worst: f64 = 0.0;
    for b in 0..64 * 64 {
        let sum: f64 = peels.values().map(|h| h.density()[b]).sum();
        worst = worst.max((full.density()[b] - sum).abs());
    }
    assert!(worst < 1e-9, "worst bin residual {worst}");
    for (key, h) in &peels {
        let single = peel_csp(&f, &labels, *key, &w, [64, 64], ExecMode::Strict).unwrap();
        assert_eq!(&single, h);
    }
}

#[test]
fn single_atom_peel_equals_full_csp() {
    let spec = GridSpec::spanning([10, 10, 10], [0.0; 3], [1.0; 3]).unwrap();
    let f = field_on(&spec, |p| p[0] * p[1], |p| p[2] - p[0]);
    let atoms = AtomList::new(vec![Atom {
        id: 4,
        element: "H".into(),
        center: [0.5; 3],
        weight: 0.1,
    }])
    .unwrap();
    let labels = label_power_diagram(&spec, &atoms).unwrap();
    let w = RangeWindow::new(0.0, 1.0, -1.0, 1.0).unwrap();
    let full = compute_csp(&f, &w, [32, 32], None, ExecMode::Strict).unwrap();
    let peel = peel_csp(&f, &labels, SegmentKey::Atom(4), &w, [32, 32], ExecMode::Strict).unwrap();
    assert_eq!(full, peel);
    let boundary = peel_csp(&f, &labels, SegmentKey::Boundary, &w, [32, 32], ExecMode::Strict).unwrap();
    assert_eq!(boundary.total_mass(), 0.0);
    assert!(peel_csp(&f, &labels, SegmentKey::Atom(5), &w, [32, 32], ExecMode::Strict).is_err());
}

#[test]
fn segment_without_interior_tets_is_empty() {
    let spec = GridSpec::spanning([6, 6, 6], [0.0; 3], [1.0; 3]).unwrap();
    let f = field_on(&spec, |p| p[0], |p| p[1]);
    let atom = |id, c: [f64; 3], w| Atom {
        id,
        element: "H".into(),
        center: c,
        weight: w,
    };
    // atom 2 wins only the single vertex it sits on
    let atoms = AtomList::new(vec![atom(1, [0.5; 3], 10.0), atom(2, [1.0, 1.0, 1.0], 0.0)]).unwrap();
    let labels = label_power_diagram(&spec, &atoms).unwrap();
    let h = peel_csp(
        &f,
        &labels,
        SegmentKey::Atom(2),
        &unit_window(),
        [16, 16],
        ExecMode::Strict,
    )
    .unwrap();
    assert!(h.density().iter().all(|&d| d == 0.0));
}

#[test]
fn parallel_matches_strict_closely() {
    let spec = GridSpec::spanning([24, 24, 24], [0.0; 3], [1.0; 3]).unwrap();
    let f = field_on(&spec, |p| (p[0] - 0.5).powi(2) + p[1], |p| p[2] * p[0]);
    let w = RangeWindow::new(0.0, 1.3, 0.0, 1.0).unwrap();
    let a = compute_csp(&f, &w, [128, 128], None, ExecMode::Strict).unwrap();
    let b = compute_csp(&f, &w, [128, 128], None, ExecMode::Parallel).unwrap();
    for (x, y) in a.density().iter().zip(b.density()) {
        assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300) + 1e-18);
    }
    let again = compute_csp(&f, &w, [128, 128], None, ExecMode::Strict).unwrap();
    assert_eq!(a, again);
}

#[test]
fn total_mass_is_resolution_invariant() {
    let spec = GridSpec::spanning([16, 16, 16], [0.0; 3], [2.0; 3]).unwrap();
    let f = field_on(&spec, |p| p[0].sin(), |p| p[1] * p[2]);
    let w = RangeWindow::new(-0.2, 0.8, 0.0, 3.0).unwrap();
    let mut masses = Vec::new();
    for r in [16, 32, 64, 128] {
        let h = compute_csp(&f, &w, [r, r], None, ExecMode::Strict).unwrap();
        assert!((h.total_mass() + h.out_of_window - 8.0).abs() < 8e-12);
        masses.push(h.total_mass());
    }
    for m in &masses[1..] {
        assert!((m - masses[0]).abs() < 1e-9, "{masses:?}");
    }
}

#[test]
fn f32_engine_agrees_with_f64() {
    let spec = GridSpec::<f32>::spanning([10, 10, 10], [0.0; 3], [1.0; 3]).unwrap();
    let f = BivariateField::new(
        ScalarGrid::from_fn(spec.clone(), |p| p[0] + 0.3 * p[2]).unwrap(),
        ScalarGrid::from_fn(spec.clone(), |p| p[1] * p[0]).unwrap(),
    )
    .unwrap();
    let w = RangeWindow::<f32>::new(0.0, 1.3, 0.0, 1.0).unwrap();
    let h32 = compute_csp(&f, &w, [16, 16], None, ExecMode::Strict).unwrap();
    let spec64 = spec.cast::<f64>();
    let f64f = field_on(&spec64, |p| p[0] + 0.3 * p[2], |p| p[1] * p[0]);
    let h64 = compute_csp(&f64f, &w.cast(), [16, 16], None, ExecMode::Strict).unwrap();
    let diff: f64 = h32
        .density()
        .iter()
        .zip(h64.density())
        .map(|(a, b)| (*a as f64 - b).abs())
        .sum();
    assert!(diff < 1e-4, "L1 {diff}");
    assert!(((h32.total_mass() as f64) - 1.0).abs() < 1e-5);
}
