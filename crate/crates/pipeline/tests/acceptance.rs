//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so criteria execute one after another on
//! an otherwise idle process; the runtime budget is measured in strict
//! (single-threaded) mode.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use bimoment_core::csp::{compute_csp, mc_csp_oracle, peel_all, ExecMode};
use bimoment_core::fiber::extract_fiber;
use bimoment_core::synthetic::{default_synthetic_grid, gen_rotation_field, gen_scaling_field};
use bimoment_core::tet::{cell_corners, FREUDENTHAL_TETS};
use bimoment_core::tracks::track_metrics;
use bimoment_core::{
    csp_moments, extract_fiber_surface, fit_pca, label_power_diagram, polygon_signed_distance, Atom, AtomList,
    AxisPair, BivariateField, ControlPolygon, CspHistogram, GridSpec, RangeWindow, ScalarGrid, SegmentKey,
};
use bimoment_pipeline::artifacts::{read_csp, read_json, MomentsTable, TracksExport};
use bimoment_pipeline::{run_pipeline, AnalysisManifest, RunOptions, Stage};
use bimoment_testkit::{covariance, jacobi_eigen, log_moment_oracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

const SAMPLED: [u32; 5] = [0, 12, 24, 39, 48];

/// Window of the synthetic suite: both series at b = 0 span [0, 1] on both
/// channels, padded by 5%.
fn suite_window() -> RangeWindow<f64> {
    RangeWindow::new(-0.05, 1.05, -0.05, 1.05).unwrap()
}

fn mass_conservation() -> Verdict {
    let spec = default_synthetic_grid::<f64>(64, 64).unwrap();
    let vol = spec.domain_volume();
    let w = suite_window();
    let mut worst: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    let mut n = 0;
    for t in SAMPLED {
        for field in [
            gen_rotation_field(t, &spec).unwrap(),
            gen_scaling_field(t, 0.0, &spec).unwrap(),
        ] {
            let start = Instant::now();
            let h = compute_csp(&field, &w, [256, 256], None, ExecMode::Strict).unwrap();
            slowest = slowest.max(start.elapsed().as_secs_f64());
            worst = worst.max((h.total_mass() + h.out_of_window - vol).abs() / vol);
            n += 1;
        }
    }
    check(
        worst < 1e-9 && slowest < 5.0,
        format!("{n} CSPs on 64^3 at res 256: max relative residual {worst:.2e} (< 1e-9), slowest {slowest:.2} s single-threaded (< 5 s)"),
    )
}

fn peel_additivity() -> Verdict {
    let spec = GridSpec::<f64>::spanning([33, 33, 33], [0.0; 3], [1.0; 3]).unwrap();
    let f = BivariateField::new(
        ScalarGrid::from_fn(spec.clone(), |p| p[0] + 0.3 * (4.0 * p[2]).sin()).unwrap(),
        ScalarGrid::from_fn(spec.clone(), |p| p[1] * p[0] + 0.5 * p[2]).unwrap(),
    )
    .unwrap();
    let atoms = AtomList::new(
        [[0.2, 0.3, 0.4], [0.7, 0.2, 0.6], [0.5, 0.8, 0.3]]
            .into_iter()
            .enumerate()
            .map(|(i, c)| Atom {
                id: i as i32 + 1,
                element: "C".into(),
                center: c,
                weight: 0.02 * i as f64,
            })
            .collect(),
    )
    .unwrap();
    let labels = label_power_diagram(&spec, &atoms).unwrap();
    let w = RangeWindow::new(-0.4, 1.4, -0.1, 1.6).unwrap();
    let full = compute_csp(&f, &w, [256, 256], None, ExecMode::Strict).unwrap();
    let peels = peel_all(&f, &labels, &w, [256, 256], ExecMode::Strict).unwrap();
    let mut worst: f64 = 0.0;
    for b in 0..full.density().len() {
        let sum: f64 = peels.values().map(|h| h.density()[b]).sum();
        worst = worst.max((full.density()[b] - sum).abs());
    }
    let segs: Vec<String> = peels.keys().map(SegmentKey::to_string).collect();
    check(
        worst < 1e-9 && peels.len() == 4,
        format!(
            "segments [{}]: max per-bin |full - sum of peels| {worst:.2e} (< 1e-9)",
            segs.join(", ")
        ),
    )
}

fn l1(a: &CspHistogram<f64>, b: &CspHistogram<f64>) -> f64 {
    a.density().iter().zip(b.density()).map(|(x, y)| (x - y).abs()).sum()
}

fn oracle_equivalence() -> Verdict {
    let spec = default_synthetic_grid::<f64>(64, 2).unwrap();
    let w = suite_window();
    let mut parts = Vec::new();
    let mut ok = true;
    for t in [0, 24, 48] {
        let f = gen_rotation_field(t, &spec).unwrap();
        let exact = compute_csp(&f, &w, [32, 32], None, ExecMode::Strict).unwrap();
        let mc = mc_csp_oracle(&f, &w, [32, 32], 1_000_000, 20240 + t as u64).unwrap();
        let rel = l1(&exact, &mc) / exact.total_mass();
        ok &= rel < 0.05;
        parts.push(format!("t={t}: {:.2}%", 100.0 * rel));
    }
    check(
        ok,
        format!("L1 vs 10^6-sample oracle at res 32 (< 5%): {}", parts.join(", ")),
    )
}

/// The synthetic run (both series, 50 steps, b = 0) shared by the trend,
/// track and determinism criteria.
struct SyntheticRun {
    dir: PathBuf,
}

fn synthetic_manifest(out: &Path) -> AnalysisManifest {
    serde_json::from_value(serde_json::json!({
        "series": [
            {"state_label": "rotation", "synthetic": {"kind": "rotation", "steps": 50}},
            {"state_label": "scaling", "synthetic": {"kind": "scaling", "steps": 50, "b": 0.0}}
        ],
        "csp": {"res": 256, "window": "auto", "padding": 0.05},
        "output_dir": out,
    }))
    .unwrap()
}

fn strict() -> RunOptions {
    RunOptions {
        strict: true,
        ..RunOptions::default()
    }
}

impl SyntheticRun {
    fn all_csp(&self, state: &str, t: u32) -> CspHistogram<f64> {
        read_csp(&self.dir.join(format!("csp/{state}/t{t:04}/all"))).unwrap().0
    }
}

fn rotation_area_trend(run: &SyntheticRun) -> Verdict {
    let counts: Vec<usize> = (0..50).map(|t| run.all_csp("rotation", t).count_nonzero(0.0)).collect();
    let monotone = counts.windows(2).all(|w| w[1] >= w[0]);
    let ratio = counts[48] as f64 / counts[0] as f64;
    check(
        monotone && ratio >= 2.0,
        format!(
            "nonzero bins of (f1,fR) non-decreasing over t=0..49: {monotone}; t=0 {} -> t=48 {} ({ratio:.1}x, >= 2x)",
            counts[0], counts[48]
        ),
    )
}

fn scaling_slope_trend(run: &SyntheticRun) -> Verdict {
    let angles: Vec<f64> = SAMPLED
        .iter()
        .map(|&t| run.all_csp("scaling", t).principal_axis_angle().unwrap())
        .collect();
    let decreasing = angles.windows(2).all(|w| w[1] < w[0]);
    let text: Vec<String> = SAMPLED
        .iter()
        .zip(&angles)
        .map(|(t, a)| format!("t={t}: {a:.2}"))
        .collect();
    check(
        (angles[0] - 45.0).abs() <= 2.0 && decreasing,
        format!(
            "principal-axis angle of (f1,fS), b=0, degrees: {} (45 +- 2 at t=0, strictly decreasing)",
            text.join(", ")
        ),
    )
}

fn scaling_m00_trend(run: &SyntheticRun) -> Verdict {
    let table: MomentsTable = read_json(&run.dir.join("moments.json")).unwrap();
    let m00 = |state: &str, t: usize| {
        table
            .rows
            .iter()
            .find(|r| r.state_label == state && r.time_index == t)
            .unwrap()
            .normalized[0]
    };
    let v = m00("scaling", 48);
    let seq: Vec<String> = SAMPLED
        .iter()
        .map(|&t| format!("{:.3}", m00("scaling", t as usize)))
        .collect();
    check(
        v < 0.05,
        format!(
            "normalized M00 of (f1,fS) at t=48: {v:.4} (< 0.05); sampled steps [{}]",
            seq.join(", ")
        ),
    )
}

fn moment_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let (r1, r2) = (rng.random_range(1..=8usize), rng.random_range(1..=8usize));
        let rows: Vec<Vec<f64>> = (0..r2)
            .map(|_| {
                (0..r1)
                    .map(|_| {
                        if rng.random_bool(0.3) {
                            0.0
                        } else {
                            rng.random_range(0.0..20.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let w = RangeWindow::new(-1.0, 2.0, 0.5, 0.75).unwrap();
        let h = CspHistogram::from_density(w, [r1, r2], rows.concat()).unwrap();
        let got = csp_moments(&h).as_array();
        let want = log_moment_oracle(&rows, 3.0 * 0.25 / (r1 * r2) as f64);
        for c in 0..4 {
            worst = worst.max((got[c] - want[c]).abs());
        }
    }
    check(
        worst <= 1e-12,
        format!("10 random histograms up to 8x8: max |difference| {worst:.2e} (<= 1e-12)"),
    )
}

fn pca_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut ev_err, mut axis_err, mut recon_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut permutation_equal = true;
    for _ in 0..100 {
        let n = rng.random_range(5..=60);
        let scale: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.1..3.0));
        let vs: Vec<[f64; 4]> = (0..n)
            .map(|_| std::array::from_fn(|c| scale[c] * rng.random_range(-1.0..1.0)))
            .collect();
        let model = fit_pca(&vs).unwrap();
        let rows: Vec<Vec<f64>> = vs.iter().map(|v| v.to_vec()).collect();
        let (vals, vecs) = jacobi_eigen(&covariance(&rows));
        for k in 0..4 {
            ev_err = ev_err.max((model.eigenvalues[k] - vals[k]).abs());
            for c in 0..4 {
                axis_err = axis_err.max((model.components[k][c] - vecs[k][c]).abs());
            }
        }
        for v in &vs {
            let back = model.reconstruct(model.project(*v));
            for c in 0..4 {
                recon_err = recon_err.max((back[c] - v[c]).abs());
            }
        }
        let mut shuffled = vs.clone();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        permutation_equal &= fit_pca(&shuffled).unwrap() == model;
    }
    check(
        ev_err < 1e-8 && axis_err < 1e-6 && recon_err < 1e-9 && permutation_equal,
        format!(
            "100 sets vs Jacobi: eigenvalues {ev_err:.1e} (< 1e-8), axes {axis_err:.1e} (< 1e-6), reconstruction {recon_err:.1e} (< 1e-9), permutation-invariant: {permutation_equal}"
        ),
    )
}

/// Largest range-space diameter of any tetrahedron of the grid.
fn max_tet_range_diameter(f: &BivariateField<f64>) -> f64 {
    let spec = f.spec();
    let [nx, ny, nz] = spec.cell_dims();
    let mut diam: f64 = 0.0;
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let c = cell_corners(spec, [i, j, k]);
                for t in FREUDENTHAL_TETS {
                    for a in 0..4 {
                        for b in a + 1..4 {
                            let (p, q) = (f.value(c[t[a]]), f.value(c[t[b]]));
                            diam = diam.max((p[0] - q[0]).hypot(p[1] - q[1]));
                        }
                    }
                }
            }
        }
    }
    diam
}

fn point_segment_distance(p: [f64; 3], a: [f64; 3], b: [f64; 3]) -> f64 {
    let ab: [f64; 3] = std::array::from_fn(|c| b[c] - a[c]);
    let ap: [f64; 3] = std::array::from_fn(|c| p[c] - a[c]);
    let len2: f64 = ab.iter().map(|x| x * x).sum();
    let s = if len2 > 0.0 {
        (ap.iter().zip(&ab).map(|(x, y)| x * y).sum::<f64>() / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (0..3).map(|c| (ap[c] - s * ab[c]).powi(2)).sum::<f64>().sqrt()
}

fn fiber_range_check() -> Verdict {
    let spec = GridSpec::spanning([64, 64, 64], [0.0; 3], [1.0; 3]).unwrap();
    let f = BivariateField::new(
        ScalarGrid::from_fn(spec.clone(), |p| p[0]).unwrap(),
        ScalarGrid::from_fn(spec.clone(), |p| p[1]).unwrap(),
    )
    .unwrap();
    let diam = max_tet_range_diameter(&f);

    let square = ControlPolygon::new(vec![[0.25, 0.25], [0.75, 0.25], [0.75, 0.75], [0.25, 0.75]]).unwrap();
    let mesh = extract_fiber_surface(&f, &square);
    let within = mesh
        .values
        .iter()
        .filter(|v| polygon_signed_distance(**v, &square).abs() < diam)
        .count();

    // thin rectangle around (k1, k2) against the intersection of the f1 = k1
    // and f2 = k2 isosurfaces
    // half-width 0.6 cells so the rectangle contains a vertex column
    let (k1, k2, eps) = (0.4037, 0.6121, 0.6 / 63.0);
    let thin = ControlPolygon::new(vec![
        [k1 - eps, k2 - eps],
        [k1 + eps, k2 - eps],
        [k1 + eps, k2 + eps],
        [k1 - eps, k2 + eps],
    ])
    .unwrap();
    let tube = extract_fiber_surface(&f, &thin);
    let fiber = extract_fiber(&f, [k1, k2]);
    let to_fiber = |p: [f64; 3]| {
        fiber
            .iter()
            .map(|s| point_segment_distance(p, s[0], s[1]))
            .fold(f64::INFINITY, f64::min)
    };
    let tube_to_fiber = tube.positions.iter().map(|p| to_fiber(*p)).fold(0.0, f64::max);
    let fiber_to_tube = fiber
        .iter()
        .flat_map(|s| [s[0], s[1]])
        .map(|q| {
            tube.positions
                .iter()
                .map(|p| (0..3).map(|c| (p[c] - q[c]).powi(2)).sum::<f64>().sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let fiber_len: f64 = fiber
        .iter()
        .map(|s| (0..3).map(|c| (s[1][c] - s[0][c]).powi(2)).sum::<f64>().sqrt())
        .sum();
    check(
        !mesh.is_empty() && within == mesh.values.len() && !tube.is_empty() && tube_to_fiber < diam && fiber_to_tube < diam,
        format!(
            "square: {within}/{} vertices within cell range diameter {diam:.4}; thin rectangle vs fiber (length {fiber_len:.3}): max distance {tube_to_fiber:.4} / {fiber_to_tube:.4}",
            mesh.values.len()
        ),
    )
}

fn track_shape(run: &SyntheticRun) -> Verdict {
    let export: TracksExport = read_json(&run.dir.join("tracks.json")).unwrap();
    let tracks = &export.tracks;
    let lengths: Vec<usize> = tracks.tracks.iter().map(|t| t.points.len()).collect();
    let metrics = track_metrics(tracks, AxisPair::new(1, 2).unwrap());
    let area = |state: &str| metrics.iter().find(|m| m.state_label == state).unwrap().bbox_area;
    let (r, s) = (area("rotation"), area("scaling"));
    check(
        lengths == [50, 50] && r > s,
        format!(
            "{} tracks of lengths {lengths:?}; PC1-PC2 bbox area (f1,fR) {r:.4e} > (f1,fS) {s:.4e}",
            tracks.len()
        ),
    )
}

fn files_under(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism(run: &SyntheticRun) -> Verdict {
    let again = tempfile::tempdir().unwrap();
    run_pipeline(&synthetic_manifest(again.path()), &strict(), Stage::Pca).unwrap();
    let is_text = |p: &PathBuf| matches!(p.extension().and_then(|e| e.to_str()), Some("json" | "csv"));
    let a = files_under(&run.dir);
    let b = files_under(again.path());
    let texts = a.keys().filter(|p| is_text(p)).count();
    let differing: Vec<&PathBuf> = a.keys().filter(|k| b.get(*k) != a.get(*k)).collect();
    check(
        a.len() == b.len() && differing.is_empty(),
        format!(
            "two strict runs: {} files ({texts} JSON/CSV), {} differ",
            a.len(),
            differing.len()
        ),
    )
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let run_dir = tmp.path().join("synthetic");
    let started = Instant::now();
    run_pipeline(&synthetic_manifest(&run_dir), &strict(), Stage::Pca).expect("synthetic run");
    let run = SyntheticRun { dir: run_dir };
    println!(
        "synthetic run (2 x 50 steps, res 256) finished in {:.1} s",
        started.elapsed().as_secs_f64()
    );

    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict + '_>)> = vec![
        ("mass conservation", Box::new(mass_conservation)),
        ("peel additivity", Box::new(peel_additivity)),
        ("oracle equivalence", Box::new(oracle_equivalence)),
        ("trend (a): rotation CSP area", Box::new(|| rotation_area_trend(&run))),
        ("trend (b): scaling CSP slope", Box::new(|| scaling_slope_trend(&run))),
        ("trend (c): scaling M00 vanishes", Box::new(|| scaling_m00_trend(&run))),
        ("moment hand-sum oracle", Box::new(moment_oracle)),
        ("pca oracle", Box::new(pca_oracle)),
        ("fiber-surface range check", Box::new(fiber_range_check)),
        ("track shape", Box::new(|| track_shape(&run))),
        ("determinism", Box::new(|| determinism(&run))),
    ];
    let mut failed = 0;
    for (name, f) in &criteria {
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match verdict {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
