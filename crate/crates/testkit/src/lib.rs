//! Reference implementations that the production code is checked against.
//! They favour obviousness over speed and share no code with `bimoment-core`.

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns eigenvalues in descending order and the matching unit
/// eigenvectors, each flipped so its largest-magnitude entry is positive.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| m[i][i] * m[i][i]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q] == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // m <- J^T m J with the rotation in the (p, q) plane
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }

    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|j| {
            let mut col: Vec<f64> = (0..n).map(|i| v[i][j]).collect();
            let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            col.iter_mut().for_each(|x| *x /= norm);
            let mut big = 0;
            for i in 1..n {
                if col[i].abs() > col[big].abs() {
                    big = i;
                }
            }
            if col[big] < 0.0 {
                col.iter_mut().for_each(|x| *x = -*x);
            }
            (m[j][j], col)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    pairs.into_iter().unzip()
}

/// Sample covariance (divisor `n - 1`) of row vectors.
pub fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d)
        .map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / n as f64)
        .collect();
    (0..d)
        .map(|a| {
            (0..d)
                .map(|b| rows.iter().map(|r| (r[a] - mean[a]) * (r[b] - mean[b])).sum::<f64>() / (n as f64 - 1.0))
                .collect()
        })
        .collect()
}

/// `[M00, M20, M11, M02]` of `log(1 + m / bin_area)` by explicit summation
/// over bins of mass `m`, with bin-center coordinates `(i + 1/2) / R` in the
/// unit square. `mass[row][col]` is indexed f2-major, so `col` runs along f1.
pub fn log_moment_oracle(mass: &[Vec<f64>], bin_area: f64) -> [f64; 4] {
    let density = mass;
    let r2 = density.len();
    let r1 = density[0].len();
    let mut out = [0.0; 4];
    let powers = [(0, 0), (2, 0), (1, 1), (0, 2)];
    for (k, &(i, j)) in powers.iter().enumerate() {
        let mut total = 0.0;
        for (row, line) in density.iter().enumerate() {
            for (col, &d) in line.iter().enumerate() {
                let x = (2 * col + 1) as f64 / (2 * r1) as f64;
                let y = (2 * row + 1) as f64 / (2 * r2) as f64;
                total += x.powi(i) * y.powi(j) * (1.0 + d / bin_area).ln();
            }
        }
        out[k] = total;
    }
    assert!(r2 > 0);
    out
}
