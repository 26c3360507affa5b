//! Reference computations used as test oracles. Nothing here calls into the
//! solver or linear-algebra paths it is checking.
#![allow(dead_code)]

/// Origin strictly inside the convex hull of the rows, exact geometry for
/// one or two columns.
pub fn origin_strictly_inside(rows: &[Vec<f64>]) -> bool {
    match rows[0].len() {
        1 => {
            let lo = rows.iter().map(|r| r[0]).fold(f64::INFINITY, f64::min);
            let hi = rows.iter().map(|r| r[0]).fold(f64::NEG_INFINITY, f64::max);
            lo < 0.0 && hi > 0.0
        }
        2 => {
            let mut angles: Vec<f64> = rows
                .iter()
                .filter(|r| r[0] != 0.0 || r[1] != 0.0)
                .map(|r| r[1].atan2(r[0]))
                .collect();
            if angles.len() < 3 {
                return false;
            }
            angles.sort_by(f64::total_cmp);
            let mut gap: f64 = angles[0] + 2.0 * std::f64::consts::PI - angles[angles.len() - 1];
            for w in angles.windows(2) {
                gap = gap.max(w[1] - w[0]);
            }
            gap < std::f64::consts::PI
        }
        r => panic!("hull oracle handles 1 or 2 columns, got {r}"),
    }
}

/// Solve a small dense system by Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in col..=n {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// Determinant via elimination.
pub fn gauss_det(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m = a.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(col, piv);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    det
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// Brute-force primal maximisation of `(1/m) sum log w` over
/// `{w in simplex : H' w = 0}` by coarse-to-fine grid search on the free
/// coordinates of the constraint polytope. `None` when no strictly positive
/// grid point exists.
pub fn grid_log_el(rows: &[Vec<f64>], resolution: f64) -> Option<f64> {
    let m = rows.len();
    let r = rows[0].len();
    if m < r + 1 {
        return None;
    }
    // equality system A w = b: first row sums to one, then H' w = 0
    let a: Vec<Vec<f64>> = std::iter::once(vec![1.0; m])
        .chain((0..r).map(|k| rows.iter().map(|row| row[k]).collect()))
        .collect();
    let mut b = vec![0.0; r + 1];
    b[0] = 1.0;

    // best-conditioned basis
    let basis = subsets(m, r + 1)
        .into_iter()
        .max_by(|s, t| {
            let ds = gauss_det(&sub(&a, s)).abs();
            let dt = gauss_det(&sub(&a, t)).abs();
            ds.total_cmp(&dt)
        })
        .unwrap();
    let a_b = sub(&a, &basis);
    if gauss_det(&a_b).abs() < 1e-12 {
        return None;
    }
    let free: Vec<usize> = (0..m).filter(|i| !basis.contains(i)).collect();
    let c = gauss_solve(&a_b, &b)?;
    // columns of A_B^{-1} A_F
    let shift: Vec<Vec<f64>> = free
        .iter()
        .map(|&j| gauss_solve(&a_b, &a.iter().map(|row| row[j]).collect::<Vec<_>>()).unwrap())
        .collect();

    let objective = |f: &[f64]| -> f64 {
        let mut total = 0.0;
        for &v in f {
            if v <= 0.0 {
                return f64::NEG_INFINITY;
            }
            total += v.ln();
        }
        for (row, &ci) in c.iter().enumerate() {
            let w = ci - f.iter().zip(&shift).map(|(fj, col)| fj * col[row]).sum::<f64>();
            if w <= 0.0 {
                return f64::NEG_INFINITY;
            }
            total += w.ln();
        }
        total
    };

    let d = free.len();
    if d == 0 {
        let v = objective(&[]);
        return v.is_finite().then_some(v / m as f64);
    }
    let mut points_per_dim: usize = match d {
        1 => 201,
        2 => 41,
        3 => 13,
        _ => 7,
    };
    let mut center = vec![0.5; d];
    let mut half = 0.5;
    let mut best = f64::NEG_INFINITY;
    let mut first = true;
    while half > resolution * 1e-3 {
        let mut level_best = f64::NEG_INFINITY;
        let mut level_arg = center.clone();
        let lo: Vec<f64> = center.iter().map(|c| (c - half).max(0.0)).collect();
        let hi: Vec<f64> = center.iter().map(|c| (c + half).min(1.0)).collect();
        let mut idx = vec![0usize; d];
        let mut f = vec![0.0; d];
        loop {
            for k in 0..d {
                f[k] = lo[k] + (hi[k] - lo[k]) * idx[k] as f64 / (points_per_dim - 1) as f64;
            }
            let v = objective(&f);
            if v > level_best {
                level_best = v;
                level_arg.copy_from_slice(&f);
            }
            let mut k = 0;
            while k < d {
                idx[k] += 1;
                if idx[k] < points_per_dim {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == d {
                break;
            }
        }
        if first && level_best == f64::NEG_INFINITY {
            // sliver polytope missed by the coarse grid: refine the start
            if points_per_dim.pow(d as u32) > 4_000_000 {
                return None;
            }
            points_per_dim = 2 * points_per_dim - 1;
            continue;
        }
        first = false;
        if level_best > best {
            best = level_best;
            center = level_arg;
        }
        let spacing = 2.0 * half / (points_per_dim - 1) as f64;
        half = (2.0 * spacing).min(half * 0.75);
    }
    best.is_finite().then_some(best / m as f64)
}

fn sub(a: &[Vec<f64>], cols: &[usize]) -> Vec<Vec<f64>> {
    a.iter()
        .map(|row| cols.iter().map(|&j| row[j]).collect())
        .collect()
}

/// Multivariate normal log density with covariance inverted and determinant
/// taken by Gaussian elimination.
pub fn mvn_log_density(x: &[f64], mean: &[f64], cov: &[Vec<f64>]) -> f64 {
    let r = x.len();
    let diff: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    let sol = gauss_solve(cov, &diff).unwrap();
    let quad: f64 = diff.iter().zip(&sol).map(|(a, b)| a * b).sum();
    let det = gauss_det(cov);
    -0.5 * (r as f64) * (2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln() - 0.5 * quad
}

/// Sample mean and unbiased covariance by explicit double loops.
pub fn mean_and_cov(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = rows.len();
    let r = rows[0].len();
    let mut mean = vec![0.0; r];
    for row in rows {
        for k in 0..r {
            mean[k] += row[k] / m as f64;
        }
    }
    let mut cov = vec![vec![0.0; r]; r];
    for row in rows {
        for a in 0..r {
            for b in 0..r {
                cov[a][b] += (row[a] - mean[a]) * (row[b] - mean[b]) / (m as f64 - 1.0);
            }
        }
    }
    (mean, cov)
}

/// Least-squares slope matrix (regressors x responses) from the normal
/// equations of the centred data.
pub fn normal_equation_slopes(x: &[Vec<f64>], y: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = x.len();
    let q = x[0].len();
    let p = y[0].len();
    let xm: Vec<f64> = (0..q).map(|k| x.iter().map(|r| r[k]).sum::<f64>() / n as f64).collect();
    let ym: Vec<f64> = (0..p).map(|k| y.iter().map(|r| r[k]).sum::<f64>() / n as f64).collect();
    let mut xtx = vec![vec![0.0; q]; q];
    let mut xty = vec![vec![0.0; p]; q];
    for (xr, yr) in x.iter().zip(y) {
        for a in 0..q {
            for b in 0..q {
                xtx[a][b] += (xr[a] - xm[a]) * (xr[b] - xm[b]);
            }
            for c in 0..p {
                xty[a][c] += (xr[a] - xm[a]) * (yr[c] - ym[c]);
            }
        }
    }
    let mut slopes = vec![vec![0.0; p]; q];
    for c in 0..p {
        let col: Vec<f64> = (0..q).map(|a| xty[a][c]).collect();
        let sol = gauss_solve(&xtx, &col).unwrap();
        for a in 0..q {
            slopes[a][c] = sol[a];
        }
    }
    slopes
}
