//! Reference computations shared by the integration tests. Nothing here
//! calls into the library under test.

#![allow(dead_code)]

/// Discretized minimum-jerk problem on one axis.
///
/// The jerk is piecewise linear over `n` equal intervals of `[0, T]`, with
/// nodal values as unknowns. The cost `∫ j²` is the exact mass-matrix
/// quadratic form and the end-state constraints are exact integrals of the
/// hat functions, so the only approximation is the piecewise-linear jerk.
/// `goal` entries that are `None` are left free.
pub fn min_jerk_qp(start: [f64; 3], goal: [Option<f64>; 3], t: f64, n: usize) -> Vec<f64> {
    let h = t / n as f64;
    let nodes = n + 1;
    let [p0, v0, a0] = start;

    // Rows: a(T) - a0 = ∫ j, v(T) - ... = ∫ (T-s) j, p(T) - ... = ∫ (T-s)²/2 j.
    let weights: [&dyn Fn(f64) -> f64; 3] = [&|s| (t - s) * (t - s) / 2.0, &|s| t - s, &|_| 1.0];
    let rhs_full = [
        goal[0].map(|p| p - p0 - v0 * t - a0 * t * t / 2.0),
        goal[1].map(|v| v - v0 - a0 * t),
        goal[2].map(|a| a - a0),
    ];
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs = Vec::new();
    for (w, b) in weights.iter().zip(rhs_full) {
        let Some(b) = b else { continue };
        let mut row = vec![0.0; nodes];
        for k in 0..n {
            let (s0, s1) = (k as f64 * h, (k + 1) as f64 * h);
            let sm = 0.5 * (s0 + s1);
            // Simpson is exact for the cubic integrand (hat × quadratic).
            row[k] += h / 6.0 * (w(s0) * 1.0 + 4.0 * w(sm) * 0.5);
            row[k + 1] += h / 6.0 * (4.0 * w(sm) * 0.5 + w(s1) * 1.0);
        }
        rows.push(row);
        rhs.push(b);
    }

    // Mass matrix of the hat basis: tridiagonal.
    let mut diag = vec![2.0 * h / 3.0; nodes];
    diag[0] = h / 3.0;
    diag[n] = h / 3.0;
    let off = h / 6.0;

    // j = M⁻¹ Aᵀ (A M⁻¹ Aᵀ)⁻¹ b.
    let minv_at: Vec<Vec<f64>> = rows.iter().map(|r| thomas(&diag, off, r)).collect();
    let m = rows.len();
    let mut s = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            s[i][j] = dot(&rows[i], &minv_at[j]);
        }
    }
    let lambda = solve_dense(s, rhs);
    let mut jerk = vec![0.0; nodes];
    for (l, col) in lambda.iter().zip(&minv_at) {
        for (x, c) in jerk.iter_mut().zip(col) {
            *x += l * c;
        }
    }
    jerk
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Symmetric tridiagonal solve with constant off-diagonal.
fn thomas(diag: &[f64], off: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = off / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - off * c[i - 1];
        c[i] = off / m;
        d[i] = (rhs[i] - off * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Least-squares `(c2, c1, c0)` of `c2 τ² + c1 τ + c0` through `ys` at
/// evenly spaced `τ ∈ [0, 1]`.
pub fn fit_quadratic(ys: &[f64]) -> [f64; 3] {
    let n = ys.len() - 1;
    let mut ata = vec![vec![0.0; 3]; 3];
    let mut aty = vec![0.0; 3];
    for (k, y) in ys.iter().enumerate() {
        let tau = k as f64 / n as f64;
        let phi = [tau * tau, tau, 1.0];
        for i in 0..3 {
            aty[i] += phi[i] * y;
            for j in 0..3 {
                ata[i][j] += phi[i] * phi[j];
            }
        }
    }
    let c = solve_dense(ata, aty);
    [c[0], c[1], c[2]]
}

/// Two-sided binomial acceptance band at ~99.99% for `n` trials at rate `p`.
pub fn binomial_band(p: f64, n: usize) -> (f64, f64) {
    let sd = (p * (1.0 - p) / n as f64).sqrt();
    (p - 4.0 * sd, p + 4.0 * sd)
}
