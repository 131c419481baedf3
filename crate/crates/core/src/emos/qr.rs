//! Least squares by Householder QR with column pivoting.
//!
//! Columns are pivoted by largest remaining norm, so the diagonal of `R` is
//! non-increasing in magnitude. Columns whose pivot falls below
//! `rank_tol * |R[0][0]|` are treated as dependent and get coefficient zero
//! (the basic solution).

/// Solution of `min ||X b - y||`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstsqSolution {
    /// Coefficients in the original column order.
    pub coefficients: Vec<f64>,
    pub rank: usize,
}

/// Solves the least-squares problem for a column-major `m x n` matrix.
///
/// Requires `m >= n >= 1` and every column of length `m`.
pub fn lstsq_pivoted(columns: &[Vec<f64>], y: &[f64], rank_tol: f64) -> LstsqSolution {
    let n = columns.len();
    let m = y.len();
    assert!(
        n >= 1 && m >= n,
        "lstsq needs m >= n >= 1 (m = {m}, n = {n})"
    );
    assert!(columns.iter().all(|c| c.len() == m));

    let mut a: Vec<Vec<f64>> = columns.to_vec();
    let mut b = y.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut diag = vec![0.0; n];

    for k in 0..n {
        // Pivot: remaining column with the largest norm over rows k..m.
        let norm2 = |col: &Vec<f64>| col[k..].iter().map(|v| v * v).sum::<f64>();
        let (p, _) = (k..n)
            .map(|j| (j, norm2(&a[j])))
            .fold(
                (k, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        a.swap(k, p);
        perm.swap(k, p);

        let alpha = norm2(&a[k]).sqrt();
        if alpha == 0.0 {
            diag[k] = 0.0;
            continue;
        }
        // v = x + sign(x0) ||x|| e0, stored in place of column k.
        let x0 = a[k][k];
        let beta = if x0 >= 0.0 { -alpha } else { alpha };
        a[k][k] = x0 - beta;
        let vnorm2: f64 = a[k][k..].iter().map(|v| v * v).sum();
        diag[k] = beta;
        if vnorm2 == 0.0 {
            continue;
        }
        let (head, tail) = a.split_at_mut(k + 1);
        let v = &head[k][k..];
        for col in tail.iter_mut() {
            reflect(v, vnorm2, &mut col[k..]);
        }
        reflect(v, vnorm2, &mut b[k..]);
    }

    let r00 = diag[0].abs();
    let rank = if r00 == 0.0 {
        0
    } else {
        diag.iter().take_while(|d| d.abs() > rank_tol * r00).count()
    };

    // Back substitution on the leading rank x rank block of R.
    let mut z = vec![0.0; n];
    for i in (0..rank).rev() {
        let mut s = b[i];
        for (j, zj) in z.iter().enumerate().take(rank).skip(i + 1) {
            s -= a[j][i] * zj;
        }
        z[i] = s / diag[i];
    }

    let mut coefficients = vec![0.0; n];
    for (k, &orig) in perm.iter().enumerate() {
        coefficients[orig] = z[k];
    }
    LstsqSolution { coefficients, rank }
}

fn reflect(v: &[f64], vnorm2: f64, x: &mut [f64]) {
    let dot: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    let s = 2.0 * dot / vnorm2;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= s * vi;
    }
}
