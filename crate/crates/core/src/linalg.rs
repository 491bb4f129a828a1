//! Small dense vector helpers and SVD-based subspace computations.
//!
//! Every matrix here is desk-sized (a handful of rows and columns), so rows are
//! kept as plain `Vec<f64>` and nalgebra is only pulled in for factorizations.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value cutoff used for every rank decision.
pub const RANK_TOL: f64 = 1e-10;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// y += alpha * x
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `basis` holds columns; returns `sum_j coeffs[j] * basis[j]`.
pub fn combine(basis: &[Vec<f64>], coeffs: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (b, &c) in basis.iter().zip(coeffs) {
        axpy(c, b, &mut out);
    }
    out
}

/// Coordinates of `v` in the (orthonormal) `basis`.
pub fn coords(basis: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    basis.iter().map(|b| dot(b, v)).collect()
}

/// Orthonormal basis of `{v in R^n : <row, v> = 0 for every row}`.
///
/// The rank is decided by singular values below `rel_tol` times the largest
/// one. Each basis vector is sign-normalized so its largest-magnitude entry is
/// positive, which keeps outputs stable across calls.
pub fn null_space(rows: &[Vec<f64>], n: usize, rel_tol: f64) -> Vec<Vec<f64>> {
    if n == 0 {
        return Vec::new();
    }
    if rows.is_empty() {
        return (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect();
    }
    let m = rows.len().max(n);
    let mut mat = DMatrix::<f64>::zeros(m, n);
    for (i, row) in rows.iter().enumerate() {
        debug_assert_eq!(row.len(), n);
        for (j, &v) in row.iter().enumerate() {
            mat[(i, j)] = v;
        }
    }
    let svd = mat.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = rel_tol * sigma_max;
    let mut basis = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if sigma_max == 0.0 || s <= cutoff {
            let mut v: Vec<f64> = v_t.row(k).iter().cloned().collect();
            sign_normalize(&mut v);
            basis.push(v);
        }
    }
    basis
}

fn sign_normalize(v: &mut [f64]) {
    let mut best = 0usize;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Orthonormal basis of the sum-zero hyperplane in R^n.
pub fn sum_zero_basis(n: usize) -> Vec<Vec<f64>> {
    null_space(&[vec![1.0; n]], n, RANK_TOL)
}

/// Orthonormalizes `vectors` (modified Gram-Schmidt, twice), dropping any that
/// are dependent on the earlier ones up to `tol`.
pub fn orthonormalize(vectors: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let scale = norm(v);
        if scale == 0.0 {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let c = dot(q, &w);
                axpy(-c, q, &mut w);
            }
        }
        let nw = norm(&w);
        if nw > tol * scale {
            out.push(scaled(&w, 1.0 / nw));
        }
    }
    out
}

/// Removes from `v` its component in the span of the orthonormal `basis`.
pub fn reject(basis: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let mut w = v.to_vec();
    for q in basis {
        let c = dot(q, &w);
        axpy(-c, q, &mut w);
    }
    w
}

/// Minimum-norm least-squares solution of `mat * x = rhs` with singular values
/// below `rel_tol * sigma_max` treated as zero.
pub fn pinv_solve(mat: &[Vec<f64>], rhs: &[f64], rel_tol: f64) -> Vec<f64> {
    let rows = mat.len();
    let cols = mat.first().map_or(0, |r| r.len());
    if rows == 0 || cols == 0 {
        return vec![0.0; cols];
    }
    let a = DMatrix::from_fn(rows, cols, |i, j| mat[i][j]);
    let b = DVector::from_column_slice(rhs);
    let svd = a.svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return vec![0.0; cols];
    }
    let x = svd
        .solve(&b, rel_tol * sigma_max)
        .expect("both singular vector sets were computed");
    x.iter().cloned().collect()
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue(mat: &[Vec<f64>]) -> f64 {
    let n = mat.len();
    if n == 0 {
        return 0.0;
    }
    let a = DMatrix::from_fn(n, n, |i, j| mat[i][j]);
    a.symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Eigenvalues and unit eigenvectors of a symmetric matrix, in no particular order.
pub fn symmetric_eigen(mat: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = mat.len();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let a = DMatrix::from_fn(n, n, |i, j| mat[i][j]);
    let eig = a.symmetric_eigen();
    let vectors = (0..n)
        .map(|k| eig.eigenvectors.column(k).iter().cloned().collect())
        .collect();
    (eig.eigenvalues.iter().cloned().collect(), vectors)
}
