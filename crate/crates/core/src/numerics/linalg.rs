//! Dense symmetric linear algebra for small covariance matrices.

use nalgebra::DMatrix;

use crate::error::{OverlapError, Result};

/// Largest absolute asymmetry `|m_ij - m_ji|`.
fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let p = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..p {
        for j in (i + 1)..p {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn check_symmetric(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(OverlapError::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(OverlapError::LinearAlgebra("matrix has non-finite entries".into()));
    }
    let scale = m.amax().max(1.0);
    let asym = asymmetry(m);
    if asym > tol * scale {
        return Err(OverlapError::LinearAlgebra(format!(
            "matrix is not symmetric (max asymmetry {asym:e})"
        )));
    }
    Ok(())
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order with matching eigenvector columns.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    check_symmetric(m, 1e-10)?;
    let p = m.nrows();
    // symmetrize exactly before rotating
    let mut a = (m + m.transpose()) * 0.5;
    let mut v = DMatrix::<f64>::identity(p, p);
    let total: f64 = a.iter().map(|x| x * x).sum();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..p {
            for j in (i + 1)..p {
                off += 2.0 * a[(i, j)] * a[(i, j)];
            }
        }
        if off <= 1e-30 * total || off == 0.0 {
            break;
        }
        for i in 0..p {
            for j in (i + 1)..p {
                let aij = a[(i, j)];
                if aij.abs() < f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(j, j)] - a[(i, i)]) / (2.0 * aij);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..p {
                    let ari = a[(r, i)];
                    let arj = a[(r, j)];
                    a[(r, i)] = c * ari - s * arj;
                    a[(r, j)] = s * ari + c * arj;
                }
                for r in 0..p {
                    let air = a[(i, r)];
                    let ajr = a[(j, r)];
                    a[(i, r)] = c * air - s * ajr;
                    a[(j, r)] = s * air + c * ajr;
                }
                for r in 0..p {
                    let vri = v[(r, i)];
                    let vrj = v[(r, j)];
                    v[(r, i)] = c * vri - s * vrj;
                    v[(r, j)] = s * vri + c * vrj;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| a[(y, y)].total_cmp(&a[(x, x)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(p, p, |r, c| v[(r, order[c])]);
    Ok((values, vectors))
}

/// `V diag(f(lambda)) V^T`.
pub(crate) fn reconstruct(values: &[f64], vectors: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let p = values.len();
    let mut out = DMatrix::<f64>::zeros(p, p);
    for (c, &lambda) in values.iter().enumerate() {
        let w = f(lambda);
        if w == 0.0 {
            continue;
        }
        let col = vectors.column(c);
        for i in 0..p {
            for j in 0..p {
                out[(i, j)] += w * col[i] * col[j];
            }
        }
    }
    out
}

/// Moore-Penrose inverse of a symmetric matrix. Eigenvalues with magnitude
/// at or below `rel_tol * max |eigenvalue|` are treated as zero; returns the
/// inverse and the number of retained eigenvalues.
pub fn sym_pseudoinverse(m: &DMatrix<f64>, rel_tol: f64) -> Result<(DMatrix<f64>, usize)> {
    let (values, vectors) = symmetric_eigen(m)?;
    Ok(pseudoinverse_from_eigen(&values, &vectors, rel_tol))
}

pub(crate) fn pseudoinverse_from_eigen(
    values: &[f64],
    vectors: &DMatrix<f64>,
    rel_tol: f64,
) -> (DMatrix<f64>, usize) {
    let max = values.iter().fold(0.0_f64, |a, &l| a.max(l.abs()));
    let cutoff = rel_tol * max;
    let rank = values.iter().filter(|&&l| max > 0.0 && l.abs() > cutoff).count();
    let inv = reconstruct(values, vectors, |l| {
        if max > 0.0 && l.abs() > cutoff {
            1.0 / l
        } else {
            0.0
        }
    });
    (inv, rank)
}

fn try_cholesky(m: &DMatrix<f64>, jitter: f64) -> Option<DMatrix<f64>> {
    let p = m.nrows();
    let mut l = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        let mut diag = m[(j, j)] + jitter;
        for c in 0..j {
            diag -= l[(j, c)] * l[(j, c)];
        }
        if diag <= 0.0 || !diag.is_finite() {
            return None;
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..p {
            let mut v = m[(i, j)];
            for c in 0..j {
                v -= l[(i, c)] * l[(j, c)];
            }
            l[(i, j)] = v / ljj;
        }
    }
    Some(l)
}

/// Lower Cholesky factor of a symmetric PSD matrix. On failure the diagonal
/// is jittered by `{1e-12, 1e-10, 1e-8} * trace / p` in turn. The all-zero
/// matrix factors as zero.
pub fn cholesky_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(m, 1e-10)?;
    let p = m.nrows();
    if m.iter().all(|&v| v == 0.0) {
        return Ok(DMatrix::zeros(p, p));
    }
    let scale = m.trace() / p as f64;
    for eps in [0.0, 1e-12, 1e-10, 1e-8] {
        if let Some(l) = try_cholesky(m, eps * scale) {
            return Ok(l);
        }
    }
    Err(OverlapError::LinearAlgebra(
        "matrix is not positive semidefinite (Cholesky failed after jitter)".into(),
    ))
}
