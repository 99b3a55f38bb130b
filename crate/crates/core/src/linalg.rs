//! Thin helpers over `faer` shared by the estimator, optimizers and the
//! spectral machinery.

use faer::linalg::matmul::triangular::{matmul, BlockStructure};
use faer::linalg::solvers::{Llt, Solve};
use faer::{Accum, Col, ColRef, Mat, MatRef, Par, Side};

use crate::error::{Result, VmcError};

/// Relative jitter added to the diagonal when a Cholesky factorization fails.
pub const JITTER_SCALE: f64 = 1e-12;

/// Cholesky factorization of a symmetric positive definite matrix.
///
/// On failure a diagonal shift of `1e-12 * trace / n` is added once.
pub fn spd_factor(a: MatRef<'_, f64>) -> Result<Llt<f64>> {
    if let Ok(llt) = a.llt(Side::Lower) {
        return Ok(llt);
    }
    let n = a.nrows();
    let trace: f64 = (0..n).map(|i| a[(i, i)]).sum();
    let shift = JITTER_SCALE * trace.abs().max(f64::MIN_POSITIVE) / n.max(1) as f64;
    let mut shifted = a.to_owned();
    for i in 0..n {
        shifted[(i, i)] += shift;
    }
    shifted.llt(Side::Lower).map_err(|_| VmcError::Factorization)
}

pub fn spd_solve(a: MatRef<'_, f64>, rhs: ColRef<'_, f64>) -> Result<Col<f64>> {
    if a.nrows() != rhs.nrows() {
        return Err(VmcError::DimensionMismatch {
            expected: a.nrows(),
            actual: rhs.nrows(),
            context: "spd_solve right-hand side",
        });
    }
    Ok(spd_factor(a)?.solve(rhs))
}

/// `λI + a`, for square `a`.
pub fn shifted(a: MatRef<'_, f64>, lambda: f64) -> Mat<f64> {
    let mut out = a.to_owned();
    for i in 0..out.nrows() {
        out[(i, i)] += lambda;
    }
    out
}

/// Symmetric eigendecomposition with eigenvalues in nonincreasing order.
///
/// Each eigenvector is normalized so that its largest-magnitude entry is
/// positive.
pub fn sym_eigen_desc(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| VmcError::EigenSolver)?;
    let n = a.nrows();
    let s = evd.S().column_vector();
    let u = evd.U();
    let values: Vec<f64> = (0..n).rev().map(|i| s[i]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(VmcError::EigenSolver);
    }
    let mut vectors = Mat::<f64>::zeros(n, n);
    for (dst, src) in (0..n).rev().enumerate() {
        let col = u.col(src);
        let mut pivot = 0.0_f64;
        for i in 0..n {
            if col[i].abs() > pivot.abs() {
                pivot = col[i];
            }
        }
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, dst)] = sign * col[i];
        }
    }
    Ok((values, vectors))
}

/// Orthonormal basis of the row space of `a` (columns of the returned matrix),
/// using the relative rank rule `σ > max(m, n) · ε · σ_max`.
pub fn row_space_basis(a: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let svd = a.thin_svd().map_err(|_| VmcError::EigenSolver)?;
    let s = svd.S().column_vector();
    let k = s.nrows();
    if k == 0 {
        return Ok(Mat::zeros(a.ncols(), 0));
    }
    let tol = a.nrows().max(a.ncols()) as f64 * f64::EPSILON * s[0];
    let rank = (0..k).filter(|&i| s[i] > tol).count();
    let v = svd.V();
    Ok(Mat::from_fn(a.ncols(), rank, |i, j| v[(i, j)]))
}

/// `a aᵀ`, computing one triangle and mirroring it.
pub fn gram(a: MatRef<'_, f64>) -> Mat<f64> {
    let n = a.nrows();
    let mut out = Mat::<f64>::zeros(n, n);
    matmul(
        out.as_mut(),
        BlockStructure::TriangularLower,
        Accum::Replace,
        a,
        BlockStructure::Rectangular,
        a.transpose(),
        BlockStructure::Rectangular,
        1.0,
        Par::Seq,
    );
    for j in 1..n {
        for i in 0..j {
            out[(i, j)] = out[(j, i)];
        }
    }
    out
}

pub fn frobenius_norm(a: MatRef<'_, f64>) -> f64 {
    a.norm_l2()
}

pub fn col_from_slice(values: &[f64]) -> Col<f64> {
    Col::from_fn(values.len(), |i| values[i])
}

pub fn col_to_vec(c: ColRef<'_, f64>) -> Vec<f64> {
    c.iter().copied().collect()
}
