//! Internal dense linear-algebra helpers shared by the fitting routines.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative spectral cutoff below which eigenvalues are treated as rank-null:
/// `lambda_1 * l * 2^-52`.
pub(crate) fn rank_cutoff(lambda_1: f64, l: usize) -> f64 {
    lambda_1 * l as f64 * f64::EPSILON
}

/// Number of leading eigenvalues strictly above the rank cutoff.
pub(crate) fn rank_above_cutoff(eigenvalues: &DVector<f64>, l: usize) -> usize {
    if eigenvalues.is_empty() {
        return 0;
    }
    let cutoff = rank_cutoff(eigenvalues[0], l);
    eigenvalues.iter().take_while(|&&ev| ev > cutoff).count()
}

/// Flips each column so that its largest-magnitude entry is positive, the
/// first such entry deciding on ties. Zero columns are left alone.
pub(crate) fn canonicalize_column_signs(mat: &mut DMatrix<f64>) {
    for mut col in mat.column_iter_mut() {
        let mut best = 0usize;
        for i in 1..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Thin left singular decomposition of an `l x m` matrix.
///
/// Returns `(u, sigma)` with `u` of size `l x q`, `sigma` descending and
/// `q = min(l, m - 1)`; the trailing direction is dropped because centered
/// data has rank at most `m - 1`. Column signs follow the canonical rule.
///
/// The matrix is first reduced by a Householder QR of whichever side is
/// tall, so the iterative part always runs on a square factor.
pub(crate) fn thin_left_svd(mat: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (l, m) = mat.shape();
    let q = l.min(m.saturating_sub(1));

    let (mut u, sigma) = if l <= m {
        // mat^T = Q R; left singular vectors of mat are those of R^T.
        let qr = mat.transpose().qr();
        svd_u(qr.unpack_r().transpose())?
    } else {
        // mat = Q R; left singular vectors are Q times those of R.
        let (q_mat, r) = mat.clone().qr().unpack();
        let (u_small, sigma) = svd_u(r)?;
        (q_mat * u_small, sigma)
    };

    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).expect("singular values are finite"));
    let mut u_sorted = DMatrix::zeros(l, q);
    let mut sigma_sorted = DVector::zeros(q);
    for (dst, &src) in order.iter().take(q).enumerate() {
        u_sorted.set_column(dst, &u.column(src));
        sigma_sorted[dst] = sigma[src];
    }
    // The bidiagonal iteration loses orthogonality between null-space
    // vectors on heavily rank-deficient input; one Householder pass restores
    // it and leaves the leading, already-orthonormal columns in place.
    u = u_sorted.qr().q();
    canonicalize_column_signs(&mut u);
    Ok((u, sigma_sorted))
}

fn svd_u(mat: DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let svd = nalgebra::linalg::SVD::try_new(mat, true, false, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("singular value decomposition did not converge".into()))?;
    let u = svd
        .u
        .ok_or_else(|| Error::Numeric("singular value decomposition returned no basis".into()))?;
    Ok((u, svd.singular_values))
}

/// Eigendecomposition of a symmetric matrix, eigenvalues descending and
/// clamped to be non-negative, eigenvector signs canonical.
///
/// Intended for positive semi-definite inputs; eigenvalues more negative
/// than round-off allows are reported as a numeric error.
pub(crate) fn symmetric_eigen_desc(mat: DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = mat.nrows();
    let eig = nalgebra::linalg::SymmetricEigen::try_new(mat, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("symmetric eigendecomposition did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues are finite")
    });

    let mut values = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eig.eigenvalues[src];
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }

    let scale = values[0].abs().max(1.0);
    if values[n - 1] < -1e-8 * scale {
        return Err(Error::Numeric(format!(
            "covariance eigendecomposition produced eigenvalue {:.3e}, far below zero",
            values[n - 1]
        )));
    }
    values.apply(|v| *v = v.max(0.0));
    canonicalize_column_signs(&mut vectors);
    Ok((values, vectors))
}

/// Row-mean of a matrix, i.e. the mean of its columns.
pub(crate) fn column_mean(mat: &DMatrix<f64>) -> DVector<f64> {
    mat.column_mean()
}

/// Subtracts `mean` from every column.
pub(crate) fn subtract_column_mean(mat: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut out = mat.clone();
    for mut col in out.column_iter_mut() {
        col -= mean;
    }
    out
}

pub(crate) fn all_finite(mat: &DMatrix<f64>) -> bool {
    mat.iter().all(|v| v.is_finite())
}
