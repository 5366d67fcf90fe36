//! Brute-force oracles for the test suites.
//!
//! Everything here is deliberately independent of the library's fitting
//! routes: the eigensolver is a cyclic Jacobi iteration, pseudoinverses are
//! assembled from its spectrum, and covariance matrices are formed
//! explicitly. Only meant for small instances.

use nalgebra::{DMatrix, DVector};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns eigenvalues descending with their eigenvectors as columns.
/// Quadratic convergence makes the sweep cap generous for `n <= 100`.
pub fn jacobi_eigh(mat: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = mat.nrows();
    assert_eq!(n, mat.ncols(), "jacobi_eigh needs a square matrix");
    let mut a = mat.clone();
    let mut v: DMatrix<f64> = DMatrix::identity(n, n);
    let scale = a.amax().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(a[(i, j)].abs());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    1.0 / (theta - (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap());
    let mut values = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = a[(src, src)];
        vectors.set_column(dst, &v.column(src));
    }
    (values, vectors)
}

/// Moore-Penrose pseudoinverse of a symmetric PSD matrix through its Jacobi
/// spectrum, dropping eigenvalues at or below `lambda_1 * n * 2^-52`.
pub fn pinv_psd(mat: &DMatrix<f64>) -> DMatrix<f64> {
    let n = mat.nrows();
    let (values, vectors) = jacobi_eigh(mat);
    let cutoff = values[0].max(0.0) * n as f64 * f64::EPSILON;
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        if values[i] > cutoff {
            let u = vectors.column(i);
            out += u * u.transpose() / values[i];
        }
    }
    out
}

/// Centers the columns of a matrix; returns `(centered, mean)`.
pub fn center_columns(mat: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let mean = mat.column_mean();
    let mut out = mat.clone();
    for mut col in out.column_iter_mut() {
        col -= &mean;
    }
    (out, mean)
}

/// Explicit sample covariance `X_mu X_mu^T / (m - 1)`.
pub fn explicit_covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (centered, _) = center_columns(x);
    let m = x.ncols();
    (&centered * centered.transpose()) / (m as f64 - 1.0)
}

/// Explicit enlarged block matrix of the joint formulation for centered
/// data:
/// top rows `[(1/m) X X^T D, 0]`, bottom rows `[(1/m) P X^T D, 0]`.
pub fn enlarged_block_matrix(
    x_centered: &DMatrix<f64>,
    p_centered: &DMatrix<f64>,
    diag: &DVector<f64>,
) -> DMatrix<f64> {
    let l = x_centered.nrows();
    let k = p_centered.nrows();
    let m = x_centered.ncols() as f64;
    let mut xt_d = x_centered.transpose();
    for (j, mut col) in xt_d.column_iter_mut().enumerate() {
        col *= diag[j];
    }
    let c = (x_centered * &xt_d) / m;
    let c_p = (p_centered * &xt_d) / m;
    let mut out = DMatrix::zeros(l + k, l + k);
    out.view_mut((0, 0), (l, l)).copy_from(&c);
    out.view_mut((l, 0), (k, l)).copy_from(&c_p);
    out
}

/// All eigenvalues of a general square matrix via the dense complex solver.
pub fn general_eigenvalues(mat: &DMatrix<f64>) -> Vec<nalgebra::Complex<f64>> {
    mat.clone().complex_eigenvalues().iter().copied().collect()
}

/// Random full-rank instance: `l x m` data and `k x m` parameters with
/// entries uniform in the given ranges.
pub fn random_instance(l: usize, k: usize, m: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dx = Uniform::new(-1.0f64, 1.0).unwrap();
    let dp = Uniform::new(0.0f64, 10.0).unwrap();
    let x = DMatrix::from_fn(l, m, |_, _| dx.sample(&mut rng));
    let p = DMatrix::from_fn(k, m, |_, _| dp.sample(&mut rng));
    (x, p)
}

/// Random exact-rank instance: columns are combinations of `rank` fixed
/// directions with coefficients in `[0, 10)`; parameters are those
/// coefficients, so estimation has an exact linear solution.
pub fn random_low_rank_instance(
    l: usize,
    rank: usize,
    m: usize,
    seed: u64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dir = Uniform::new(-1.0f64, 1.0).unwrap();
    let coeff = Uniform::new(0.0f64, 10.0).unwrap();
    let basis = DMatrix::from_fn(l, rank, |_, _| dir.sample(&mut rng));
    let p = DMatrix::from_fn(rank, m, |_, _| coeff.sample(&mut rng));
    (&basis * &p, p)
}
