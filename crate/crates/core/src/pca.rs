//! Vectorization of point clouds and the standard PCA pipeline: centering,
//! spectral model, projection, reconstruction, and the CRV quality measure.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::linalg;

/// Column-stacked cloud coordinates `(x_1..x_n, y_1..y_n, z_1..z_n)`.
pub type DesignVector = DVector<f64>;

/// Principal-component scores of one design vector.
pub type ScoreVector = DVector<f64>;

/// Stacks a cloud's coordinate columns below each other.
pub fn vectorize(cloud: &PointCloud) -> DesignVector {
    let n = cloud.n_points();
    let mut v = DVector::zeros(3 * n);
    for (i, p) in cloud.points().iter().enumerate() {
        v[i] = p[0];
        v[n + i] = p[1];
        v[2 * n + i] = p[2];
    }
    v
}

/// Exact inverse of [`vectorize`].
pub fn unvectorize(v: &DesignVector) -> Result<PointCloud> {
    if !v.len().is_multiple_of(3) {
        return Err(Error::Shape(format!(
            "design vector length {} is not divisible by 3",
            v.len()
        )));
    }
    let n = v.len() / 3;
    let points = (0..n).map(|i| [v[i], v[n + i], v[2 * n + i]]).collect();
    PointCloud::new(points)
}

/// `l x m` matrix whose columns are the design vectors of one class.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    data: DMatrix<f64>,
}

impl DataMatrix {
    /// Builds the matrix from sample columns; at least two are required.
    pub fn from_columns(columns: &[DesignVector]) -> Result<Self> {
        if columns.len() < 2 {
            return Err(Error::Shape(format!(
                "data matrix needs at least 2 columns, got {}",
                columns.len()
            )));
        }
        let l = columns[0].len();
        if l == 0 {
            return Err(Error::Shape("data matrix columns must be non-empty".into()));
        }
        if let Some(bad) = columns.iter().find(|c| c.len() != l) {
            return Err(Error::Shape(format!(
                "data matrix columns disagree in length: {} vs {l}",
                bad.len()
            )));
        }
        let mut data = DMatrix::zeros(l, columns.len());
        for (j, col) in columns.iter().enumerate() {
            data.set_column(j, col);
        }
        Ok(Self { data })
    }

    pub fn from_matrix(data: DMatrix<f64>) -> Result<Self> {
        if data.ncols() < 2 || data.nrows() == 0 {
            return Err(Error::Shape(format!(
                "data matrix must be at least 1 x 2, got {} x {}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(Self { data })
    }

    /// Design-vector length `l`.
    pub fn vector_len(&self) -> usize {
        self.data.nrows()
    }

    /// Sample count `m`.
    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn column(&self, j: usize) -> DesignVector {
        self.data.column(j).clone_owned()
    }
}

/// Subtracts the row-wise mean from every column; returns the centered
/// matrix and the mean vector.
pub fn center(x: &DataMatrix) -> (DataMatrix, DesignVector) {
    let mean = linalg::column_mean(x.matrix());
    let centered = linalg::subtract_column_mean(x.matrix(), &mean);
    (DataMatrix { data: centered }, mean)
}

/// Fitted PCA model: mean, descending non-negative eigenvalues, and
/// column-orthonormal eigenvectors.
///
/// All `q = min(l, m - 1)` computed eigenpairs are kept, including the
/// numerically null trailing ones; [`PcaModel::rank`] counts the leading
/// eigenvalues above the machine-precision cutoff, and the estimation layer
/// never inverts eigenvalues below it.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: DesignVector,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    m: usize,
    // content hash, computed once; estimation checks it per call
    fingerprint: u64,
}

impl PcaModel {
    /// Assembles a model from parts, validating the spectral invariants.
    pub fn from_parts(
        mean: DesignVector,
        eigenvalues: DVector<f64>,
        eigenvectors: DMatrix<f64>,
        m: usize,
    ) -> Result<Self> {
        let l = mean.len();
        let q = eigenvalues.len();
        if eigenvectors.nrows() != l || eigenvectors.ncols() != q {
            return Err(Error::Shape(format!(
                "eigenvector matrix is {} x {}, expected {l} x {q}",
                eigenvectors.nrows(),
                eigenvectors.ncols()
            )));
        }
        if m < 2 {
            return Err(Error::Domain(format!("model sample count must be >= 2, got {m}")));
        }
        if q > l.min(m - 1) {
            return Err(Error::Shape(format!(
                "component count {q} exceeds min(l, m - 1) = {}",
                l.min(m - 1)
            )));
        }
        for i in 0..q {
            if !(eigenvalues[i] >= 0.0) {
                return Err(Error::Numeric(format!(
                    "eigenvalue {i} is {}, expected non-negative",
                    eigenvalues[i]
                )));
            }
            if i > 0 && eigenvalues[i] > eigenvalues[i - 1] {
                return Err(Error::Numeric("eigenvalues are not sorted descending".into()));
            }
        }
        let gram = eigenvectors.transpose() * &eigenvectors;
        let dev = (gram - DMatrix::identity(q, q)).amax();
        if !(dev < 1e-10) {
            return Err(Error::Numeric(format!(
                "eigenvectors deviate from orthonormality by {dev:.3e}"
            )));
        }
        let mut hash = Fnv1a::new();
        hash.write_u64(l as u64);
        hash.write_u64(q as u64);
        hash.write_u64(m as u64);
        for v in mean.iter().chain(eigenvalues.iter()) {
            hash.write_u64(v.to_bits());
        }
        for v in eigenvectors.iter() {
            hash.write_u64(v.to_bits());
        }
        Ok(Self {
            mean,
            eigenvalues,
            eigenvectors,
            m,
            fingerprint: hash.finish(),
        })
    }

    /// Design-vector length `l`.
    pub fn l(&self) -> usize {
        self.mean.len()
    }

    /// Number of stored eigenpairs `q <= min(l, m - 1)`.
    pub fn q(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Training sample count.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn mean(&self) -> &DesignVector {
        &self.mean
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// Spectral cutoff `lambda_1 * l * 2^-52`.
    pub fn rank_cutoff(&self) -> f64 {
        if self.eigenvalues.is_empty() {
            0.0
        } else {
            linalg::rank_cutoff(self.eigenvalues[0], self.l())
        }
    }

    /// Number of eigenvalues above the cutoff.
    pub fn rank(&self) -> usize {
        linalg::rank_above_cutoff(&self.eigenvalues, self.l())
    }

    /// Stable identifier tying parameter maps to the model they were fit on.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }
}

pub(crate) struct Fnv1a(u64);

impl Fnv1a {
    pub(crate) fn new() -> Self {
        Self(0xcbf2_9ce4_8422_2325)
    }

    pub(crate) fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    pub(crate) fn write_u64(&mut self, v: u64) {
        self.write(&v.to_le_bytes());
    }

    pub(crate) fn finish(&self) -> u64 {
        self.0
    }
}

/// Fits the PCA model of a data matrix.
///
/// The spectrum comes from a thin singular value decomposition of the
/// centered data (`lambda_i = sigma_i^2 / (m - 1)`) rather than from an
/// explicitly formed covariance; rank-deficient classes then keep a clean
/// separation between true modes and round-off. Eigenvector signs follow
/// the canonical largest-entry rule.
pub fn fit_pca(x: &DataMatrix) -> Result<PcaModel> {
    if !linalg::all_finite(x.matrix()) {
        return Err(Error::Numeric("data matrix contains non-finite entries".into()));
    }
    let (centered, mean) = center(x);
    let m = x.n_samples();
    let (u, sigma) = linalg::thin_left_svd(centered.matrix())?;
    let scale = 1.0 / (m as f64 - 1.0);
    let eigenvalues = DVector::from_iterator(sigma.len(), sigma.iter().map(|s| s * s * scale));
    PcaModel::from_parts(mean, eigenvalues, u, m)
}

/// Scores of `x` against the model's first `r` components.
pub fn project(model: &PcaModel, x: &DesignVector, r: usize) -> Result<ScoreVector> {
    if x.len() != model.l() {
        return Err(Error::Shape(format!(
            "design vector length {} does not match model length {}",
            x.len(),
            model.l()
        )));
    }
    if r == 0 || r > model.q() {
        return Err(Error::Range(format!(
            "component count r = {r} outside 1..={}",
            model.q()
        )));
    }
    let centered = x - model.mean();
    Ok(model.eigenvectors().columns(0, r).transpose() * centered)
}

/// Mean plus the linear combination of eigenvectors given by `scores`.
pub fn reconstruct(model: &PcaModel, scores: &ScoreVector) -> Result<DesignVector> {
    let r = scores.len();
    if r > model.q() {
        return Err(Error::Range(format!(
            "score length {r} exceeds component count {}",
            model.q()
        )));
    }
    Ok(model.mean() + model.eigenvectors().columns(0, r) * scores)
}

/// Cumulative ratio of total variation of the first `t` eigenvalues.
pub fn crv(model: &PcaModel, t: usize) -> Result<f64> {
    if t == 0 || t > model.q() {
        return Err(Error::Range(format!(
            "CRV index t = {t} outside 1..={}",
            model.q()
        )));
    }
    let total: f64 = model.eigenvalues().iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let partial: f64 = model.eigenvalues().iter().take(t).sum();
    Ok(partial / total)
}

/// Smallest `t` whose CRV reaches `threshold`.
pub fn min_components(model: &PcaModel, threshold: f64) -> Result<usize> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Range(format!(
            "CRV threshold must lie in (0, 1], got {threshold}"
        )));
    }
    let total: f64 = model.eigenvalues().iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let mut partial = 0.0;
    for (i, ev) in model.eigenvalues().iter().enumerate() {
        partial += ev;
        if partial / total >= threshold {
            return Ok(i + 1);
        }
    }
    // the full sum always reaches every threshold <= 1
    Ok(model.q())
}
