//! Design-parameter estimation from PCA scores, the weighted joint-PCA
//! variant, and a numerical verifier for the equivalence of the two routes.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{GeometrySample, ParameterVector};
use crate::linalg;
use crate::parallel;
use crate::pca::{self, DataMatrix, DesignVector, PcaModel};

/// `k x m` matrix whose columns are the generating parameters paired with a
/// [`DataMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterMatrix {
    data: DMatrix<f64>,
}

impl ParameterMatrix {
    pub fn from_vectors(vectors: &[ParameterVector]) -> Result<Self> {
        if vectors.len() < 2 {
            return Err(Error::Shape(format!(
                "parameter matrix needs at least 2 columns, got {}",
                vectors.len()
            )));
        }
        let k = vectors[0].len();
        if k == 0 {
            return Err(Error::Shape("parameter vectors must be non-empty".into()));
        }
        if vectors.iter().any(|v| v.len() != k) {
            return Err(Error::Shape("parameter vectors disagree in length".into()));
        }
        let data =
            DMatrix::from_fn(k, vectors.len(), |i, j| vectors[j][i]);
        Ok(Self { data })
    }

    pub fn from_matrix(data: DMatrix<f64>) -> Result<Self> {
        if data.ncols() < 2 || data.nrows() == 0 {
            return Err(Error::Shape(format!(
                "parameter matrix must be at least 1 x 2, got {} x {}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(Self { data })
    }

    pub fn k(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }
}

/// Linear map from latent scores back to design parameters:
/// `p = mu_P + H * scores`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterMap {
    h: DMatrix<f64>,
    param_mean: DVector<f64>,
    r: usize,
    model_ref: u64,
}

impl ParameterMap {
    pub fn from_parts(
        h: DMatrix<f64>,
        param_mean: DVector<f64>,
        r: usize,
        model_ref: u64,
    ) -> Result<Self> {
        if h.nrows() != param_mean.len() {
            return Err(Error::Shape(format!(
                "H has {} rows but the parameter mean has length {}",
                h.nrows(),
                param_mean.len()
            )));
        }
        if h.ncols() != r {
            return Err(Error::Shape(format!(
                "H has {} columns, expected r = {r}",
                h.ncols()
            )));
        }
        Ok(Self {
            h,
            param_mean,
            r,
            model_ref,
        })
    }

    pub fn k(&self) -> usize {
        self.param_mean.len()
    }

    /// Retained-component count the map was fit with.
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn param_mean(&self) -> &DVector<f64> {
        &self.param_mean
    }

    /// Fingerprint of the [`PcaModel`] this map belongs to.
    pub fn model_ref(&self) -> u64 {
        self.model_ref
    }
}

/// Regresses parameters on the first `r` PCA scores of the training data.
///
/// `H = P_mu X_mu^T V_r Lambda_r^-1 / (m - 1)`, the Moore-Penrose solution
/// of `P_mu = H V^T X_mu` through the retained spectrum. Components whose
/// eigenvalue falls below the rank cutoff are excluded from `H` (their
/// columns stay zero) instead of being inverted, so any `r` up to `q` is
/// usable even on rank-deficient classes.
pub fn fit_parameter_map(
    model: &PcaModel,
    x: &DataMatrix,
    p: &ParameterMatrix,
    r: usize,
) -> Result<ParameterMap> {
    let m = model.m();
    if x.n_samples() != m || p.n_samples() != m {
        return Err(Error::Shape(format!(
            "training data has {} / {} columns but the model was fit on {m}",
            x.n_samples(),
            p.n_samples()
        )));
    }
    if x.vector_len() != model.l() {
        return Err(Error::Shape(format!(
            "design vectors of length {} do not match model length {}",
            x.vector_len(),
            model.l()
        )));
    }
    if r == 0 || r > model.q() {
        return Err(Error::Range(format!(
            "component count r = {r} outside 1..={}",
            model.q()
        )));
    }

    let x_mu = linalg::subtract_column_mean(x.matrix(), model.mean());
    let param_mean = linalg::column_mean(p.matrix());
    let p_mu = linalg::subtract_column_mean(p.matrix(), &param_mean);

    // Scores and H are always computed at full q and sliced afterwards, so
    // maps fit with different r agree bit-exactly on their shared columns.
    let scores = model.eigenvectors().transpose() * x_mu;
    let mut h_full = p_mu * scores.transpose();
    let cutoff = model.rank_cutoff();
    let denom = m as f64 - 1.0;
    for i in 0..model.q() {
        let ev = model.eigenvalues()[i];
        let gain = if ev > cutoff { 1.0 / (ev * denom) } else { 0.0 };
        h_full.column_mut(i).scale_mut(gain);
    }
    let h = h_full.columns(0, r).clone_owned();
    ParameterMap::from_parts(h, param_mean, r, model.fingerprint())
}

/// Estimates the generating parameters of a design vector.
pub fn estimate(map: &ParameterMap, model: &PcaModel, x: &DesignVector) -> Result<ParameterVector> {
    if map.model_ref() != model.fingerprint() {
        return Err(Error::Domain(
            "parameter map was fit against a different model".into(),
        ));
    }
    let scores = pca::project(model, x, map.r())?;
    let p = map.param_mean() + map.h() * scores;
    Ok(ParameterVector::new(p.iter().copied().collect()))
}

/// The estimation operator `H V_r^T` as an explicit `k x l` matrix.
pub fn standard_operator(map: &ParameterMap, model: &PcaModel) -> Result<DMatrix<f64>> {
    if map.model_ref() != model.fingerprint() {
        return Err(Error::Domain(
            "parameter map was fit against a different model".into(),
        ));
    }
    Ok(map.h() * model.eigenvectors().columns(0, map.r()).transpose())
}

/// Per-point masses and densities of the weighted joint fit. Both vectors
/// have one entry per cloud point and are replicated over the x, y, and z
/// coordinate blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct MassWeightConfig {
    masses: Vec<f64>,
    weights: Vec<f64>,
}

impl MassWeightConfig {
    pub fn new(masses: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if masses.is_empty() || masses.len() != weights.len() {
            return Err(Error::Shape(format!(
                "need equal, non-zero mass and weight counts, got {} and {}",
                masses.len(),
                weights.len()
            )));
        }
        for &v in masses.iter().chain(&weights) {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!(
                    "masses and weights must be strictly positive and finite, got {v}"
                )));
            }
        }
        Ok(Self { masses, weights })
    }

    /// All-ones configuration for `n_points` points.
    pub fn identity(n_points: usize) -> Self {
        Self {
            masses: vec![1.0; n_points],
            weights: vec![1.0; n_points],
        }
    }

    /// Seeded strictly positive configuration with entries in `[0.5, 2.0)`,
    /// for verification sweeps.
    pub fn random(n_points: usize, seed: u64) -> Self {
        let dist = Uniform::new(0.5f64, 2.0).expect("fixed range is valid");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let masses = (0..n_points).map(|_| dist.sample(&mut rng)).collect();
        let weights = (0..n_points).map(|_| dist.sample(&mut rng)).collect();
        Self { masses, weights }
    }

    pub fn n_points(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The diagonal of `M W` expanded to design-vector length `3 n`.
    pub fn full_diagonal(&self) -> DVector<f64> {
        let n = self.n_points();
        DVector::from_fn(3 * n, |i, _| {
            let p = i % n;
            self.masses[p] * self.weights[p]
        })
    }
}

/// Joint fit of geometry and parameters under a mass/weight configuration.
///
/// Stores the geometry block `V` (unit columns) and the parameter block `H`
/// of the enlarged eigenproblem, plus the shared spectrum. The zero blocks
/// of the enlarged eigenvector matrix are never materialized.
#[derive(Debug, Clone)]
pub struct JointPcaModel {
    eigenvalues: DVector<f64>,
    v: DMatrix<f64>,
    h: DMatrix<f64>,
    config: MassWeightConfig,
    mean_x: DVector<f64>,
    mean_p: DVector<f64>,
    m: usize,
    // Cholesky of V_rank^T V_rank, rebuilt on load; the retained joint
    // eigenvectors are not orthogonal for non-identity weights.
    basis_gram: Option<Cholesky<f64, Dyn>>,
}

impl JointPcaModel {
    pub fn from_parts(
        eigenvalues: DVector<f64>,
        v: DMatrix<f64>,
        h: DMatrix<f64>,
        config: MassWeightConfig,
        mean_x: DVector<f64>,
        mean_p: DVector<f64>,
        m: usize,
    ) -> Result<Self> {
        let l = mean_x.len();
        let q = eigenvalues.len();
        if v.nrows() != l || v.ncols() != q || h.nrows() != mean_p.len() || h.ncols() != q {
            return Err(Error::Shape("joint model blocks disagree in shape".into()));
        }
        if l != 3 * config.n_points() {
            return Err(Error::Shape(format!(
                "mass/weight configuration covers {} points but l = {l}",
                config.n_points()
            )));
        }
        let mut model = Self {
            eigenvalues,
            v,
            h,
            config,
            mean_x,
            mean_p,
            m,
            basis_gram: None,
        };
        model.basis_gram = model.factor_basis()?;
        Ok(model)
    }

    fn factor_basis(&self) -> Result<Option<Cholesky<f64, Dyn>>> {
        let rank = self.rank();
        if rank == 0 {
            return Ok(None);
        }
        let v_r = self.v.columns(0, rank);
        let gram = v_r.transpose() * v_r;
        Ok(Some(Cholesky::new(gram).ok_or_else(|| {
            Error::Numeric("retained joint eigenvectors are numerically dependent".into())
        })?))
    }

    pub fn l(&self) -> usize {
        self.mean_x.len()
    }

    pub fn k(&self) -> usize {
        self.mean_p.len()
    }

    pub fn q(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Geometry block of the enlarged eigenvectors, `l x q`.
    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    /// Parameter block of the enlarged eigenvectors, `k x q`.
    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn config(&self) -> &MassWeightConfig {
        &self.config
    }

    pub fn mean_x(&self) -> &DVector<f64> {
        &self.mean_x
    }

    pub fn mean_p(&self) -> &DVector<f64> {
        &self.mean_p
    }

    pub fn rank_cutoff(&self) -> f64 {
        if self.eigenvalues.is_empty() {
            0.0
        } else {
            linalg::rank_cutoff(self.eigenvalues[0], self.l())
        }
    }

    pub fn rank(&self) -> usize {
        linalg::rank_above_cutoff(&self.eigenvalues, self.l())
    }

    /// Centers a raw design vector by the training mean.
    pub fn center(&self, x: &DesignVector) -> Result<DesignVector> {
        if x.len() != self.l() {
            return Err(Error::Shape(format!(
                "design vector length {} does not match model length {}",
                x.len(),
                self.l()
            )));
        }
        Ok(x - &self.mean_x)
    }

    /// The estimation operator as an explicit `k x l` matrix.
    ///
    /// This is `H_r (V_r^T V_r)^-1 V_r^T`: scores are recovered from
    /// `x = V z` by least squares because the mapped-back eigenvectors are
    /// only orthogonal for identity weights. For identity weights the
    /// pseudoinverse collapses to `V_r^T` and this is exactly `H V^T`.
    pub fn operator(&self) -> DMatrix<f64> {
        let rank = self.rank();
        if rank == 0 {
            return DMatrix::zeros(self.k(), self.l());
        }
        let v_r = self.v.columns(0, rank);
        let chol = self.basis_gram.as_ref().expect("factored at construction");
        let dual = chol.solve(&v_r.transpose().clone_owned());
        self.h.columns(0, rank) * dual
    }

    fn scores(&self, centered_x: &DesignVector) -> Result<DVector<f64>> {
        if centered_x.len() != self.l() {
            return Err(Error::Shape(format!(
                "design vector length {} does not match model length {}",
                centered_x.len(),
                self.l()
            )));
        }
        let rank = self.rank();
        if rank == 0 {
            return Ok(DVector::zeros(0));
        }
        let v_r = self.v.columns(0, rank);
        let rhs = v_r.transpose() * centered_x;
        let chol = self.basis_gram.as_ref().expect("factored at construction");
        Ok(chol.solve(&rhs))
    }
}

/// Solves the joint eigenproblem `(1/m) X X^T M W  V = V Lambda` and builds
/// the parameter block `H = (1/m) P X^T M W V Lambda^-1`.
///
/// `X` and `P` are centered internally by their row means. The asymmetric
/// problem is reduced to a symmetric one by similarity with the positive
/// diagonal `(M W)^{1/2}`; eigenvectors are mapped back, normalized to unit
/// length, and sign-canonicalized before `H` is formed. Eigenvalues below
/// the rank cutoff are excluded from `H` rather than inverted.
pub fn fit_joint_pca(
    x: &DataMatrix,
    p: &ParameterMatrix,
    config: &MassWeightConfig,
) -> Result<JointPcaModel> {
    let l = x.vector_len();
    let m = x.n_samples();
    if p.n_samples() != m {
        return Err(Error::Shape(format!(
            "parameter matrix has {} columns, data matrix {m}",
            p.n_samples()
        )));
    }
    if l != 3 * config.n_points() {
        return Err(Error::Shape(format!(
            "mass/weight configuration covers {} points but l = {l}",
            config.n_points()
        )));
    }
    if !linalg::all_finite(x.matrix()) || !linalg::all_finite(p.matrix()) {
        return Err(Error::Numeric("joint fit input contains non-finite entries".into()));
    }

    let mean_x = linalg::column_mean(x.matrix());
    let x_mu = linalg::subtract_column_mean(x.matrix(), &mean_x);
    let mean_p = linalg::column_mean(p.matrix());
    let p_mu = linalg::subtract_column_mean(p.matrix(), &mean_p);

    let d = config.full_diagonal();
    let sqrt_d = d.map(f64::sqrt);

    // symmetric similarity: Cs = (1/m) D^{1/2} X X^T D^{1/2}
    let mut scaled = x_mu.clone();
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        row *= sqrt_d[i];
    }
    let cs = (&scaled * scaled.transpose()) / m as f64;
    let (values, vectors) = linalg::symmetric_eigen_desc(cs)?;

    let q = l.min(m - 1);
    let eigenvalues = DVector::from_iterator(q, values.iter().take(q).copied());

    // map back through D^{-1/2}, normalize, canonicalize
    let mut v = DMatrix::zeros(l, q);
    for c in 0..q {
        let mut col = vectors.column(c).clone_owned();
        for i in 0..l {
            col[i] /= sqrt_d[i];
        }
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
        v.set_column(c, &col);
    }
    linalg::canonicalize_column_signs(&mut v);

    // H columns: (1/(m lambda_i)) P_mu X_mu^T D v_i on retained components
    let rank = linalg::rank_above_cutoff(&eigenvalues, l);
    let mut h = DMatrix::zeros(p.k(), q);
    if rank > 0 {
        let mut dv = v.columns(0, rank).clone_owned();
        for (i, mut row) in dv.row_iter_mut().enumerate() {
            row *= d[i];
        }
        let mut block = &p_mu * (x_mu.transpose() * dv);
        for c in 0..rank {
            block.column_mut(c).scale_mut(1.0 / (eigenvalues[c] * m as f64));
        }
        h.columns_mut(0, rank).copy_from(&block);
    }

    JointPcaModel::from_parts(eigenvalues, v, h, config.clone(), mean_x, mean_p, m)
}

/// Estimates parameters from a centered design vector via the joint model:
/// `mu_P + H z` with `z` the least-squares scores of `x` in the retained
/// eigenvector basis.
pub fn estimate_joint(jmodel: &JointPcaModel, centered_x: &DesignVector) -> Result<ParameterVector> {
    let z = jmodel.scores(centered_x)?;
    let rank = z.len();
    let p = jmodel.mean_p() + jmodel.h().columns(0, rank) * z;
    Ok(ParameterVector::new(p.iter().copied().collect()))
}

/// Outcome of one equivalence check between the joint and standard routes.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    /// `max |H_S V_S^T - H_O V_O^T|` relative to the largest entry of the
    /// standard operator.
    pub operator_deviation: f64,
    /// Largest per-probe deviation
    /// `||p_joint - p_std||_inf / (1 + ||p_std||_inf)`.
    pub max_probe_deviation: f64,
    pub probes: usize,
    pub tol: f64,
    pub rank_standard: usize,
    pub rank_joint: usize,
    pub passed: bool,
}

impl std::fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "operator deviation {:.3e}, max probe deviation {:.3e} over {} probes (ranks {}/{}, tol {:.1e}): {}",
            self.operator_deviation,
            self.max_probe_deviation,
            self.probes,
            self.rank_standard,
            self.rank_joint,
            self.tol,
            if self.passed { "pass" } else { "FAIL" }
        )
    }
}

/// Fits both estimation routes on `(x, p)` and measures how far they
/// disagree, at the operator level and on `probes` random probe vectors.
pub fn verify_equivalence(
    x: &DataMatrix,
    p: &ParameterMatrix,
    config: &MassWeightConfig,
    probes: usize,
    tol: f64,
    seed: u64,
) -> Result<EquivalenceReport> {
    if !(tol >= 0.0) {
        return Err(Error::Domain(format!("tolerance must be non-negative, got {tol}")));
    }
    if probes == 0 {
        return Err(Error::Domain("probe count must be at least 1".into()));
    }

    let model = pca::fit_pca(x)?;
    let rank_standard = model.rank();
    let map = fit_parameter_map(&model, x, p, rank_standard.max(1))?;
    let op_std = standard_operator(&map, &model)?;

    let jmodel = fit_joint_pca(x, p, config)?;
    let rank_joint = jmodel.rank();
    let op_joint = jmodel.operator();

    let scale = op_std.amax();
    let denom = if scale > 0.0 { scale } else { 1.0 };
    let operator_deviation = (&op_joint - &op_std).amax() / denom;

    let l = model.l();
    let probe_dist = Uniform::new(-1.0f64, 1.0).expect("fixed probe range is valid");
    let deviations = parallel::map_indices(probes, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let probe = DVector::from_fn(l, |_, _| probe_dist.sample(&mut rng));
        let std_est = map.param_mean() + map.h() * (model.eigenvectors().columns(0, map.r()).transpose() * (&probe - model.mean()));
        let joint_est = jmodel.mean_p()
            + &op_joint * (&probe - jmodel.mean_x());
        let diff = (&joint_est - &std_est).amax();
        diff / (1.0 + std_est.amax())
    });
    let max_probe_deviation = deviations.into_iter().fold(0.0f64, f64::max);

    let passed = operator_deviation <= tol && max_probe_deviation <= tol;
    Ok(EquivalenceReport {
        operator_deviation,
        max_probe_deviation,
        probes,
        tol,
        rank_standard,
        rank_joint,
        passed,
    })
}

/// Named retained-component presets used by the error study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RPreset {
    /// `r = k`, the parameter count.
    ParamCount,
    /// `r = t_{0.95}`, the component count reaching a CRV of 0.95.
    T95,
    /// A fixed component count, conventionally 200.
    Fixed(usize),
}

impl RPreset {
    /// The presets mirroring the error study markers: `k`, `t_0.95`
    /// (omitted when it coincides with `k`), and 200.
    pub fn standard_set(model: &PcaModel, k: usize) -> Result<Vec<RPreset>> {
        let t95 = pca::min_components(model, 0.95)?;
        let mut presets = vec![RPreset::ParamCount];
        if t95 != k {
            presets.push(RPreset::T95);
        }
        presets.push(RPreset::Fixed(200));
        Ok(presets)
    }

    /// Resolves the preset to a concrete component count for `model`.
    pub fn resolve(&self, model: &PcaModel, k: usize) -> Result<usize> {
        let r = match self {
            RPreset::ParamCount => k,
            RPreset::T95 => pca::min_components(model, 0.95)?,
            RPreset::Fixed(r) => *r,
        };
        if r == 0 || r > model.q() {
            return Err(Error::Range(format!(
                "preset {} resolves to r = {r}, outside 1..={}",
                self.label(),
                model.q()
            )));
        }
        Ok(r)
    }

    pub fn label(&self) -> String {
        match self {
            RPreset::ParamCount => "k".into(),
            RPreset::T95 => "t95".into(),
            RPreset::Fixed(r) => r.to_string(),
        }
    }
}

/// Per-parameter absolute-error statistics over a test set.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSummary {
    mean_abs: Vec<f64>,
    max_abs: Vec<f64>,
    n_samples: usize,
}

impl ErrorSummary {
    /// Mean absolute error per parameter.
    pub fn mean_abs(&self) -> &[f64] {
        &self.mean_abs
    }

    /// Largest absolute error per parameter.
    pub fn max_abs(&self) -> &[f64] {
        &self.max_abs
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }
}

/// Estimates every test sample and summarizes `|p_estimated - p_true|`
/// per parameter.
pub fn estimation_error(
    map: &ParameterMap,
    model: &PcaModel,
    test: &[GeometrySample],
) -> Result<ErrorSummary> {
    if test.is_empty() {
        return Err(Error::Domain("estimation error needs a non-empty test set".into()));
    }
    let k = map.k();
    let errors = parallel::try_map_indices(test.len(), |i| -> Result<Vec<f64>> {
        let sample = &test[i];
        if sample.params.len() != k {
            return Err(Error::Shape(format!(
                "test sample has {} parameters, map expects {k}",
                sample.params.len()
            )));
        }
        let est = estimate(map, model, &pca::vectorize(&sample.cloud))?;
        Ok((0..k).map(|j| (est[j] - sample.params[j]).abs()).collect())
    })?;

    let mut mean_abs = vec![0.0; k];
    let mut max_abs = vec![0.0; k];
    for e in &errors {
        for j in 0..k {
            mean_abs[j] += e[j];
            if e[j] > max_abs[j] {
                max_abs[j] = e[j];
            }
        }
    }
    let count = test.len() as f64;
    for v in &mut mean_abs {
        *v /= count;
    }
    Ok(ErrorSummary {
        mean_abs,
        max_abs,
        n_samples: test.len(),
    })
}
