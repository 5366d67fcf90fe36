//! Dataset assembly, deterministic train/test splitting, and persistence.

mod container;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimation::ParameterMatrix;
use crate::geometry::{sample_parameters, GeometryClass, GeometryClassSpec, GeometrySample};
use crate::parallel;
use crate::pca::{self, DataMatrix};

pub(crate) use container::write_atomic;

/// Number of instances per class used by the full experiment battery.
pub const DEFAULT_VARIATIONS: usize = 2000;

/// Train fraction of the 9:1 split.
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.9;

/// All samples of one geometry class plus the generation recipe; rebuilding
/// from `(spec, seed)` reproduces the samples bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    class: GeometryClass,
    spec: GeometryClassSpec,
    samples: Vec<GeometrySample>,
    seed: u64,
}

impl Dataset {
    pub fn class(&self) -> GeometryClass {
        self.class
    }

    pub fn spec(&self) -> &GeometryClassSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[GeometrySample] {
        &self.samples
    }

    /// Clones the samples selected by `indices`.
    pub fn samples_for(&self, indices: &[usize]) -> Result<Vec<GeometrySample>> {
        indices
            .iter()
            .map(|&i| {
                self.samples
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::Range(format!("sample index {i} out of range")))
            })
            .collect()
    }

    /// Design matrix over all samples.
    pub fn design_matrix(&self) -> Result<DataMatrix> {
        let indices: Vec<usize> = (0..self.len()).collect();
        self.design_matrix_for(&indices)
    }

    /// Design matrix over the selected samples.
    pub fn design_matrix_for(&self, indices: &[usize]) -> Result<DataMatrix> {
        let cols = indices
            .iter()
            .map(|&i| {
                self.samples
                    .get(i)
                    .map(|s| pca::vectorize(&s.cloud))
                    .ok_or_else(|| Error::Range(format!("sample index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        DataMatrix::from_columns(&cols)
    }

    /// Parameter matrix over all samples.
    pub fn parameter_matrix(&self) -> Result<ParameterMatrix> {
        let indices: Vec<usize> = (0..self.len()).collect();
        self.parameter_matrix_for(&indices)
    }

    /// Parameter matrix over the selected samples.
    pub fn parameter_matrix_for(&self, indices: &[usize]) -> Result<ParameterMatrix> {
        let vectors = indices
            .iter()
            .map(|&i| {
                self.samples
                    .get(i)
                    .map(|s| s.params.clone())
                    .ok_or_else(|| Error::Range(format!("sample index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        ParameterMatrix::from_vectors(&vectors)
    }
}

/// Builds `m` samples of the class described by `spec`, parameters drawn by
/// [`sample_parameters`] and clouds generated per sample index.
pub fn build_dataset(spec: &GeometryClassSpec, m: usize, seed: u64) -> Result<Dataset> {
    if m < 2 {
        return Err(Error::Domain(format!("dataset needs at least 2 samples, got {m}")));
    }
    let class = GeometryClass::from_name(spec.name())?;
    let params = sample_parameters(spec, seed, m)?;
    let n = spec.n_points();
    let samples = parallel::try_map_indices(m, |i| -> Result<GeometrySample> {
        let cloud = class.generate(&params[i], n)?;
        Ok(GeometrySample {
            cloud,
            params: params[i].clone(),
        })
    })?;
    Ok(Dataset {
        class,
        spec: spec.clone(),
        samples,
        seed,
    })
}

/// Reassembles a dataset from persisted parts, checking shape consistency.
pub(crate) fn build_dataset_unchecked(
    spec: GeometryClassSpec,
    samples: Vec<GeometrySample>,
    seed: u64,
) -> Result<Dataset> {
    let class = GeometryClass::from_name(spec.name())?;
    for s in &samples {
        if s.params.len() != spec.k() || s.cloud.n_points() != spec.n_points() {
            return Err(Error::Format(
                "dataset samples disagree with the class spec".into(),
            ));
        }
    }
    Ok(Dataset {
        class,
        spec,
        samples,
        seed,
    })
}

/// Disjoint, exhaustive train/test index partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    train: Vec<usize>,
    test: Vec<usize>,
}

impl Split {
    pub fn train(&self) -> &[usize] {
        &self.train
    }

    pub fn test(&self) -> &[usize] {
        &self.test
    }
}

/// Splits `0..m` into train/test by a seeded shuffle; the first
/// `floor(train_fraction * m)` permuted indices form the training set.
pub fn split_indices(m: usize, train_fraction: f64, seed: u64) -> Result<Split> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Domain(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let train_len = (train_fraction * m as f64).floor() as usize;
    if train_len == 0 || train_len >= m {
        return Err(Error::Domain(format!(
            "train fraction {train_fraction} leaves an empty part for m = {m}"
        )));
    }
    let mut perm: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perm.shuffle(&mut rng);
    let test = perm.split_off(train_len);
    Ok(Split { train: perm, test })
}

/// [`split_indices`] over a dataset's sample count.
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<Split> {
    split_indices(ds.len(), train_fraction, seed)
}

/// Writes the sample parameters as CSV: a header of parameter names, one
/// row per sample.
pub fn export_parameters_csv(ds: &Dataset, path: impl AsRef<std::path::Path>) -> Result<()> {
    let mut out = String::new();
    out.push_str(&ds.spec().param_names().join(","));
    out.push('\n');
    for sample in ds.samples() {
        let row: Vec<String> = sample.params.values().iter().map(|v| format!("{v}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GeometryClass;

    #[test]
    fn build_is_deterministic_and_in_range() {
        let spec = GeometryClass::Rectangle.spec_with_points(16);
        let a = build_dataset(&spec, 20, 7).unwrap();
        let b = build_dataset(&spec, 20, 7).unwrap();
        assert_eq!(a, b);
        for s in a.samples() {
            spec.validate_params(&s.params).unwrap();
            assert_eq!(s.cloud.n_points(), 16);
        }
    }

    #[test]
    fn minimal_dataset_has_two_samples() {
        let spec = GeometryClass::Cuboid.spec_with_points(12);
        let ds = build_dataset(&spec, 2, 1).unwrap();
        assert_eq!(ds.len(), 2);
        assert!(build_dataset(&spec, 1, 1).is_err());
    }

    #[test]
    fn split_nine_to_one() {
        let s = split_indices(2000, 0.9, 3).unwrap();
        assert_eq!(s.train().len(), 1800);
        assert_eq!(s.test().len(), 200);

        let s = split_indices(10, 0.9, 3).unwrap();
        assert_eq!(s.train().len(), 9);
        assert_eq!(s.test().len(), 1);
    }

    #[test]
    fn split_is_a_deterministic_partition() {
        let a = split_indices(100, 0.75, 11).unwrap();
        let b = split_indices(100, 0.75, 11).unwrap();
        assert_eq!(a, b);
        let c = split_indices(100, 0.75, 12).unwrap();
        assert_ne!(a, c);

        let mut all: Vec<usize> = a.train().iter().chain(a.test()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn degenerate_fractions_rejected() {
        assert!(split_indices(10, 0.0, 0).is_err());
        assert!(split_indices(10, 1.0, 0).is_err());
        assert!(split_indices(3, 0.1, 0).is_err());
    }
}
