//! Point-cloud geometry classes, PCA shape models, and design-parameter
//! estimation.
//!
//! The pipeline: generate seeded datasets of parametric geometries
//! ([`geometry`], [`dataset`]), fit a PCA over the vectorized clouds
//! ([`pca`]), regress the generating parameters on the latent scores
//! ([`estimation`]), optionally cross-check the mass/weighted joint
//! formulation against the standard route, and emit tables, spectra, and
//! geometry exports ([`report`]).

// Negated float comparisons like `!(x > 0.0)` are deliberate throughout:
// unlike `x <= 0.0`, they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod estimation;
pub mod geometry;
mod linalg;
pub mod parallel;
pub mod pca;
pub mod report;

pub use error::{Error, Result};

pub use dataset::{
    build_dataset, export_parameters_csv, split, split_indices, Dataset, Split,
    DEFAULT_TRAIN_FRACTION, DEFAULT_VARIATIONS,
};
pub use estimation::{
    estimate, estimate_joint, estimation_error, fit_joint_pca, fit_parameter_map,
    standard_operator, verify_equivalence, EquivalenceReport, ErrorSummary, JointPcaModel,
    MassWeightConfig, ParameterMap, ParameterMatrix, RPreset,
};
pub use geometry::{
    generate_cuboid, generate_fan_blade, generate_helix, generate_rectangle,
    generate_simplified_helix, generate_tube, sample_parameters, GeometryClass,
    GeometryClassSpec, GeometrySample, ParameterVector, PointCloud,
};
pub use pca::{
    center, crv, fit_pca, min_components, project, reconstruct, unvectorize, vectorize,
    DataMatrix, DesignVector, PcaModel, ScoreVector,
};
pub use report::{
    crv_table, error_report, export_eigenvalue_spectrum, export_geometry,
    read_eigenvalue_spectrum, read_point_cloud_csv, write_error_reports_csv,
    write_error_reports_text, ClassErrorReport, CrvRow, CrvTable, PresetErrors,
};
