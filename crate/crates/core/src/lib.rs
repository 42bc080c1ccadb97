//! Post-processing for synthetic tabular data: move a synthetic table the
//! least possible distance (Frobenius norm) so that its Pearson correlation
//! matrix equals that of an original table, with prescribed per-feature means
//! and variances.
//!
//! The main entry point is [`enforce_correlations`]. [`naive_sample`] provides
//! a correlation-free baseline to start from, and [`build_report`] measures
//! how far a candidate's correlations and marginals are from the original.

pub mod dataio;
pub mod error;
mod linalg;
pub mod matrix;
pub mod pipeline;
pub mod procrustes;
pub mod report;
pub mod sampler;
pub mod stats;

pub use dataio::{read_csv, write_csv, CsvSchema, MissingPolicy};
pub use error::{Error, ErrorClass, Result};
pub use matrix::FeatureMatrix;
pub use procrustes::{
    constrained_candidate, enforce_correlations, frobenius_gap, scaling_matrix, thin_svd_outer,
    Diagnostics, Enforcement, MeanOffset, ProcrustesFactors, ScalingMatrix, StatTargets,
    DEFAULT_REL_TOL,
};
pub use report::{build_report, ks_distance, FidelityReport};
pub use sampler::{ar1_correlation, make_test_dataset, naive_sample, SamplerConfig, SamplerMode};
pub use stats::{
    center, column_mean, column_variance, cosine_similarity, pearson_correlation, rank_check,
    CorrelationKind, CorrelationMatrix, FeatureStats, RankReport,
};
