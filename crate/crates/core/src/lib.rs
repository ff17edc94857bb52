//! Graphical analysis of informative missingness.
//!
//! A dataset is augmented with completeness indicators, imputed into an
//! ensemble of hot-deck copies, Gaussianized, and fitted with a sparse
//! Gaussian graphical model per copy. Partial correlations are pooled
//! across the ensemble and tested; significant links between observation
//! variables and completeness indicators are reported, together with
//! evidence that a variable's missingness depends on its own value.
//!
//! Numeric stages are generic over [`Scalar`] (`f32`, `f64`); the aliases
//! below fix the common double-precision instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analyze;
pub mod augment;
pub mod dataset;
pub mod error;
pub mod ggm;
pub mod impute;
pub mod linalg;
pub mod npn;
pub mod pipeline;
pub mod pooling;
pub mod report;
mod scalar;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use augment::make_completeness_indicators;
pub use dataset::{missing_profile, parse_csv, Category, ParseOptions, Schema, VariableKind, VariableMeta};
pub use ggm::{correlation_matrix, desparsify, glasso_fit, partial_correlations, select_lambda_ric, LambdaChoice};
pub use impute::{hot_deck_impute, make_ensemble};
pub use npn::nonparanormal_transform;
pub use pooling::{detect_mnar, edge_p_values, extract_missingness_arcs, pool_partial_correlations};

pub type Dataset = dataset::Dataset<f64>;
pub type Dataset32 = dataset::Dataset<f32>;
pub type AugmentedDataset = augment::AugmentedDataset<f64>;
pub type ImputationEnsemble = impute::ImputationEnsemble<f64>;
pub type TransformedMatrix = npn::TransformedMatrix<f64>;
pub type TransformedMatrix32 = npn::TransformedMatrix<f32>;
pub type PrecisionFit = ggm::PrecisionFit<f64>;
pub type PrecisionFit32 = ggm::PrecisionFit<f32>;
pub type PooledEdgeTable = pooling::PooledEdgeTable<f64>;
pub type PooledEdgeTable32 = pooling::PooledEdgeTable<f32>;
pub type MissingnessArc = pooling::MissingnessArc<f64>;
pub type MnarFinding = pooling::MnarFinding<f64>;
