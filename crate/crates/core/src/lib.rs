//! Dynamic-texture recognition by hashing pixel difference vectors.
//!
//! The pipeline: extract pixel difference vectors (PDVs) from P×P×P video
//! neighborhoods, map them to compact binary codes with jointly optimized
//! linear hash functions, encode each video as a histogram over a learned
//! codeword dictionary, compress with PCA, concatenate across neighborhood
//! scales, and classify with a cosine nearest-neighbor rule.
//!
//! Core math is generic over the scalar type (see [`scalar::Real`]);
//! concrete `f64` aliases are exported at the crate root.

// index loops mirror the matrix math they implement
#![allow(clippy::needless_range_loop)]

pub mod classify;
pub mod codebook;
pub mod error;
pub mod features;
pub mod harness;
pub mod hash;
pub mod linalg;
pub mod pdv;
pub mod scalar;
pub mod video;

pub use error::{Error, Result};

/// Default scalar for the pipeline.
pub type Scalar = f64;

pub type PdvMatrix = pdv::PdvMatrix<Scalar>;
pub type HashModel = hash::HashModel<Scalar>;
pub type Lambdas = hash::Lambdas<Scalar>;
pub type Codebook = codebook::Codebook<Scalar>;
pub type Histogram = codebook::Histogram<Scalar>;
pub type PcaModel = features::PcaModel<Scalar>;
pub type FeatureVector = features::FeatureVector<Scalar>;
pub type GallerySet = classify::GallerySet<Scalar>;
pub type ModelBundle = harness::ModelBundle<Scalar>;
pub type ExperimentConfig = harness::ExperimentConfig<Scalar>;
