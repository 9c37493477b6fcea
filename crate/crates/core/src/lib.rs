//! Feature compression for GNN training: log-domain scalar quantization, per-part vector
//! quantization, aggregation error factors that bound how hard features can be compressed,
//! graph generation and sparsification, and a data-loading cost simulator.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below fix the common
//! `f32` instantiations.

pub mod bitpack;
pub mod codec;
pub mod error;
pub mod factors;
pub mod features;
pub mod format;
pub mod graph;
pub mod kmeans;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod sq;
pub mod vq;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use codec::Codec;
pub use factors::{factors_exact, factors_mc, suggest_cr, FactorReport};
pub use features::{FeatureMatrix, Rows};
pub use graph::CsrGraph;
pub use sq::{dequantize_sq, fit_sq, quantize_sq, SqCodec, SqParams};
pub use vq::{decode_vq, encode_vq, fit_vq, VqCodec, VqParams};

pub type Features = FeatureMatrix<f32>;
pub type Features64 = FeatureMatrix<f64>;
pub type VqCodecF32 = VqCodec<f32>;
pub type VqCodecF64 = VqCodec<f64>;
pub type AnyCodec = Codec<f32>;
