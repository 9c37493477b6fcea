//! A loaded SQ or VQ codec behind one handle, dispatched on the file magic.

use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Rows};
use crate::format::{SQF_MAGIC, VQF_MAGIC};
use crate::pipeline::CodecCost;
use crate::scalar::Scalar;
use crate::sq::{dequantize_sq, SqCodec};
use crate::vq::{decode_vq, VqCodec};

#[derive(Debug, Clone, PartialEq)]
pub enum Codec<T> {
    Sq(SqCodec),
    Vq(VqCodec<T>),
}

impl<T: Scalar> Codec<T> {
    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        match buf.get(..8) {
            Some(m) if m == SQF_MAGIC => SqCodec::from_sqf_bytes(buf).map(Self::Sq),
            Some(m) if m == VQF_MAGIC => VqCodec::from_vqf_bytes(buf).map(Self::Vq),
            _ => Err(Error::CorruptHeader {
                format: "codec",
                reason: "magic is neither SQF1 nor VQF1".into(),
            }),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            Self::Sq(c) => c.to_sqf_bytes(),
            Self::Vq(c) => c.to_vqf_bytes(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Sq(c) => c.n(),
            Self::Vq(c) => c.n(),
        }
    }

    pub fn d(&self) -> usize {
        match self {
            Self::Sq(c) => c.d(),
            Self::Vq(c) => c.d(),
        }
    }

    /// Decodes only the requested rows, in the requested order.
    pub fn gather(&self, rows: &[usize]) -> Result<FeatureMatrix<T>> {
        self.decode(Rows::Ids(rows))
    }

    pub fn decode(&self, rows: Rows<'_>) -> Result<FeatureMatrix<T>> {
        match self {
            Self::Sq(c) => dequantize_sq(c, rows),
            Self::Vq(c) => decode_vq(c, rows),
        }
    }

    pub fn cost(&self) -> CodecCost {
        match self {
            Self::Sq(c) => c.into(),
            Self::Vq(c) => c.into(),
        }
    }
}
