//! Logarithmic scalar quantization.
//!
//! Each element is mapped to a `k`-bit code by uniform quantization of `log2|x|` over a clipped
//! range `[e_min, e_max]`. Codes `>= 2^(k-1)` hold non-negative values, codes below hold negative
//! values mirrored around the midpoint, so a larger magnitude always moves further from the
//! middle. Zero takes the non-negative branch at `e_min`. With `k = 1` the code is the sign bit.
//! Dequantization returns the log-domain midpoint of the code's bucket.
//!
//! SQF1 layout (little-endian): magic `"SQF1\0\0\0\0"`, version `u32 = 1`, `k u32`, `n u64`,
//! `d u64`, `e_min f64`, `e_max f64`, `clip_tail_fraction f64`, then `ceil(n * d * k / 8)` bytes of
//! MSB-first packed codes in row-major order.

use std::fs;
use std::path::Path;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitpack;
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Rows};
use crate::format::{checked_len, ByteReader, FORMAT_VERSION, SQF_MAGIC};
use crate::rng::stream_rng;
use crate::scalar::Scalar;

pub const SQF_HEADER_LEN: usize = 56;
pub const DEFAULT_CLIP_TAIL_FRACTION: f64 = 0.005;
/// Quantiles are taken over at most this many nonzero elements.
pub const QUANTILE_SAMPLE_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqParams {
    pub k: u32,
    pub e_min: f64,
    pub e_max: f64,
    pub clip_tail_fraction: f64,
}

impl SqParams {
    pub fn validate(&self) -> Result<()> {
        if !(1..=8).contains(&self.k) {
            return Err(Error::InvalidParam(format!("k must be in 1..=8, got {}", self.k)));
        }
        validate_clip(self.clip_tail_fraction)?;
        if !self.e_min.is_finite() || !self.e_max.is_finite() || self.e_min > self.e_max {
            return Err(Error::InvalidParam(format!(
                "bad log range [{}, {}]",
                self.e_min, self.e_max
            )));
        }
        if self.k >= 2 && self.e_min == self.e_max {
            return Err(Error::DegenerateRange(self.e_min));
        }
        Ok(())
    }

    fn half(&self) -> u32 {
        1 << (self.k - 1)
    }

    /// Width of one code bucket in the log domain.
    pub fn bucket_width(&self) -> f64 {
        (self.e_max - self.e_min) / self.half() as f64
    }

    pub fn quantize_value(&self, x: f64) -> u32 {
        let half = self.half();
        let range = self.e_max - self.e_min;
        let offset = if x == 0.0 || range == 0.0 {
            0
        } else {
            let e = x.abs().log2().clamp(self.e_min, self.e_max);
            let f = ((e - self.e_min) / range * half as f64).floor();
            (f as u32).min(half - 1)
        };
        if x >= 0.0 {
            half + offset
        } else {
            half - 1 - offset
        }
    }

    pub fn dequantize_value(&self, q: u32) -> f64 {
        let half = self.half();
        let scale = (self.e_max - self.e_min) / half as f64;
        if q < half {
            -((half as f64 - 0.5 - q as f64) * scale + self.e_min).exp2()
        } else {
            ((q as f64 - half as f64 + 0.5) * scale + self.e_min).exp2()
        }
    }
}

fn validate_clip(clip: f64) -> Result<()> {
    if !(0.0..=0.2).contains(&clip) {
        return Err(Error::InvalidParam(format!(
            "clip_tail_fraction must be in [0, 0.2], got {clip}"
        )));
    }
    Ok(())
}

/// Linear-interpolation quantile of sorted data (`h = (len - 1) * q`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn fit_sq<T: Scalar>(f: &FeatureMatrix<T>, k: u32, clip_tail_fraction: f64) -> Result<SqParams> {
    if !(1..=8).contains(&k) {
        return Err(Error::InvalidParam(format!("k must be in 1..=8, got {k}")));
    }
    validate_clip(clip_tail_fraction)?;
    let mut logs: Vec<f64> = f
        .values()
        .iter()
        .filter(|v| !v.is_zero())
        .map(|v| v.to_f64_lossy().abs().log2())
        .collect();
    if logs.is_empty() {
        if k >= 2 {
            return Err(Error::AllZero);
        }
        return Ok(SqParams {
            k,
            e_min: 0.0,
            e_max: 0.0,
            clip_tail_fraction,
        });
    }
    if logs.len() > QUANTILE_SAMPLE_CAP {
        let mut rng = stream_rng(0, 0x51);
        let mut picks = index::sample(&mut rng, logs.len(), QUANTILE_SAMPLE_CAP).into_vec();
        picks.sort_unstable();
        logs = picks.into_iter().map(|i| logs[i]).collect();
    }
    logs.sort_unstable_by(f64::total_cmp);
    let params = SqParams {
        k,
        e_min: quantile_sorted(&logs, clip_tail_fraction),
        e_max: quantile_sorted(&logs, 1.0 - clip_tail_fraction),
        clip_tail_fraction,
    };
    params.validate()?;
    Ok(params)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqCodec {
    pub params: SqParams,
    n: usize,
    d: usize,
    payload: Vec<u8>,
}

impl SqCodec {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn code(&self, row: usize, col: usize) -> u32 {
        bitpack::get(&self.payload, self.params.k, row * self.d + col)
    }

    pub fn codes(&self) -> Vec<u32> {
        bitpack::unpack(&self.payload, self.params.k, self.n * self.d)
    }

    /// Packed bytes holding one row's codes (`ceil(d * k / 8)`).
    pub fn bytes_per_row(&self) -> usize {
        bitpack::packed_len(self.d, self.params.k)
    }

    pub fn to_sqf_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(SQF_HEADER_LEN + self.payload.len());
        out.extend_from_slice(&SQF_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.params.k.to_le_bytes());
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&(self.d as u64).to_le_bytes());
        out.extend_from_slice(&self.params.e_min.to_le_bytes());
        out.extend_from_slice(&self.params.e_max.to_le_bytes());
        out.extend_from_slice(&self.params.clip_tail_fraction.to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_sqf_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new("SQF1", buf);
        r.magic(&SQF_MAGIC)?;
        r.version()?;
        let k = r.u32()?;
        let n = r.u64()?;
        let d = r.u64()?;
        let params = SqParams {
            k,
            e_min: r.f64()?,
            e_max: r.f64()?,
            clip_tail_fraction: r.f64()?,
        };
        params.validate().map_err(|e| r.corrupt(e.to_string()))?;
        let bits = checked_len("SQF1", &[n, d, k as u64])?;
        let payload = r.payload(bits.div_ceil(8))?.to_vec();
        Ok(Self {
            params,
            n: n as usize,
            d: d as usize,
            payload,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_sqf_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_sqf_bytes(&fs::read(path)?)
    }
}

pub fn quantize_sq<T: Scalar>(f: &FeatureMatrix<T>, p: &SqParams) -> Result<SqCodec> {
    p.validate()?;
    let d = f.d();
    let k = p.k;
    // rows are packed independently only when they end on a byte boundary; otherwise
    // pack the whole stream serially
    let payload = if (d as u64 * k as u64).is_multiple_of(8) && d > 0 {
        let rows: Vec<Vec<u8>> = (0..f.n())
            .into_par_iter()
            .map(|i| {
                let mut w = bitpack::BitWriter::new(k, d);
                for v in f.row(i) {
                    w.push(p.quantize_value(v.to_f64_lossy()));
                }
                w.finish()
            })
            .collect();
        rows.concat()
    } else {
        let mut w = bitpack::BitWriter::new(k, f.values().len());
        for v in f.values() {
            w.push(p.quantize_value(v.to_f64_lossy()));
        }
        w.finish()
    };
    Ok(SqCodec {
        params: *p,
        n: f.n(),
        d,
        payload,
    })
}

/// Decodes the selected rows in one pass; row order follows `rows`.
pub fn dequantize_sq<T: Scalar>(c: &SqCodec, rows: Rows<'_>) -> Result<FeatureMatrix<T>> {
    let ids = rows.resolve(c.n)?;
    let k = c.params.k;
    let table: Vec<T> = (0..1u32 << k)
        .map(|q| T::from_f64_lossy(c.params.dequantize_value(q)))
        .collect();
    let mut values = Vec::with_capacity(ids.len() * c.d);
    let mut codes = Vec::with_capacity(c.d);
    for &i in &ids {
        codes.clear();
        bitpack::unpack_range(&c.payload, k, i * c.d, c.d, &mut codes);
        values.extend(codes.iter().map(|&q| table[q as usize]));
    }
    FeatureMatrix::new(ids.len(), c.d, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqCompressionRatio {
    /// `b / k`: raw payload bits over code bits.
    pub payload: f64,
    /// Raw payload bytes over the full SQF1 file size.
    pub with_header: f64,
}

/// Compression ratio against `elem_bits`-bit raw features.
pub fn sq_compression_ratio(c: &SqCodec, elem_bits: u32) -> SqCompressionRatio {
    let raw = (c.n * c.d) as f64 * elem_bits as f64 / 8.0;
    SqCompressionRatio {
        payload: elem_bits as f64 / c.params.k as f64,
        with_header: raw / (SQF_HEADER_LEN + c.payload.len()) as f64,
    }
}
