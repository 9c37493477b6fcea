//! Vector quantization: feature dimensions are split into parts of `width` columns (the last
//! part may be narrower), each part gets a `length`-entry codebook fit by k-means, and every
//! node stores one codebook index per part.
//!
//! VQF1 layout (little-endian): magic `"VQF1\0\0\0\0"`, version `u32 = 1`, `metric u8`
//! (0 = euclidean, 1 = cosine), `code_layout u8` (0 = packed, 1 = byte-aligned), `pad u16 = 0`,
//! `width u32`, `length u32`, `num_parts u32`, `n u64`, `d u64`, then codebooks as `f32`
//! (part-major, `length x part_width` each), then `n x num_parts` codes row-major. Packed codes
//! use `ceil(log2 length)` bits MSB-first; byte-aligned codes use the fewest whole bytes, each
//! code little-endian. A file with `n = 0` carries codebooks only.

use std::fs;
use std::path::Path;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitpack;
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Rows};
use crate::format::{checked_len, ByteReader, FORMAT_VERSION, VQF_MAGIC};
use crate::kmeans::{self, KMeansConfig};
use crate::rng::{stream_rng, stream_rng2};
use crate::scalar::Scalar;

pub use crate::kmeans::Metric;

pub const VQF_HEADER_LEN: usize = 44;
pub const MAX_CODEBOOK_LENGTH: usize = 16384;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeLayout {
    Packed,
    ByteAligned,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VqParams {
    pub width: usize,
    pub length: usize,
    pub metric: Metric,
    /// Fraction of rows sampled for fitting; `None` means `min(1, 10^6 / n)`.
    pub fit_sample_fraction: Option<f64>,
    pub kmeans_max_iters: usize,
    pub kmeans_tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl VqParams {
    pub fn new(width: usize, length: usize, metric: Metric) -> Self {
        Self {
            width,
            length,
            metric,
            fit_sample_fraction: None,
            kmeans_max_iters: 50,
            kmeans_tol: 1e-4,
            restarts: 4,
            seed: 0,
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.width == 0 || self.width > d {
            return Err(Error::InvalidParam(format!(
                "width {} must be in 1..={d}",
                self.width
            )));
        }
        if !(2..=MAX_CODEBOOK_LENGTH).contains(&self.length) {
            return Err(Error::InvalidParam(format!(
                "length {} must be in 2..={MAX_CODEBOOK_LENGTH}",
                self.length
            )));
        }
        if let Some(fr) = self.fit_sample_fraction {
            if !(fr > 0.0 && fr <= 1.0) {
                return Err(Error::InvalidParam(format!(
                    "fit_sample_fraction {fr} outside (0, 1]"
                )));
            }
        }
        Ok(())
    }

    pub fn sample_fraction(&self, n: usize) -> f64 {
        self.fit_sample_fraction
            .unwrap_or_else(|| (1e6 / n.max(1) as f64).min(1.0))
    }

    /// Bits one packed code occupies: `ceil(log2 length)`.
    pub fn code_bits(&self) -> u32 {
        usize::BITS - (self.length - 1).leading_zeros()
    }
}

fn metric_tag(m: Metric) -> u8 {
    match m {
        Metric::Euclidean => 0,
        Metric::Cosine => 1,
    }
}

fn layout_tag(l: CodeLayout) -> u8 {
    match l {
        CodeLayout::Packed => 0,
        CodeLayout::ByteAligned => 1,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VqCodec<T> {
    pub params: VqParams,
    pub layout: CodeLayout,
    n: usize,
    d: usize,
    /// Per part, `length x part_width` row-major.
    codebooks: Vec<Vec<T>>,
    /// Distinct entries found per part; below `length` the tail repeats the last entry.
    effective_lengths: Vec<usize>,
    /// Final k-means objective per part on the fitting sample (not persisted).
    objectives: Vec<f64>,
    codes: Option<Vec<u32>>,
}

impl<T: Scalar> VqCodec<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn num_parts(&self) -> usize {
        self.codebooks.len()
    }

    pub fn part_width(&self, part: usize) -> usize {
        (self.d - part * self.params.width).min(self.params.width)
    }

    pub fn codebook(&self, part: usize) -> &[T] {
        &self.codebooks[part]
    }

    pub fn entry(&self, part: usize, index: usize) -> &[T] {
        let w = self.part_width(part);
        &self.codebooks[part][index * w..(index + 1) * w]
    }

    pub fn effective_lengths(&self) -> &[usize] {
        &self.effective_lengths
    }

    pub fn objectives(&self) -> &[f64] {
        &self.objectives
    }

    pub fn objective(&self) -> f64 {
        self.objectives.iter().sum()
    }

    pub fn codes(&self) -> Option<&[u32]> {
        self.codes.as_deref()
    }

    pub fn code(&self, row: usize, part: usize) -> Option<u32> {
        self.codes.as_ref().map(|c| c[row * self.num_parts() + part])
    }

    /// Stored bits per code under the current layout.
    pub fn stored_code_bits(&self) -> u32 {
        let bits = self.params.code_bits();
        match self.layout {
            CodeLayout::Packed => bits,
            CodeLayout::ByteAligned => 8 * bits.div_ceil(8),
        }
    }

    /// Code bytes per node (fractional for packed layouts).
    pub fn bytes_per_row(&self) -> f64 {
        self.num_parts() as f64 * self.stored_code_bits() as f64 / 8.0
    }

    pub fn codebook_bytes(&self) -> usize {
        self.codebooks.iter().map(|c| c.len() * 4).sum()
    }

    fn codes_len_bytes(&self, n: usize, num_parts: usize) -> u64 {
        let count = n as u64 * num_parts as u64;
        match self.layout {
            CodeLayout::Packed => (count * self.params.code_bits() as u64).div_ceil(8),
            CodeLayout::ByteAligned => count * (self.stored_code_bits() / 8) as u64,
        }
    }

    pub fn to_vqf_bytes(&self) -> Vec<u8> {
        let n = if self.codes.is_some() { self.n } else { 0 };
        let mut out = Vec::new();
        out.extend_from_slice(&VQF_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.push(metric_tag(self.params.metric));
        out.push(layout_tag(self.layout));
        out.extend_from_slice(&0u16.to_le_bytes());
        out.extend_from_slice(&(self.params.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.params.length as u32).to_le_bytes());
        out.extend_from_slice(&(self.num_parts() as u32).to_le_bytes());
        out.extend_from_slice(&(n as u64).to_le_bytes());
        out.extend_from_slice(&(self.d as u64).to_le_bytes());
        for book in &self.codebooks {
            for v in book {
                out.extend_from_slice(&(v.to_f64_lossy() as f32).to_le_bytes());
            }
        }
        if let Some(codes) = &self.codes {
            match self.layout {
                CodeLayout::Packed => out.extend(bitpack::pack(codes, self.params.code_bits())),
                CodeLayout::ByteAligned => {
                    let width = (self.stored_code_bits() / 8) as usize;
                    for c in codes {
                        out.extend_from_slice(&c.to_le_bytes()[..width]);
                    }
                }
            }
        }
        out
    }

    /// Reads a VQF1 file. Fitting hyper-parameters other than width, length and metric are not
    /// persisted and come back as defaults.
    pub fn from_vqf_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new("VQF1", buf);
        r.magic(&VQF_MAGIC)?;
        r.version()?;
        let metric = match r.u8()? {
            0 => Metric::Euclidean,
            1 => Metric::Cosine,
            t => return Err(r.corrupt(format!("unknown metric tag {t}"))),
        };
        let layout = match r.u8()? {
            0 => CodeLayout::Packed,
            1 => CodeLayout::ByteAligned,
            t => return Err(r.corrupt(format!("unknown code layout tag {t}"))),
        };
        if r.u16()? != 0 {
            return Err(r.corrupt("nonzero padding"));
        }
        let width = r.u32()? as usize;
        let length = r.u32()? as usize;
        let num_parts = r.u32()? as usize;
        let n = r.u64()?;
        let d = r.u64()?;
        let params = VqParams::new(width, length, metric);
        if d == 0 || d > u32::MAX as u64 {
            return Err(r.corrupt(format!("bad dimension {d}")));
        }
        params.validate(d as usize).map_err(|e| r.corrupt(e.to_string()))?;
        if num_parts != (d as usize).div_ceil(width) {
            return Err(r.corrupt(format!("{num_parts} parts cannot cover d={d} at width {width}")));
        }
        let mut codec = VqCodec {
            params,
            layout,
            n: n as usize,
            d: d as usize,
            codebooks: Vec::with_capacity(num_parts),
            effective_lengths: vec![length; num_parts],
            objectives: Vec::new(),
            codes: None,
        };
        let book_bytes = checked_len("VQF1", &[length as u64, d, 4])?;
        let code_bytes = codec.codes_len_bytes(n as usize, num_parts);
        let payload = r.payload(book_bytes + code_bytes)?;
        let (books, codes) = payload.split_at(book_bytes as usize);
        let mut off = 0;
        for p in 0..num_parts {
            let len = length * codec.part_width(p) * 4;
            let book = books[off..off + len]
                .chunks_exact(4)
                .map(|b| T::from_f64_lossy(f32::from_le_bytes(b.try_into().unwrap()) as f64))
                .collect();
            off += len;
            codec.codebooks.push(book);
        }
        if n > 0 {
            let count = n as usize * num_parts;
            let values = match layout {
                CodeLayout::Packed => bitpack::unpack(codes, params.code_bits(), count),
                CodeLayout::ByteAligned => {
                    let w = (codec.stored_code_bits() / 8) as usize;
                    codes
                        .chunks_exact(w)
                        .map(|c| {
                            let mut b = [0u8; 4];
                            b[..w].copy_from_slice(c);
                            u32::from_le_bytes(b)
                        })
                        .collect()
                }
            };
            if let Some(bad) = values.iter().find(|&&c| c as usize >= length) {
                return Err(r.corrupt(format!("code {bad} exceeds codebook length {length}")));
            }
            codec.codes = Some(values);
        }
        Ok(codec)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_vqf_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_vqf_bytes(&fs::read(path)?)
    }
}

fn nearest_in_book(metric: Metric, x: &[f64], book: &[f64], w: usize) -> u32 {
    match metric {
        Metric::Euclidean => kmeans::nearest(metric, x, book, w).0 as u32,
        Metric::Cosine => {
            let mut best = (0u32, f64::NEG_INFINITY);
            if x.iter().all(|v| *v == 0.0) {
                return 0;
            }
            for (j, c) in book.chunks_exact(w).enumerate() {
                let s = kmeans::dot(x, c);
                if s > best.1 {
                    best = (j as u32, s);
                }
            }
            best.0
        }
    }
}

fn part_columns<T: Scalar>(f: &FeatureMatrix<T>, rows: &[usize], start: usize, w: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows.len() * w);
    for &i in rows {
        out.extend(f.row(i)[start..start + w].iter().map(|v| v.to_f64_lossy()));
    }
    out
}

/// Fits one codebook per part on a uniform row sample. Parts run in parallel with independent
/// seeded streams, so the result is the same for any thread count.
pub fn fit_vq<T: Scalar>(f: &FeatureMatrix<T>, p: &VqParams) -> Result<VqCodec<T>> {
    p.validate(f.d())?;
    let n = f.n();
    if n == 0 {
        return Err(Error::Shape("cannot fit a codebook on zero rows".into()));
    }
    let take = ((p.sample_fraction(n) * n as f64).ceil() as usize).clamp(1, n);
    let rows: Vec<usize> = if take == n {
        (0..n).collect()
    } else {
        let mut rng = stream_rng(p.seed, 0x5A3);
        let mut picked = index::sample(&mut rng, n, take).into_vec();
        picked.sort_unstable();
        picked
    };
    let num_parts = f.d().div_ceil(p.width);
    let cfg = KMeansConfig {
        k: p.length,
        max_iters: p.kmeans_max_iters,
        tol: p.kmeans_tol,
        metric: p.metric,
    };
    let fitted: Vec<(Vec<T>, usize, f64)> = (0..num_parts)
        .into_par_iter()
        .map(|part| {
            let start = part * p.width;
            let w = (f.d() - start).min(p.width);
            let pts = part_columns(f, &rows, start, w);
            let out = kmeans::fit(&pts, w, &cfg, p.restarts, |r| {
                stream_rng2(p.seed, part as u64, r as u64)
            });
            let book = out.centroids.iter().map(|&v| T::from_f64_lossy(v)).collect();
            (book, out.effective_k, out.objective)
        })
        .collect();
    let mut codec = VqCodec {
        params: *p,
        layout: CodeLayout::Packed,
        n: 0,
        d: f.d(),
        codebooks: Vec::with_capacity(num_parts),
        effective_lengths: Vec::with_capacity(num_parts),
        objectives: Vec::with_capacity(num_parts),
        codes: None,
    };
    for (book, eff, obj) in fitted {
        codec.codebooks.push(book);
        codec.effective_lengths.push(eff);
        codec.objectives.push(obj);
    }
    Ok(codec)
}

/// Assigns every node's parts to their nearest codebook entry (ties to the lowest index).
pub fn encode_vq<T: Scalar>(f: &FeatureMatrix<T>, c: &VqCodec<T>) -> Result<VqCodec<T>> {
    if f.d() != c.d {
        return Err(Error::Shape(format!(
            "features have d={}, codebooks were fit for d={}",
            f.d(),
            c.d
        )));
    }
    let parts = c.num_parts();
    let books: Vec<Vec<f64>> = c
        .codebooks
        .iter()
        .map(|b| b.iter().map(|v| v.to_f64_lossy()).collect())
        .collect();
    let codes: Vec<u32> = (0..f.n())
        .into_par_iter()
        .flat_map_iter(|i| {
            let row: Vec<f64> = f.row(i).iter().map(|v| v.to_f64_lossy()).collect();
            let books = &books;
            (0..parts).map(move |part| {
                let start = part * c.params.width;
                let w = c.part_width(part);
                nearest_in_book(c.params.metric, &row[start..start + w], &books[part], w)
            })
        })
        .collect();
    let mut out = c.clone();
    out.n = f.n();
    out.codes = Some(codes);
    Ok(out)
}

/// Looks up codebook entries for the selected rows, in the order given.
pub fn decode_vq<T: Scalar>(c: &VqCodec<T>, rows: Rows<'_>) -> Result<FeatureMatrix<T>> {
    let codes = c.codes.as_ref().ok_or(Error::CodesMissing)?;
    let ids = rows.resolve(c.n)?;
    let parts = c.num_parts();
    let mut values = Vec::with_capacity(ids.len() * c.d);
    for &i in &ids {
        for part in 0..parts {
            values.extend_from_slice(c.entry(part, codes[i * parts + part] as usize));
        }
    }
    FeatureMatrix::new(ids.len(), c.d, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VqCompressionRatio {
    /// `width * b / log2(length)`.
    pub theoretical: f64,
    /// `width * b / stored bits per code`.
    pub realized: f64,
    /// Codebook storage, excluded from both ratios.
    pub codebook_bytes: usize,
}

pub fn vq_compression_ratio<T: Scalar>(c: &VqCodec<T>, elem_bits: u32) -> VqCompressionRatio {
    let raw = c.params.width as f64 * elem_bits as f64;
    VqCompressionRatio {
        theoretical: raw / (c.params.length as f64).log2(),
        realized: raw / c.stored_code_bits() as f64,
        codebook_bytes: c.codebook_bytes(),
    }
}

/// Compression ratios from parameters alone.
pub fn vq_ratio_for(width: usize, length: usize, layout: CodeLayout, elem_bits: u32) -> (f64, f64) {
    let p = VqParams::new(width, length, Metric::Euclidean);
    let bits = p.code_bits();
    let stored = match layout {
        CodeLayout::Packed => bits,
        CodeLayout::ByteAligned => 8 * bits.div_ceil(8),
    };
    let raw = width as f64 * elem_bits as f64;
    (raw / (length as f64).log2(), raw / stored as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_rows() -> FeatureMatrix<f32> {
        FeatureMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0, 1.0],
            vec![0.0, 1.0, 1.0, 0.0],
        ])
        .unwrap()
    }

    fn params(width: usize, length: usize, metric: Metric) -> VqParams {
        VqParams {
            fit_sample_fraction: Some(1.0),
            ..VqParams::new(width, length, metric)
        }
    }

    #[test]
    fn hand_example_is_lossless() {
        let f = three_rows();
        let c = fit_vq(&f, &params(2, 2, Metric::Euclidean)).unwrap();
        assert_eq!(c.objective(), 0.0);
        let mut p0: Vec<&[f32]> = (0..2).map(|j| c.entry(0, j)).collect();
        p0.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(p0, vec![&[0.0, 1.0][..], &[1.0, 0.0][..]]);
        let e = encode_vq(&f, &c).unwrap();
        assert_eq!(e.code(0, 0), e.code(1, 0));
        assert_ne!(e.code(0, 0), e.code(2, 0));
        assert_eq!(decode_vq(&e, Rows::All).unwrap(), f);
    }

    #[test]
    fn codebook_entry_encodes_to_itself() {
        let f = FeatureMatrix::from_rows(&[vec![0.3f32, -1.0], vec![2.0, 2.0], vec![-4.0, 0.5]]).unwrap();
        let c = fit_vq(&f, &params(2, 3, Metric::Euclidean)).unwrap();
        for j in 0..3 {
            let probe = FeatureMatrix::new(1, 2, c.entry(0, j).to_vec()).unwrap();
            assert_eq!(encode_vq(&probe, &c).unwrap().code(0, 0), Some(j as u32));
        }
    }

    #[test]
    fn cosine_scale_invariance_and_unit_decode() {
        let f = FeatureMatrix::from_rows(&[
            vec![1.0f32, 0.2, 0.0],
            vec![0.0, 1.0, 0.1],
            vec![0.5, 0.5, 3.0],
            vec![0.9, 0.3, 0.1],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        let c = fit_vq(&f, &params(3, 2, Metric::Cosine)).unwrap();
        let e = encode_vq(&f, &c).unwrap();
        let scaled = FeatureMatrix::new(
            5,
            3,
            f.values().iter().map(|v| v * 5.0).collect(),
        )
        .unwrap();
        let es = encode_vq(&scaled, &c).unwrap();
        assert_eq!(e.codes(), es.codes());
        assert_eq!(e.code(4, 0), Some(0));
        let dec = decode_vq(&e, Rows::All).unwrap();
        for i in 0..5 {
            let norm: f32 = dec.row(i).iter().map(|v| v * v).sum::<f32>().sqrt();
            assert!((norm - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn narrow_last_part() {
        let f = FeatureMatrix::from_rows(&[
            vec![1.0f32, 2.0, 3.0, 4.0, 5.0],
            vec![5.0, 4.0, 3.0, 2.0, 1.0],
        ])
        .unwrap();
        let c = fit_vq(&f, &params(2, 2, Metric::Euclidean)).unwrap();
        assert_eq!(c.num_parts(), 3);
        assert_eq!(c.part_width(2), 1);
        assert_eq!(c.codebook(2).len(), 2);
        let e = encode_vq(&f, &c).unwrap();
        assert_eq!(decode_vq(&e, Rows::All).unwrap(), f);
    }

    #[test]
    fn truncated_codebook_is_padded() {
        let f = FeatureMatrix::from_rows(&[vec![1.0f32, 1.0], vec![1.0, 1.0]]).unwrap();
        let c = fit_vq(&f, &params(2, 4, Metric::Euclidean)).unwrap();
        assert_eq!(c.effective_lengths(), &[1]);
        assert!((0..4).all(|j| c.entry(0, j) == [1.0, 1.0]));
        assert_eq!(encode_vq(&f, &c).unwrap().codes(), Some(&[0, 0][..]));
    }

    #[test]
    fn errors() {
        let f = three_rows();
        assert!(fit_vq(&f, &params(5, 2, Metric::Euclidean)).is_err());
        assert!(fit_vq(&f, &params(2, 1, Metric::Euclidean)).is_err());
        assert!(fit_vq(&f, &params(2, MAX_CODEBOOK_LENGTH + 1, Metric::Euclidean)).is_err());
        let mut bad = params(2, 2, Metric::Euclidean);
        bad.fit_sample_fraction = Some(0.0);
        assert!(fit_vq(&f, &bad).is_err());
        let c = fit_vq(&f, &params(2, 2, Metric::Euclidean)).unwrap();
        assert!(matches!(decode_vq(&c, Rows::All), Err(Error::CodesMissing)));
        let narrow = FeatureMatrix::from_rows(&[vec![1.0f32, 2.0]]).unwrap();
        assert!(matches!(encode_vq(&narrow, &c), Err(Error::Shape(_))));
        let e = encode_vq(&f, &c).unwrap();
        assert!(matches!(
            decode_vq(&e, Rows::Ids(&[0, 3])),
            Err(Error::RowOutOfRange { row: 3, n: 3 })
        ));
    }

    #[test]
    fn vqf_round_trip_both_layouts() {
        let f: FeatureMatrix<f32> = crate::features::generate_features(
            crate::features::FeatureKind::Gaussian { mean: 0.0, std: 1.0 },
            40,
            7,
            2,
        )
        .unwrap();
        for layout in [CodeLayout::Packed, CodeLayout::ByteAligned] {
            let mut c = fit_vq(&f, &params(3, 5, Metric::Cosine)).unwrap();
            c.layout = layout;
            let e = encode_vq(&f, &c).unwrap();
            let bytes = e.to_vqf_bytes();
            let back = VqCodec::<f32>::from_vqf_bytes(&bytes).unwrap();
            assert_eq!(back.codes(), e.codes());
            assert_eq!(back.to_vqf_bytes(), bytes);
            assert_eq!(decode_vq(&back, Rows::All).unwrap(), decode_vq(&e, Rows::All).unwrap());
            assert!(matches!(
                VqCodec::<f32>::from_vqf_bytes(&bytes[..bytes.len() - 1]),
                Err(Error::SizeMismatch { .. })
            ));
            let fit_only = VqCodec::<f32>::from_vqf_bytes(&c.to_vqf_bytes()).unwrap();
            assert!(fit_only.codes().is_none());
            assert_eq!(encode_vq(&f, &fit_only).unwrap().codes(), e.codes());
        }
    }

    #[test]
    fn ratios() {
        let (t, r) = vq_ratio_for(16, 2048, CodeLayout::ByteAligned, 32);
        assert!((t - 46.5).abs() < 0.05);
        assert_eq!(r, 32.0);
        let (t, r) = vq_ratio_for(100, 16384, CodeLayout::Packed, 32);
        assert!((t - 228.6).abs() < 0.05);
        assert!((r - t).abs() < 1e-12);
        let (t, r) = vq_ratio_for(8, 1000, CodeLayout::Packed, 32);
        assert!(r < t);
        assert_eq!(VqParams::new(1, 2, Metric::Cosine).code_bits(), 1);
        assert_eq!(VqParams::new(1, 3, Metric::Cosine).code_bits(), 2);
        assert_eq!(VqParams::new(1, 256, Metric::Cosine).code_bits(), 8);
        assert_eq!(VqParams::new(1, 257, Metric::Cosine).code_bits(), 9);
    }
}
