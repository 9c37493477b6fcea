//! Dense node-feature storage and the FMAT1 file format.
//!
//! FMAT1 layout (little-endian): magic `"FMAT1\0\0\0"`, version `u32 = 1`, `elem_bits u32`,
//! `n u64`, `d u64`, then `n * d` row-major elements of `elem_bits` bits.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use crate::error::{Error, Result};
use crate::format::{checked_len, ByteReader, FMAT_MAGIC, FORMAT_VERSION};
use crate::rng::stream_rng;
use crate::scalar::Scalar;

pub const FMAT_HEADER_LEN: usize = 32;

/// Selects which row subset an operation touches.
#[derive(Debug, Clone, Copy)]
pub enum Rows<'a> {
    All,
    Ids(&'a [usize]),
}

impl Rows<'_> {
    pub(crate) fn resolve(&self, n: usize) -> Result<Vec<usize>> {
        match self {
            Rows::All => Ok((0..n).collect()),
            Rows::Ids(ids) => {
                if let Some(&row) = ids.iter().find(|&&r| r >= n) {
                    return Err(Error::RowOutOfRange { row, n });
                }
                Ok(ids.to_vec())
            }
        }
    }
}

/// An `n x d` row-major matrix of finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    n: usize,
    d: usize,
    values: Vec<T>,
}

impl<T: Scalar> FeatureMatrix<T> {
    pub fn new(n: usize, d: usize, values: Vec<T>) -> Result<Self> {
        if n.checked_mul(d) != Some(values.len()) {
            return Err(Error::Shape(format!(
                "{} values cannot form a {n}x{d} matrix",
                values.len()
            )));
        }
        if d == 0 && n > 0 {
            return Err(Error::Shape("feature dimension must be at least 1".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / d,
                col: pos % d,
            });
        }
        Ok(Self { n, d, values })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::new(rows.len(), d, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn elem_bits(&self) -> u32 {
        T::BITS
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.d + col]
    }

    pub fn gather(&self, rows: Rows<'_>) -> Result<Self> {
        let ids = rows.resolve(self.n)?;
        let mut values = Vec::with_capacity(ids.len() * self.d);
        for i in &ids {
            values.extend_from_slice(self.row(*i));
        }
        Ok(Self {
            n: ids.len(),
            d: self.d,
            values,
        })
    }

    pub fn cast<U: Scalar>(&self) -> Result<FeatureMatrix<U>> {
        FeatureMatrix::new(
            self.n,
            self.d,
            self.values
                .iter()
                .map(|v| U::from_f64_lossy(v.to_f64_lossy()))
                .collect(),
        )
    }

    /// Raw payload size in bytes (`n * d * b / 8`).
    pub fn payload_bytes(&self) -> u64 {
        (self.n * self.d) as u64 * T::BITS as u64 / 8
    }

    pub fn to_fmat_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(FMAT_HEADER_LEN + self.payload_bytes() as usize);
        out.extend_from_slice(&FMAT_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&T::BITS.to_le_bytes());
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&(self.d as u64).to_le_bytes());
        for v in &self.values {
            v.write_le(&mut out);
        }
        out
    }

    pub fn from_fmat_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new("FMAT1", buf);
        r.magic(&FMAT_MAGIC)?;
        r.version()?;
        let bits = r.u32()?;
        if bits != T::BITS {
            return Err(r.corrupt(format!(
                "elem_bits {bits} does not match requested {}-bit elements",
                T::BITS
            )));
        }
        let n = r.u64()?;
        let d = r.u64()?;
        let expected = checked_len("FMAT1", &[n, d, bits as u64 / 8])?;
        let payload = r.payload(expected)?;
        let width = (bits / 8) as usize;
        let values = payload.chunks_exact(width).map(T::read_le).collect();
        Self::new(n as usize, d as usize, values)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_fmat_bytes())?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v:?}")).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map(T::from_f64_lossy)
                        .map_err(|e| Error::Shape(format!("line {}: {e}", i + 1)))
                })
                .collect::<Result<Vec<T>>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }
}

/// On-disk feature encodings accepted by [`load_features`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureLayout {
    Fmat1,
    Csv,
}

impl FeatureLayout {
    /// Guesses from the file extension; anything other than `.csv` is FMAT1.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => FeatureLayout::Csv,
            _ => FeatureLayout::Fmat1,
        }
    }
}

pub fn load_features<T: Scalar>(
    path: impl AsRef<Path>,
    layout: FeatureLayout,
) -> Result<FeatureMatrix<T>> {
    match layout {
        FeatureLayout::Fmat1 => FeatureMatrix::from_fmat_bytes(&fs::read(path)?),
        FeatureLayout::Csv => FeatureMatrix::from_csv(&fs::read_to_string(path)?),
    }
}

pub fn save_features<T: Scalar>(f: &FeatureMatrix<T>, path: impl AsRef<Path>) -> Result<()> {
    f.save(path)
}

/// Synthetic feature distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureKind {
    /// Every element iid `N(mean, std^2)`. A nonzero mean correlates all rows.
    Gaussian { mean: f64, std: f64 },
    /// `±exp(N(mu, sigma^2))` with a fair random sign.
    LogNormal { mu: f64, sigma: f64 },
    /// Each row is a one-hot vector over the first `classes` dimensions.
    OneHot { classes: usize },
}

pub fn generate_features<T: Scalar>(
    kind: FeatureKind,
    n: usize,
    d: usize,
    seed: u64,
) -> Result<FeatureMatrix<T>> {
    let mut rng = stream_rng(seed, 0xFEA7);
    let mut values = Vec::with_capacity(n * d);
    match kind {
        FeatureKind::Gaussian { mean, std } => {
            let dist = Normal::new(mean, std).map_err(|e| Error::InvalidParam(e.to_string()))?;
            values.extend((0..n * d).map(|_| T::from_f64_lossy(dist.sample(&mut rng))));
        }
        FeatureKind::LogNormal { mu, sigma } => {
            let dist =
                LogNormal::new(mu, sigma).map_err(|e| Error::InvalidParam(e.to_string()))?;
            values.extend((0..n * d).map(|_| {
                let m = dist.sample(&mut rng);
                T::from_f64_lossy(if rng.random::<bool>() { m } else { -m })
            }));
        }
        FeatureKind::OneHot { classes } => {
            if classes == 0 || classes > d {
                return Err(Error::InvalidParam(format!(
                    "one-hot classes must be in 1..={d}, got {classes}"
                )));
            }
            for _ in 0..n {
                let hot = rng.random_range(0..classes);
                values.extend((0..d).map(|j| if j == hot { T::one() } else { T::zero() }));
            }
        }
    }
    FeatureMatrix::new(n, d, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FeatureMatrix<f32> {
        FeatureMatrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap()
    }

    #[test]
    fn fmat_round_trip_is_bit_identical() {
        let f = sample();
        let bytes = f.to_fmat_bytes();
        assert_eq!(bytes.len(), FMAT_HEADER_LEN + 24);
        let back = FeatureMatrix::<f32>::from_fmat_bytes(&bytes).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.to_fmat_bytes(), bytes);
    }

    #[test]
    fn truncated_payload_is_size_mismatch() {
        let bytes = sample().to_fmat_bytes();
        let err = FeatureMatrix::<f32>::from_fmat_bytes(&bytes[..bytes.len() - 5]).unwrap_err();
        assert!(matches!(err, Error::SizeMismatch { expected: 24, actual: 19, .. }), "{err}");
    }

    #[test]
    fn nan_reports_position() {
        let mut bytes = sample().to_fmat_bytes();
        bytes[FMAT_HEADER_LEN + 4..FMAT_HEADER_LEN + 8].copy_from_slice(&f32::NAN.to_le_bytes());
        let err = FeatureMatrix::<f32>::from_fmat_bytes(&bytes).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 0, col: 1 }), "{err}");
    }

    #[test]
    fn bad_magic_and_width() {
        let mut bytes = sample().to_fmat_bytes();
        assert!(matches!(
            FeatureMatrix::<f64>::from_fmat_bytes(&bytes),
            Err(Error::CorruptHeader { .. })
        ));
        bytes[0] = b'X';
        assert!(matches!(
            FeatureMatrix::<f32>::from_fmat_bytes(&bytes),
            Err(Error::CorruptHeader { .. })
        ));
        assert!(FeatureMatrix::<f32>::from_fmat_bytes(&bytes[..10]).is_err());
    }

    #[test]
    fn csv_and_gather() {
        let f = FeatureMatrix::<f64>::from_csv("1,2\n# comment\n3,4\n5, 6\n").unwrap();
        assert_eq!((f.n(), f.d()), (3, 2));
        let g = f.gather(Rows::Ids(&[2, 0])).unwrap();
        assert_eq!(g.values(), &[5.0, 6.0, 1.0, 2.0]);
        assert!(f.gather(Rows::Ids(&[3])).is_err());
        assert_eq!(FeatureMatrix::<f64>::from_csv(&f.to_csv()).unwrap(), f);
    }

    #[test]
    fn generators_are_seeded() {
        let a: FeatureMatrix<f32> =
            generate_features(FeatureKind::LogNormal { mu: -2.0, sigma: 1.0 }, 10, 4, 3).unwrap();
        let b: FeatureMatrix<f32> =
            generate_features(FeatureKind::LogNormal { mu: -2.0, sigma: 1.0 }, 10, 4, 3).unwrap();
        assert_eq!(a, b);
        let h: FeatureMatrix<f32> =
            generate_features(FeatureKind::OneHot { classes: 3 }, 20, 5, 1).unwrap();
        for i in 0..20 {
            let row = h.row(i);
            assert_eq!(row.iter().filter(|&&v| v == 1.0).count(), 1);
            assert!(row[3..].iter().all(|&v| v == 0.0));
        }
    }
}
