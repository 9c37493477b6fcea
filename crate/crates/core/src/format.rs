//! Little-endian header plumbing shared by the binary file formats.

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

pub const FMAT_MAGIC: [u8; 8] = *b"FMAT1\0\0\0";
pub const CSRG_MAGIC: [u8; 8] = *b"CSRG1\0\0\0";
pub const SQF_MAGIC: [u8; 8] = *b"SQF1\0\0\0\0";
pub const VQF_MAGIC: [u8; 8] = *b"VQF1\0\0\0\0";

/// Bounds-checked cursor over a byte buffer.
pub(crate) struct ByteReader<'a> {
    format: &'static str,
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(format: &'static str, buf: &'a [u8]) -> Self {
        Self { format, buf, pos: 0 }
    }

    pub fn corrupt(&self, reason: impl Into<String>) -> Error {
        Error::CorruptHeader {
            format: self.format,
            reason: reason.into(),
        }
    }

    pub fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < len {
            return Err(self.corrupt(format!(
                "header truncated at byte {} (need {len} more)",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    pub fn magic(&mut self, expected: &[u8; 8]) -> Result<()> {
        let m = self.take(8)?;
        if m != expected {
            return Err(self.corrupt(format!("bad magic {m:02x?}")));
        }
        Ok(())
    }

    pub fn version(&mut self) -> Result<u32> {
        let v = self.u32()?;
        if v != FORMAT_VERSION {
            return Err(self.corrupt(format!("unsupported version {v}")));
        }
        Ok(v)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// Everything after the header; must be exactly `expected` bytes long.
    pub fn payload(&mut self, expected: u64) -> Result<&'a [u8]> {
        let rest = &self.buf[self.pos..];
        if rest.len() as u64 != expected {
            return Err(Error::SizeMismatch {
                format: self.format,
                expected,
                actual: rest.len() as u64,
            });
        }
        self.pos = self.buf.len();
        Ok(rest)
    }
}

pub(crate) fn checked_len(format: &'static str, parts: &[u64]) -> Result<u64> {
    parts
        .iter()
        .try_fold(1u64, |acc, &p| acc.checked_mul(p))
        .ok_or_else(|| Error::CorruptHeader {
            format,
            reason: "dimensions overflow".into(),
        })
}
