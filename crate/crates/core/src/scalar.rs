//! Element types the codecs and graph math are generic over.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// A floating-point feature element with a fixed little-endian storage width.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Default + Debug + Send + Sync + 'static
{
    /// Bits per stored element (`b` in compression-ratio arithmetic).
    const BITS: u32;

    fn write_le(self, out: &mut Vec<u8>);

    /// Decodes one element from exactly `BITS / 8` bytes.
    fn read_le(bytes: &[u8]) -> Self;

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }

    /// Raw bit pattern, used for exact equality and ordering of sub-vectors.
    fn bit_key(self) -> u64;
}

impl Scalar for f32 {
    const BITS: u32 = 32;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes[..4].try_into().expect("4 bytes"))
    }

    fn bit_key(self) -> u64 {
        // +0.0 and -0.0 compare equal as features
        if self == 0.0 {
            0
        } else {
            self.to_bits() as u64
        }
    }
}

impl Scalar for f64 {
    const BITS: u32 = 64;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes[..8].try_into().expect("8 bytes"))
    }

    fn bit_key(self) -> u64 {
        if self == 0.0 {
            0
        } else {
            self.to_bits()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn le_round_trip() {
        let mut buf = Vec::new();
        1.5f32.write_le(&mut buf);
        (-2.25f64).write_le(&mut buf);
        assert_eq!(buf.len(), 12);
        assert_eq!(f32::read_le(&buf[..4]), 1.5);
        assert_eq!(f64::read_le(&buf[4..]), -2.25);
    }

    #[test]
    fn signed_zero_shares_key() {
        assert_eq!(0.0f32.bit_key(), (-0.0f32).bit_key());
        assert_ne!(1.0f64.bit_key(), (-1.0f64).bit_key());
    }
}
