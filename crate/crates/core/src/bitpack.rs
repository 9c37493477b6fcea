//! Fixed-width bit packing, MSB-first within each byte.
//!
//! Code `i` occupies stream bits `[i * bits, (i + 1) * bits)`; stream bit `j` lives in byte
//! `j / 8` at bit position `7 - j % 8`. The most significant bit of each code is written first.
//! Trailing bits of the last byte are zero.

/// Number of bytes needed for `count` codes of `bits` bits.
pub fn packed_len(count: usize, bits: u32) -> usize {
    (count as u64 * bits as u64).div_ceil(8) as usize
}

/// Streaming writer for fixed-width codes.
#[derive(Debug)]
pub struct BitWriter {
    bits: u32,
    buf: Vec<u8>,
    acc: u64,
    filled: u32,
}

impl BitWriter {
    pub fn new(bits: u32, capacity_codes: usize) -> Self {
        assert!((1..=32).contains(&bits), "code width must be in 1..=32");
        Self {
            bits,
            buf: Vec::with_capacity(packed_len(capacity_codes, bits)),
            acc: 0,
            filled: 0,
        }
    }

    pub fn push(&mut self, code: u32) {
        debug_assert!(self.bits == 32 || code >> self.bits == 0, "code overflows width");
        self.acc = (self.acc << self.bits) | code as u64;
        self.filled += self.bits;
        while self.filled >= 8 {
            self.filled -= 8;
            self.buf.push((self.acc >> self.filled) as u8);
        }
        self.acc &= (1u64 << self.filled) - 1;
    }

    pub fn finish(mut self) -> Vec<u8> {
        if self.filled > 0 {
            self.buf.push((self.acc << (8 - self.filled)) as u8);
        }
        self.buf
    }
}

pub fn pack(codes: &[u32], bits: u32) -> Vec<u8> {
    let mut w = BitWriter::new(bits, codes.len());
    for &c in codes {
        w.push(c);
    }
    w.finish()
}

/// Random access to code `index`. Panics if the code lies past the end of `bytes`.
pub fn get(bytes: &[u8], bits: u32, index: usize) -> u32 {
    let start = index as u64 * bits as u64;
    let first = (start / 8) as usize;
    let last = ((start + bits as u64 - 1) / 8) as usize;
    let mut acc = 0u64;
    for &b in &bytes[first..=last] {
        acc = (acc << 8) | b as u64;
    }
    let trailing = (last as u64 + 1) * 8 - (start + bits as u64);
    ((acc >> trailing) & ((1u64 << bits) - 1)) as u32
}

/// Unpacks `count` consecutive codes starting at code index `offset`.
pub fn unpack_range(bytes: &[u8], bits: u32, offset: usize, count: usize, out: &mut Vec<u32>) {
    let mask = (1u64 << bits) - 1;
    let bitpos = offset as u64 * bits as u64;
    let mut byte = (bitpos / 8) as usize;
    let mut acc = 0u64;
    let mut avail = 0u32;
    if count > 0 {
        let skip = (bitpos % 8) as u32;
        acc = bytes[byte] as u64 & ((1u64 << (8 - skip)) - 1);
        avail = 8 - skip;
        byte += 1;
    }
    for _ in 0..count {
        while avail < bits {
            acc = (acc << 8) | bytes[byte] as u64;
            byte += 1;
            avail += 8;
        }
        avail -= bits;
        out.push(((acc >> avail) & mask) as u32);
        acc &= (1u64 << avail) - 1;
    }
}

pub fn unpack(bytes: &[u8], bits: u32, count: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(count);
    unpack_range(bytes, bits, 0, count, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn msb_first_layout() {
        // 3-bit codes 6 (110) and 0 (000), then 5 (101): 110000 10|1 -> 0xC2, 0x80
        assert_eq!(pack(&[6, 0, 5], 3), vec![0b1100_0010, 0b1000_0000]);
        assert_eq!(pack(&[1, 0, 1, 1, 0, 0, 0, 1, 1], 1), vec![0b1011_0001, 0b1000_0000]);
    }

    #[test]
    fn lengths() {
        assert_eq!(packed_len(0, 3), 0);
        assert_eq!(packed_len(3, 3), 2);
        assert_eq!(packed_len(8, 1), 1);
        assert_eq!(packed_len(9, 1), 2);
        assert_eq!(pack(&[7; 9], 3).len(), packed_len(9, 3));
    }

    proptest! {
        #[test]
        fn pack_unpack_identity(bits in 1u32..=16, raw in proptest::collection::vec(any::<u32>(), 0..200)) {
            let codes: Vec<u32> = raw.iter().map(|c| c & ((1u32 << bits) - 1)).collect();
            let bytes = pack(&codes, bits);
            prop_assert_eq!(bytes.len(), packed_len(codes.len(), bits));
            prop_assert_eq!(&unpack(&bytes, bits, codes.len()), &codes);
            for (i, &c) in codes.iter().enumerate() {
                prop_assert_eq!(get(&bytes, bits, i), c);
            }
            if codes.len() > 3 {
                let mut part = Vec::new();
                unpack_range(&bytes, bits, 2, codes.len() - 3, &mut part);
                prop_assert_eq!(&part[..], &codes[2..codes.len() - 1]);
            }
        }
    }
}
