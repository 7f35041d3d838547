use alloc::vec::Vec;

use super::bit_len;
use crate::codec::{ByteReader, ByteWriter, Decode, Encode};
use crate::error::{Error, Result};

/// Fixed-width packed unsigned integers.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntVector {
    words: Vec<u64>,
    len: usize,
    width: u32,
}

impl IntVector {
    pub fn with_width(width: u32) -> Self {
        assert!(width <= 64, "width {width} > 64");
        IntVector {
            words: Vec::new(),
            len: 0,
            width,
        }
    }

    /// Packs `values` with the smallest width that holds their maximum.
    pub fn from_slice(values: &[u64]) -> Self {
        let width = values.iter().copied().max().map_or(0, bit_len);
        let mut v = IntVector::with_width(width);
        for &x in values {
            v.push(x);
        }
        v
    }

    pub fn push(&mut self, value: u64) {
        debug_assert!(self.width == 64 || value >> self.width == 0);
        let w = self.width as usize;
        if w == 0 {
            self.len += 1;
            return;
        }
        let bit = self.len * w;
        let need = (bit + w).div_ceil(64);
        if self.words.len() < need {
            self.words.resize(need, 0);
        }
        let (i, off) = (bit / 64, bit % 64);
        self.words[i] |= value << off;
        if off + w > 64 {
            self.words[i + 1] |= value >> (64 - off);
        }
        self.len += 1;
    }

    #[inline]
    pub fn get(&self, idx: usize) -> u64 {
        assert!(
            idx < self.len,
            "index {idx} out of range for length {}",
            self.len
        );
        let w = self.width as usize;
        if w == 0 {
            return 0;
        }
        let bit = idx * w;
        let (i, off) = (bit / 64, bit % 64);
        let mask = if w == 64 { u64::MAX } else { (1u64 << w) - 1 };
        let mut v = self.words[i] >> off;
        if off + w > 64 {
            v |= self.words[i + 1] << (64 - off);
        }
        v & mask
    }

    pub fn try_get(&self, idx: usize) -> Result<u64> {
        if idx < self.len {
            Ok(self.get(idx))
        } else {
            Err(Error::OutOfRange {
                index: idx,
                len: self.len,
            })
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn size_bytes(&self) -> usize {
        self.words.len() * 8
    }
}

impl Encode for IntVector {
    fn encode(&self, w: &mut ByteWriter) {
        w.put_u8(self.width as u8);
        w.put_u64(self.len as u64);
        let used = (self.len * self.width as usize).div_ceil(64);
        for &word in &self.words[..used] {
            w.put_u64(word);
        }
    }
}

impl Decode for IntVector {
    fn decode(r: &mut ByteReader<'_>) -> Result<Self> {
        let width = r.get_u8()? as u32;
        if width > 64 {
            return Err(Error::Corrupt("int vector width"));
        }
        let len = usize::try_from(r.get_u64()?).map_err(|_| Error::Corrupt("int vector length"))?;
        let n = len
            .checked_mul(width as usize)
            .ok_or(Error::Corrupt("int vector length"))?
            .div_ceil(64);
        if n.saturating_mul(8) > r.remaining() {
            return Err(Error::Corrupt("int vector length exceeds data"));
        }
        let mut words = Vec::with_capacity(n);
        for _ in 0..n {
            words.push(r.get_u64()?);
        }
        Ok(IntVector { words, len, width })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_width_holds_zeros() {
        let v = IntVector::from_slice(&[0, 0, 0]);
        assert_eq!(v.width(), 0);
        assert_eq!(v.len(), 3);
        assert_eq!(v.get(2), 0);
    }

    proptest! {
        #[test]
        fn packs_and_reads_back(values in proptest::collection::vec(any::<u64>(), 0..200), shift in 0u32..64) {
            let values: Vec<u64> = values.into_iter().map(|v| v >> shift).collect();
            let v = IntVector::from_slice(&values);
            for (i, &x) in values.iter().enumerate() {
                prop_assert_eq!(v.get(i), x);
            }
            let mut w = ByteWriter::new();
            v.encode(&mut w);
            let bytes = w.into_inner();
            let back = IntVector::decode(&mut ByteReader::new(&bytes)).unwrap();
            prop_assert_eq!(back.iter().collect::<Vec<_>>(), values);
        }
    }
}
