use alloc::vec::Vec;

use super::{bit_len, BitVector, BitVectorBuilder, IntVector};
use crate::codec::{ByteReader, ByteWriter, Decode, Encode};
use crate::error::{Error, Result};

/// Direct-access codes: each value is cut into `chunk_width`-bit chunks, the
/// `ℓ`-th chunks of all values long enough are stored together at level `ℓ`,
/// and a bitvector per level marks which values continue to the next one.
/// `access(i)` follows the value down with one `rank` per level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DacSequence {
    len: usize,
    chunk_width: u32,
    chunks: Vec<IntVector>,
    more: Vec<BitVector>,
}

impl DacSequence {
    pub const DEFAULT_CHUNK_WIDTH: u32 = 8;

    pub fn new(values: &[u64], chunk_width: u32) -> Result<Self> {
        if !(1..=64).contains(&chunk_width) {
            return Err(Error::InvalidConfig("DAC chunk width must be in 1..=64"));
        }
        let max_bits = values.iter().copied().max().map_or(0, bit_len);
        let levels = if values.is_empty() {
            0
        } else {
            max_bits.div_ceil(chunk_width).max(1) as usize
        };
        let mask = if chunk_width == 64 {
            u64::MAX
        } else {
            (1u64 << chunk_width) - 1
        };
        let mut chunks = Vec::with_capacity(levels);
        let mut more = Vec::with_capacity(levels.saturating_sub(1));
        let mut current: Vec<u64> = values.to_vec();
        for level in 0..levels {
            let mut ints = IntVector::with_width(chunk_width);
            let last = level + 1 == levels;
            let mut flags = BitVectorBuilder::with_capacity(current.len());
            let mut next = Vec::new();
            for &v in &current {
                ints.push(v & mask);
                let rest = if chunk_width == 64 {
                    0
                } else {
                    v >> chunk_width
                };
                if !last {
                    flags.push(rest != 0);
                    if rest != 0 {
                        next.push(rest);
                    }
                }
            }
            chunks.push(ints);
            if !last {
                more.push(flags.build());
            }
            current = next;
        }
        Ok(DacSequence {
            len: values.len(),
            chunk_width,
            chunks,
            more,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn levels(&self) -> usize {
        self.chunks.len()
    }

    pub fn chunk_width(&self) -> u32 {
        self.chunk_width
    }

    /// The `i`-th value. Panics when out of range; see [`Self::access`].
    pub fn get(&self, i: usize) -> u64 {
        assert!(
            i < self.len,
            "index {i} out of range for length {}",
            self.len
        );
        let mut pos = i;
        let mut value = 0u64;
        for level in 0..self.chunks.len() {
            value |= self.chunks[level].get(pos) << (level as u32 * self.chunk_width);
            match self.more.get(level) {
                Some(flags) if flags.get(pos) => pos = flags.rank1(pos),
                _ => break,
            }
        }
        value
    }

    pub fn access(&self, i: usize) -> Result<u64> {
        if i < self.len {
            Ok(self.get(i))
        } else {
            Err(Error::OutOfRange {
                index: i,
                len: self.len,
            })
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn size_bytes(&self) -> usize {
        self.chunks.iter().map(IntVector::size_bytes).sum::<usize>()
            + self.more.iter().map(BitVector::size_bytes).sum::<usize>()
    }
}

impl Encode for DacSequence {
    fn encode(&self, w: &mut ByteWriter) {
        w.put_u64(self.len as u64);
        w.put_u8(self.chunk_width as u8);
        w.put_u8(self.chunks.len() as u8);
        for c in &self.chunks {
            c.encode(w);
        }
        for m in &self.more {
            m.encode(w);
        }
    }
}

impl Decode for DacSequence {
    fn decode(r: &mut ByteReader<'_>) -> Result<Self> {
        let len = usize::try_from(r.get_u64()?).map_err(|_| Error::Corrupt("dac length"))?;
        let chunk_width = r.get_u8()? as u32;
        let levels = r.get_u8()? as usize;
        if !(1..=64).contains(&chunk_width) {
            return Err(Error::Corrupt("dac chunk width"));
        }
        if (len == 0) != (levels == 0) {
            return Err(Error::Corrupt("dac level count"));
        }
        let mut chunks = Vec::with_capacity(levels);
        for _ in 0..levels {
            let c = IntVector::decode(r)?;
            if c.width() != chunk_width {
                return Err(Error::Corrupt("dac chunk width mismatch"));
            }
            chunks.push(c);
        }
        let mut more = Vec::with_capacity(levels.saturating_sub(1));
        for level in 0..levels.saturating_sub(1) {
            let m = BitVector::decode(r)?;
            if m.len() != chunks[level].len() || m.count_ones() != chunks[level + 1].len() {
                return Err(Error::Corrupt("dac level sizes"));
            }
            more.push(m);
        }
        if chunks.first().is_some_and(|c| c.len() != len) {
            return Err(Error::Corrupt("dac first level size"));
        }
        Ok(DacSequence {
            len,
            chunk_width,
            chunks,
            more,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn small_examples() {
        let d = DacSequence::new(&[5, 300, 7], 8).unwrap();
        assert_eq!(d.get(1), 300);
        assert_eq!(d.levels(), 2);

        let z = DacSequence::new(&[0, 0, 0], 8).unwrap();
        assert_eq!(z.levels(), 1);
        assert_eq!(z.get(2), 0);

        let s = DacSequence::new(&[1, 2, 3], 8).unwrap();
        assert_eq!(s.get(0), 1);

        // 2^16 has 17 significant bits -> ceil(17 / 8) = 3 levels.
        let big = DacSequence::new(&[1 << 16], 8).unwrap();
        assert_eq!(big.levels(), 3);
        assert_eq!(big.get(0), 65536);
    }

    #[test]
    fn empty_and_errors() {
        let d = DacSequence::new(&[], 8).unwrap();
        assert!(d.is_empty());
        assert_eq!(d.levels(), 0);
        assert_eq!(d.access(0), Err(Error::OutOfRange { index: 0, len: 0 }));
        assert!(DacSequence::new(&[1], 0).is_err());
        assert_eq!(
            DacSequence::new(&[u64::MAX; 3], 64).unwrap().get(2),
            u64::MAX
        );
    }

    proptest! {
        #[test]
        fn roundtrip(values in proptest::collection::vec(any::<u64>(), 0..300), shift in 0u32..64, w in 1u32..=16) {
            let values: Vec<u64> = values.into_iter().map(|v| v >> shift).collect();
            let d = DacSequence::new(&values, w).unwrap();
            let expected_levels = if values.is_empty() { 0 } else {
                (values.iter().copied().max().map_or(0, bit_len).div_ceil(w)).max(1) as usize
            };
            prop_assert_eq!(d.levels(), expected_levels);
            prop_assert_eq!(d.iter().collect::<Vec<_>>(), values.clone());
            let mut bw = ByteWriter::new();
            d.encode(&mut bw);
            let bytes = bw.into_inner();
            let back = DacSequence::decode(&mut ByteReader::new(&bytes)).unwrap();
            prop_assert_eq!(back, d);
        }
    }
}
