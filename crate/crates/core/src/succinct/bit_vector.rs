use alloc::vec::Vec;

use crate::codec::{ByteReader, ByteWriter, Decode, Encode};
use crate::error::{Error, Result};

const WORD: usize = 64;
const WORDS_PER_SUPER: usize = 8;
const SUPER: usize = WORD * WORDS_PER_SUPER;

/// Append-only builder for [`BitVector`].
#[derive(Debug, Clone, Default)]
pub struct BitVectorBuilder {
    words: Vec<u64>,
    len: usize,
}

impl BitVectorBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        BitVectorBuilder {
            words: Vec::with_capacity(bits.div_ceil(WORD)),
            len: 0,
        }
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(WORD) {
            self.words.push(0);
        }
        if bit {
            self.words[self.len / WORD] |= 1 << (self.len % WORD);
        }
        self.len += 1;
    }

    /// Appends `n` zeros.
    pub fn push_zeros(&mut self, n: usize) {
        self.len += n;
        self.words.resize(self.len.div_ceil(WORD), 0);
    }

    /// Sets an already pushed bit to 1.
    pub fn set(&mut self, i: usize) {
        assert!(i < self.len, "set({i}) past length {}", self.len);
        self.words[i / WORD] |= 1 << (i % WORD);
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn build(self) -> BitVector {
        BitVector::from_words(self.words, self.len)
    }
}

/// Immutable bitvector with rank and select support.
///
/// Rank uses a two-level directory: absolute counts every 512 bits and
/// 16-bit relative counts every 64-bit word. Select binary-searches the
/// superblock counts and finishes with a scan of at most eight words.
///
/// Conventions: `rank_b(i)` counts occurrences of `b` in `[0, i)`;
/// `select_b(j)` is the 0-based position of the `j`-th (1-based) `b`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitVector {
    words: Vec<u64>,
    len: usize,
    ones: usize,
    supers: Vec<u64>,
    blocks: Vec<u16>,
}

impl BitVector {
    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut b = BitVectorBuilder::new();
        for bit in bits {
            b.push(bit);
        }
        b.build()
    }

    /// Builds from raw words; bits past `len` are cleared.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Self {
        words.resize(len.div_ceil(WORD), 0);
        if !len.is_multiple_of(WORD) {
            let last = words.len() - 1;
            words[last] &= (1u64 << (len % WORD)) - 1;
        }
        let mut supers = Vec::with_capacity(words.len().div_ceil(WORDS_PER_SUPER));
        let mut blocks = Vec::with_capacity(words.len());
        let mut total = 0usize;
        let mut in_super = 0usize;
        for (i, w) in words.iter().enumerate() {
            if i % WORDS_PER_SUPER == 0 {
                supers.push(total as u64);
                in_super = 0;
            }
            blocks.push(in_super as u16);
            let c = w.count_ones() as usize;
            in_super += c;
            total += c;
        }
        BitVector {
            words,
            len,
            ones: total,
            supers,
            blocks,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn count_ones(&self) -> usize {
        self.ones
    }

    pub fn count_zeros(&self) -> usize {
        self.len - self.ones
    }

    /// Bit at position `i`. Panics when `i >= len`.
    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    pub fn try_get(&self, i: usize) -> Result<bool> {
        if i < self.len {
            Ok(self.get(i))
        } else {
            Err(Error::OutOfRange {
                index: i,
                len: self.len,
            })
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Number of 1s in `[0, i)`. Panics when `i > len`.
    #[inline]
    pub fn rank1(&self, i: usize) -> usize {
        assert!(
            i <= self.len,
            "rank position {i} out of range for length {}",
            self.len
        );
        let w = i / WORD;
        if w == self.words.len() {
            return self.ones;
        }
        let base = self.supers[w / WORDS_PER_SUPER] as usize + self.blocks[w] as usize;
        let mask = (1u64 << (i % WORD)) - 1;
        base + (self.words[w] & mask).count_ones() as usize
    }

    /// Number of 0s in `[0, i)`. Panics when `i > len`.
    #[inline]
    pub fn rank0(&self, i: usize) -> usize {
        i - self.rank1(i)
    }

    /// Checked rank of `bit` over `[0, i)`.
    pub fn rank(&self, bit: bool, i: usize) -> Result<usize> {
        if i > self.len {
            return Err(Error::OutOfRange {
                index: i,
                len: self.len,
            });
        }
        Ok(if bit { self.rank1(i) } else { self.rank0(i) })
    }

    /// Position of the `j`-th 1 (1-based `j`).
    pub fn select1(&self, j: usize) -> Option<usize> {
        if j == 0 || j > self.ones {
            return None;
        }
        // Last superblock whose prefix count is < j.
        let sb = self.supers.partition_point(|&c| (c as usize) < j) - 1;
        let first = sb * WORDS_PER_SUPER;
        let last = (first + WORDS_PER_SUPER).min(self.words.len());
        let before_sb = self.supers[sb] as usize;
        for w in first..last {
            let before = before_sb + self.blocks[w] as usize;
            let c = self.words[w].count_ones() as usize;
            if before + c >= j {
                return Some(w * WORD + select_in_word(self.words[w], j - before - 1));
            }
        }
        None
    }

    /// Position of the `j`-th 0 (1-based `j`).
    pub fn select0(&self, j: usize) -> Option<usize> {
        if j == 0 || j > self.count_zeros() {
            return None;
        }
        let zeros_before = |sb: usize| sb * SUPER - self.supers[sb] as usize;
        let sb = {
            let (mut lo, mut hi) = (0usize, self.supers.len());
            while lo + 1 < hi {
                let mid = (lo + hi) / 2;
                if zeros_before(mid) < j {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        let first = sb * WORDS_PER_SUPER;
        let last = (first + WORDS_PER_SUPER).min(self.words.len());
        for w in first..last {
            let ones_before = self.supers[sb] as usize + self.blocks[w] as usize;
            let before = w * WORD - ones_before;
            let c = self.words[w].count_zeros() as usize;
            if before + c >= j {
                return Some(w * WORD + select_in_word(!self.words[w], j - before - 1));
            }
        }
        None
    }

    /// Checked select of the `j`-th occurrence of `bit`.
    pub fn select(&self, bit: bool, j: usize) -> Result<usize> {
        let r = if bit {
            self.select1(j)
        } else {
            self.select0(j)
        };
        r.ok_or(Error::NotFound { bit, ordinal: j })
    }

    /// Heap bytes used by bits and directories.
    pub fn size_bytes(&self) -> usize {
        self.words.len() * 8 + self.supers.len() * 8 + self.blocks.len() * 2
    }
}

/// Position of the `r`-th (0-based) set bit of `w`.
#[inline]
fn select_in_word(mut w: u64, r: usize) -> usize {
    for _ in 0..r {
        w &= w - 1;
    }
    w.trailing_zeros() as usize
}

impl Encode for BitVector {
    fn encode(&self, w: &mut ByteWriter) {
        w.put_u64(self.len as u64);
        for &word in &self.words {
            w.put_u64(word);
        }
    }
}

impl Decode for BitVector {
    fn decode(r: &mut ByteReader<'_>) -> Result<Self> {
        let len = r.get_u64()?;
        let len = usize::try_from(len).map_err(|_| Error::Corrupt("bitvector length"))?;
        let n = len.div_ceil(WORD);
        if n.saturating_mul(8) > r.remaining() {
            return Err(Error::Corrupt("bitvector length exceeds data"));
        }
        let mut words = Vec::with_capacity(n);
        for _ in 0..n {
            words.push(r.get_u64()?);
        }
        if len % WORD != 0 && words[n - 1] >> (len % WORD) != 0 {
            return Err(Error::Corrupt("bitvector padding bits set"));
        }
        Ok(BitVector::from_words(words, len))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn bv(s: &str) -> BitVector {
        BitVector::from_bits(s.bytes().map(|c| c == b'1'))
    }

    #[test]
    fn rank_select_small() {
        let b = bv("10110");
        assert_eq!(b.rank1(5), 3);
        assert_eq!(b.rank1(0), 0);
        assert_eq!(b.rank0(0), 0);
        assert_eq!(b.select1(2), Some(2));
        assert_eq!(b.select0(1), Some(1));
        assert_eq!(b.select0(2), Some(4));
        assert_eq!(b.select1(4), None);
        assert_eq!(b.select1(0), None);
    }

    #[test]
    fn checked_errors() {
        let b = bv("10110");
        assert_eq!(b.rank(true, 6), Err(Error::OutOfRange { index: 6, len: 5 }));
        assert_eq!(
            b.select(false, 3),
            Err(Error::NotFound {
                bit: false,
                ordinal: 3
            })
        );
        assert!(b.try_get(5).is_err());
    }

    #[test]
    fn empty_vector() {
        let b = BitVector::from_bits(vec![]);
        assert_eq!(b.rank1(0), 0);
        assert_eq!(b.select1(1), None);
        assert_eq!(b.select0(1), None);
    }

    #[test]
    fn word_and_super_boundaries() {
        let n = SUPER * 3 + 17;
        let bits: Vec<bool> = (0..n).map(|i| i % 7 == 0 || i % 64 == 63).collect();
        let b = BitVector::from_bits(bits.iter().copied());
        let mut ones = 0;
        for i in 0..=n {
            assert_eq!(b.rank1(i), ones);
            if i < n && bits[i] {
                ones += 1;
                assert_eq!(b.select1(ones), Some(i));
            }
        }
    }

    proptest! {
        #[test]
        fn rank_select_match_naive(bits in proptest::collection::vec(any::<bool>(), 0..3000)) {
            let b = BitVector::from_bits(bits.iter().copied());
            let mut r1 = 0;
            for i in 0..=bits.len() {
                prop_assert_eq!(b.rank1(i), r1);
                prop_assert_eq!(b.rank0(i) + b.rank1(i), i);
                if i < bits.len() {
                    let bit = bits[i];
                    let j = if bit { r1 + 1 } else { i - r1 + 1 };
                    let pos = if bit { b.select1(j) } else { b.select0(j) };
                    prop_assert_eq!(pos, Some(i));
                    if bit { r1 += 1; }
                }
            }
        }

        #[test]
        fn encode_roundtrip(bits in proptest::collection::vec(any::<bool>(), 0..700)) {
            let b = BitVector::from_bits(bits.iter().copied());
            let mut w = ByteWriter::new();
            b.encode(&mut w);
            let bytes = w.into_inner();
            let back = BitVector::decode(&mut ByteReader::new(&bytes)).unwrap();
            prop_assert_eq!(back, b);
        }
    }
}
