//! Bit-level building blocks: a rank/select bitvector, fixed-width packed
//! integers and direct-access codes (DACs).

mod bit_vector;
mod dac;
mod int_vector;

pub use bit_vector::{BitVector, BitVectorBuilder};
pub use dac::DacSequence;
pub use int_vector::IntVector;

/// Number of bits needed to write `v` (0 for 0).
#[inline]
pub fn bit_len(v: u64) -> u32 {
    64 - v.leading_zeros()
}
