//! One instant of a log as a 32-bit terminal: a packed relative movement or
//! one of three reserved codewords.
//!
//! Movement layout: bits `[31..20]` zig-zag(dx), `[19..8]` zig-zag(dy),
//! `[7..0]` zig-zag(dz). Legal components are `|dx|, |dy| <= 2047` and
//! `|dz| <= 127`, so no field ever reaches its all-ones value and the three
//! largest words are free for codewords.

use crate::error::{Error, Result};
use crate::geom::Delta;

pub const MAX_XY: i32 = 2047;
pub const MAX_Z: i32 = 127;

/// Absent from some instant until the end of the log.
pub const DISAPPEAR: u32 = 0xFFFF_FFFF;
/// Absent from the start of the log until some instant.
pub const ABS_APPEAR: u32 = 0xFFFF_FFFE;
/// Absent for a while, then back inside the same log.
pub const REL_DISAPPEAR: u32 = 0xFFFF_FFFD;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Codeword {
    Disappear,
    AbsAppear,
    RelDisappear,
}

impl Codeword {
    pub const fn code(self) -> u32 {
        match self {
            Codeword::Disappear => DISAPPEAR,
            Codeword::AbsAppear => ABS_APPEAR,
            Codeword::RelDisappear => REL_DISAPPEAR,
        }
    }

    pub const fn from_code(code: u32) -> Option<Codeword> {
        match code {
            DISAPPEAR => Some(Codeword::Disappear),
            ABS_APPEAR => Some(Codeword::AbsAppear),
            REL_DISAPPEAR => Some(Codeword::RelDisappear),
            _ => None,
        }
    }
}

/// A decoded terminal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminal {
    Move(Delta),
    Code(Codeword),
}

impl Terminal {
    pub fn decode(code: u32) -> Terminal {
        match Codeword::from_code(code) {
            Some(c) => Terminal::Code(c),
            None => Terminal::Move(unpack_fields(code)),
        }
    }
}

#[inline]
pub fn is_codeword(code: u32) -> bool {
    code >= REL_DISAPPEAR
}

#[inline]
pub const fn zigzag_encode(n: i32) -> u32 {
    ((n << 1) ^ (n >> 31)) as u32
}

#[inline]
pub const fn zigzag_decode(z: u32) -> i32 {
    ((z >> 1) as i32) ^ -((z & 1) as i32)
}

pub fn fits(d: Delta) -> bool {
    d.dx.abs() <= MAX_XY && d.dy.abs() <= MAX_XY && d.dz.abs() <= MAX_Z
}

/// Packs a movement; out-of-range components are reported so the caller
/// can encode the instant as a relative disappearance instead.
pub fn pack_movement(d: Delta) -> Result<u32> {
    if !fits(d) {
        return Err(Error::MovementOutOfRange {
            dx: d.dx,
            dy: d.dy,
            dz: d.dz,
        });
    }
    Ok((zigzag_encode(d.dx) << 20) | (zigzag_encode(d.dy) << 8) | zigzag_encode(d.dz))
}

/// Unpacks a movement; `None` for the reserved codewords.
pub fn unpack_movement(code: u32) -> Option<Delta> {
    if is_codeword(code) {
        None
    } else {
        Some(unpack_fields(code))
    }
}

#[inline]
fn unpack_fields(code: u32) -> Delta {
    Delta::new(
        zigzag_decode(code >> 20),
        zigzag_decode((code >> 8) & 0xFFF),
        zigzag_decode(code & 0xFF),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zigzag_mapping() {
        assert_eq!(zigzag_encode(0), 0);
        assert_eq!(zigzag_encode(-1), 1);
        assert_eq!(zigzag_encode(1), 2);
        assert_eq!(zigzag_encode(-2), 3);
        assert_eq!(zigzag_encode(3), 6);
        for n in -5000..5000 {
            assert_eq!(zigzag_decode(zigzag_encode(n)), n);
        }
        assert_eq!(zigzag_decode(zigzag_encode(i32::MIN)), i32::MIN);
        assert_eq!(zigzag_decode(zigzag_encode(i32::MAX)), i32::MAX);
    }

    #[test]
    fn pack_layout() {
        // dx=+3 -> 6, dy=+1 -> 2, dz=-2 -> 3.
        let code = pack_movement(Delta::new(3, 1, -2)).unwrap();
        assert_eq!(code, 6 * (1 << 20) + 2 * (1 << 8) + 3);
        assert_eq!(unpack_movement(code), Some(Delta::new(3, 1, -2)));
        assert_eq!(pack_movement(Delta::ZERO), Ok(0));
    }

    #[test]
    fn out_of_range_components() {
        assert!(pack_movement(Delta::new(2048, 0, 0)).is_err());
        assert!(pack_movement(Delta::new(0, -2048, 0)).is_err());
        assert!(pack_movement(Delta::new(0, 0, 128)).is_err());
        assert!(pack_movement(Delta::new(-2047, 2047, -127)).is_ok());
    }

    #[test]
    fn codewords_are_outside_the_movement_image() {
        let extreme = pack_movement(Delta::new(-2047, -2047, -127)).unwrap();
        assert!(extreme < REL_DISAPPEAR);
        for cw in [
            Codeword::Disappear,
            Codeword::AbsAppear,
            Codeword::RelDisappear,
        ] {
            assert_eq!(Codeword::from_code(cw.code()), Some(cw));
            assert_eq!(unpack_movement(cw.code()), None);
            assert_eq!(Terminal::decode(cw.code()), Terminal::Code(cw));
        }
    }
}
