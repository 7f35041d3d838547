use core::fmt;

use crate::geom::Cell;

/// Errors raised while building, decoding or addressing the structures of
/// this crate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A position or index lies outside the addressed sequence.
    OutOfRange { index: usize, len: usize },
    /// `select` asked for an occurrence that does not exist.
    NotFound { bit: bool, ordinal: usize },
    /// The cube side is not a power of `k` (or `k < 2`).
    InvalidSide { side: u64, k: u32 },
    /// A cell lies outside the `[0, side)³` cube.
    CellOutOfBounds { cell: Cell, side: u32 },
    /// The leaf position does not hold a 1 in `L`.
    InvalidLeaf(usize),
    /// A relative movement does not fit the 12/12/8-bit packing.
    MovementOutOfRange { dx: i32, dy: i32, dz: i32 },
    /// The same object was given twice to a snapshot.
    DuplicateObject(u32),
    /// Events are not strictly increasing by `(object, instant)`.
    UnsortedEvents { index: usize },
    /// Invalid build parameters.
    InvalidConfig(&'static str),
    /// A symbol that is neither a terminal nor a known rule.
    UnknownSymbol(u64),
    /// Serialized data is malformed.
    Corrupt(&'static str),
    /// Serialized data does not start with the store magic.
    BadMagic,
    /// Serialized data was written by an unsupported format version.
    UnsupportedVersion(u16),
    /// The stored checksum does not match the content.
    ChecksumMismatch { stored: u32, computed: u32 },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::OutOfRange { index, len } => {
                write!(f, "index {index} out of range for length {len}")
            }
            Error::NotFound { bit, ordinal } => {
                write!(f, "no occurrence #{ordinal} of bit {}", *bit as u8)
            }
            Error::InvalidSide { side, k } => {
                write!(f, "side {side} is not a power of k={k} (k >= 2, side >= k)")
            }
            Error::CellOutOfBounds { cell, side } => {
                write!(f, "cell {cell} outside a cube of side {side}")
            }
            Error::InvalidLeaf(pos) => write!(f, "position {pos} is not an occupied leaf"),
            Error::MovementOutOfRange { dx, dy, dz } => {
                write!(
                    f,
                    "movement ({dx},{dy},{dz}) does not fit the 12/12/8-bit layout"
                )
            }
            Error::DuplicateObject(id) => write!(f, "object {id} given more than once"),
            Error::UnsortedEvents { index } => {
                write!(
                    f,
                    "event #{index} is not strictly after its predecessor by (object, instant)"
                )
            }
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::UnknownSymbol(sym) => write!(f, "unknown grammar symbol {sym}"),
            Error::Corrupt(what) => write!(f, "corrupt store data: {what}"),
            Error::BadMagic => f.write_str("not a store file (bad magic)"),
            Error::UnsupportedVersion(v) => write!(f, "unsupported store format version {v}"),
            Error::ChecksumMismatch { stored, computed } => {
                write!(
                    f,
                    "checksum mismatch: stored {stored:#010x}, computed {computed:#010x}"
                )
            }
        }
    }
}

impl core::error::Error for Error {}
