//! Compressed, self-indexed storage for 3D moving-object trajectories.
//!
//! The store keeps a full spatial snapshot (a k³-tree over occupied cells plus
//! an object permutation) every `d` instants and, between snapshots, a log of
//! per-instant relative movements per object. Logs are grammar-compressed with
//! Re-Pair; every rule carries its time span, net displacement and bounding box
//! so that queries can skip or prune whole rules without expanding them.
//!
//! Four queries run directly on the compressed form:
//!
//! - [`Store::position_of`]: where was object `o` at instant `t`;
//! - [`Store::trajectory`]: all positions of `o` in `[t_s, t_e]`;
//! - [`Store::time_slice`]: objects inside a box at `t`;
//! - [`Store::time_interval`]: objects inside a box at any instant of `[t_s, t_e]`.
//!
//! [`oracle::OracleStore`] answers the same queries by brute force over the
//! uncompressed events and is the reference for every correctness test.
//!
//! The crate is `no_std` and needs only `alloc`; file IO, CSV ingestion and
//! the command-line front end live in the `tracube` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod codec;
pub mod error;
pub mod geom;
pub mod grammar;
pub mod movement;
pub mod oracle;
pub mod query;
pub mod snapshot;
pub mod spatial;
pub mod store;
pub mod succinct;

pub use crate::error::{Error, Result};
pub use crate::geom::{Cell, CellBox, Delta, RelBox};
pub use crate::query::{Direction, QueryOptions};
pub use crate::store::{
    CellEvent, GridMeta, LogEntry, Store, StoreConfig, StoreHeader, StoreInput, StoreStats,
};
