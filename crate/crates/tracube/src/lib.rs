//! Ingestion, file formats, query suites and benchmarks around
//! [`tracube_core`].

pub mod bench;
pub mod error;
pub mod formats;
pub mod ingest;
pub mod suite;
pub mod synth;

pub use error::{Error, Result};
pub use tracube_core as core;
