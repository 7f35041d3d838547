//! Query latency measurement.

use std::time::Instant;

use serde::Serialize;
use tracube_core::{QueryOptions, Store};

use crate::error::Result;
use crate::suite::{answer_store, Kind, Query};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Latency {
    pub suite: Kind,
    pub queries: usize,
    pub mean_us: f64,
    pub p50_us: f64,
    pub p95_us: f64,
    pub p99_us: f64,
    pub max_us: f64,
    /// Total result size over the suite, to keep the work observable.
    pub results: usize,
}

/// Nearest-rank percentile of sorted samples.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Times each query on the calling thread.
pub fn run(store: &Store, suite: Kind, queries: &[Query], opts: &QueryOptions) -> Result<Latency> {
    let mut samples = Vec::with_capacity(queries.len());
    let mut results = 0;
    for q in queries {
        let start = Instant::now();
        let a = answer_store(store, q, opts)?;
        samples.push(start.elapsed().as_secs_f64() * 1e6);
        results += match a {
            crate::suite::Answer::Position(c) => c.is_some() as usize,
            crate::suite::Answer::Trajectory(v) => v.iter().filter(|x| x.1.is_some()).count(),
            crate::suite::Answer::Slice(v) => v.len(),
            crate::suite::Answer::Interval(v) => v.len(),
        };
    }
    samples.sort_by(f64::total_cmp);
    let mean = if samples.is_empty() {
        0.0
    } else {
        samples.iter().sum::<f64>() / samples.len() as f64
    };
    Ok(Latency {
        suite,
        queries: samples.len(),
        mean_us: mean,
        p50_us: percentile(&samples, 50.0),
        p95_us: percentile(&samples, 95.0),
        p99_us: percentile(&samples, 99.0),
        max_us: samples.last().copied().unwrap_or(0.0),
        results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_percentiles() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&v, 50.0), 50.0);
        assert_eq!(percentile(&v, 95.0), 95.0);
        assert_eq!(percentile(&v, 100.0), 100.0);
        assert_eq!(percentile(&[7.0], 99.0), 7.0);
        assert_eq!(percentile(&[], 50.0), 0.0);
    }
}
