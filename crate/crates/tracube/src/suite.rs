//! Randomized query suites and their check against the oracle.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use tracube_core::oracle::OracleStore;
use tracube_core::{Cell, CellBox, CellEvent, QueryOptions, Store};

use crate::error::{Error, Result};

pub const SMALL_REGION: u32 = 20;
pub const LARGE_REGION: u32 = 160;
pub const SHORT_INTERVAL: u32 = 50;
pub const LONG_INTERVAL: u32 = 400;
pub const TRAJECTORY_LEN: u32 = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Position,
    Trajectory,
    SliceSmall,
    SliceLarge,
    IntervalSmall,
    IntervalLarge,
}

impl Kind {
    pub const ALL: [Kind; 6] = [
        Kind::Position,
        Kind::Trajectory,
        Kind::SliceSmall,
        Kind::SliceLarge,
        Kind::IntervalSmall,
        Kind::IntervalLarge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Position => "position",
            Kind::Trajectory => "trajectory",
            Kind::SliceSmall => "slice-small",
            Kind::SliceLarge => "slice-large",
            Kind::IntervalSmall => "interval-small",
            Kind::IntervalLarge => "interval-large",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Queries of this kind in a suite of size `n`.
    pub fn count(self, n: usize) -> usize {
        match self {
            Kind::Position => 20 * n,
            _ => n,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Query {
    Position { object: u32, t: u32 },
    Trajectory { object: u32, from: u32, to: u32 },
    Slice { region: CellBox, t: u32 },
    Interval { region: CellBox, from: u32, to: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Answer {
    Position(Option<Cell>),
    Trajectory(Vec<(u32, Option<Cell>)>),
    Slice(Vec<(u32, Cell)>),
    Interval(Vec<u32>),
}

impl Answer {
    pub fn is_empty(&self) -> bool {
        match self {
            Answer::Position(c) => c.is_none(),
            Answer::Trajectory(v) => v.iter().all(|(_, c)| c.is_none()),
            Answer::Slice(v) => v.is_empty(),
            Answer::Interval(v) => v.is_empty(),
        }
    }
}

/// Draws queries over a corpus. Half are anchored on a random event so
/// that answers are rarely empty; the rest are uniform.
pub struct QueryGen<'a> {
    rng: ChaCha8Rng,
    events: &'a [CellEvent],
    objects: u32,
    instants: u32,
    side: u32,
}

impl<'a> QueryGen<'a> {
    pub fn new(seed: u64, events: &'a [CellEvent], objects: u32, instants: u32, side: u32) -> Self {
        QueryGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            events,
            objects,
            instants,
            side,
        }
    }

    fn anchor(&mut self) -> Option<CellEvent> {
        if self.events.is_empty() || !self.rng.gen_bool(0.5) {
            return None;
        }
        Some(self.events[self.rng.gen_range(0..self.events.len())])
    }

    fn region(&mut self, extent: u32, around: Option<Cell>) -> CellBox {
        let ext = extent.min(self.side);
        let lo = |rng: &mut ChaCha8Rng, c: Option<u32>, side: u32| match c {
            Some(c) => c.saturating_sub(rng.gen_range(0..ext)).min(side - ext),
            None => rng.gen_range(0..=side - ext),
        };
        let side = self.side;
        let x = lo(&mut self.rng, around.map(|c| c.x), side);
        let y = lo(&mut self.rng, around.map(|c| c.y), side);
        let z = lo(&mut self.rng, around.map(|c| c.z), side);
        CellBox::new(
            Cell::new(x, y, z),
            Cell::new(x + ext - 1, y + ext - 1, z + ext - 1),
        )
    }

    /// Window of `len` instants, containing `at` when given.
    fn window(&mut self, len: u32, at: Option<u32>) -> (u32, u32) {
        let len = len.min(self.instants);
        let last_start = self.instants - len;
        let from = match at {
            Some(t) => t.saturating_sub(self.rng.gen_range(0..len)).min(last_start),
            None => self.rng.gen_range(0..=last_start),
        };
        (from, from + len - 1)
    }

    pub fn next(&mut self, kind: Kind) -> Option<Query> {
        if self.instants == 0 || self.objects == 0 || self.side == 0 {
            return None;
        }
        let a = self.anchor();
        Some(match kind {
            Kind::Position => match a {
                Some(e) => Query::Position {
                    object: e.object,
                    t: (e.instant + self.rng.gen_range(0..3)).min(self.instants - 1),
                },
                None => Query::Position {
                    object: self.rng.gen_range(0..self.objects),
                    t: self.rng.gen_range(0..self.instants),
                },
            },
            Kind::Trajectory => {
                let object = a.map_or_else(|| self.rng.gen_range(0..self.objects), |e| e.object);
                let (from, to) = self.window(TRAJECTORY_LEN, a.map(|e| e.instant));
                Query::Trajectory { object, from, to }
            }
            Kind::SliceSmall | Kind::SliceLarge => {
                let ext = if kind == Kind::SliceSmall {
                    SMALL_REGION
                } else {
                    LARGE_REGION
                };
                let region = self.region(ext, a.map(|e| e.cell));
                let t = a.map_or_else(|| self.rng.gen_range(0..self.instants), |e| e.instant);
                Query::Slice { region, t }
            }
            Kind::IntervalSmall | Kind::IntervalLarge => {
                let len = if kind == Kind::IntervalSmall {
                    SHORT_INTERVAL
                } else {
                    LONG_INTERVAL
                };
                let region = self.region(SMALL_REGION, a.map(|e| e.cell));
                let (from, to) = self.window(len, a.map(|e| e.instant));
                Query::Interval { region, from, to }
            }
        })
    }

    pub fn take(&mut self, kind: Kind, n: usize) -> Vec<Query> {
        (0..n).map_while(|_| self.next(kind)).collect()
    }
}

pub fn answer_store(store: &Store, q: &Query, opts: &QueryOptions) -> Result<Answer> {
    Ok(match *q {
        Query::Position { object, t } => Answer::Position(store.position_of_with(object, t, opts)?),
        Query::Trajectory { object, from, to } => {
            Answer::Trajectory(store.trajectory(object, from, to)?)
        }
        Query::Slice { region, t } => Answer::Slice(store.time_slice_with(&region, t, opts)?),
        Query::Interval { region, from, to } => {
            Answer::Interval(store.time_interval_with(&region, from, to, opts)?)
        }
    })
}

pub fn answer_oracle(oracle: &OracleStore, q: &Query) -> Answer {
    match *q {
        Query::Position { object, t } => Answer::Position(oracle.position_of(object, t)),
        Query::Trajectory { object, from, to } => {
            Answer::Trajectory(oracle.trajectory(object, from, to))
        }
        Query::Slice { region, t } => Answer::Slice(oracle.time_slice(&region, t)),
        Query::Interval { region, from, to } => {
            Answer::Interval(oracle.time_interval(&region, from, to))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KindReport {
    pub kind: Kind,
    pub queries: usize,
    pub nonempty: usize,
    pub mismatches: usize,
    pub first_mismatch: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub kinds: Vec<KindReport>,
}

impl VerifyReport {
    pub fn mismatches(&self) -> usize {
        self.kinds.iter().map(|k| k.mismatches).sum()
    }

    pub fn queries(&self) -> usize {
        self.kinds.iter().map(|k| k.queries).sum()
    }
}

/// Builds the standard suite of size `n` over an oracle's corpus.
pub fn standard_suite(
    oracle: &OracleStore,
    events: &[CellEvent],
    side: u32,
    n: usize,
    seed: u64,
) -> Vec<(Kind, Vec<Query>)> {
    let mut g = QueryGen::new(seed, events, oracle.objects(), oracle.instants(), side);
    Kind::ALL
        .iter()
        .map(|&k| (k, g.take(k, k.count(n))))
        .collect()
}

/// Runs every query under every option set and compares with the oracle.
pub fn verify(
    store: &Store,
    oracle: &OracleStore,
    suite: &[(Kind, Vec<Query>)],
    options: &[QueryOptions],
) -> VerifyReport {
    let kinds = suite
        .iter()
        .map(|(kind, queries)| {
            let results: Vec<(bool, Option<String>)> = queries
                .par_iter()
                .map(|q| {
                    let expect = answer_oracle(oracle, q);
                    let bad = options
                        .iter()
                        .find_map(|opts| match answer_store(store, q, opts) {
                            Ok(got) if got == expect => None,
                            Ok(got) => Some(format!(
                                "{q:?} with {opts:?}: got {got:?}, expected {expect:?}"
                            )),
                            Err(e) => Some(format!("{q:?} with {opts:?}: {e}")),
                        });
                    (!expect.is_empty(), bad)
                })
                .collect();
            KindReport {
                kind: *kind,
                queries: queries.len(),
                nonempty: results.iter().filter(|r| r.0).count(),
                mismatches: results.iter().filter(|r| r.1.is_some()).count(),
                first_mismatch: results.into_iter().find_map(|r| r.1),
            }
        })
        .collect();
    VerifyReport { kinds }
}

/// Thread count from `TRACUBE_THREADS`; `None` leaves the choice to rayon.
pub fn thread_cap() -> Option<usize> {
    std::env::var("TRACUBE_THREADS")
        .ok()?
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
}

/// Runs `f` on a pool capped by `TRACUBE_THREADS`.
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        b = b.num_threads(n);
    }
    let pool = b
        .build()
        .map_err(|e| Error::Usage(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
