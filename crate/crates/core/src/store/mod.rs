//! The complete compressed structure: header, a snapshot every `period`
//! instants, grammar-compressed per-object logs and the side arrays that
//! carry codeword payloads.
//!
//! The log of object `o` for period `p` (snapshot instant `s = p·period`)
//! encodes instants `s+1 ..= min(s+period, T-1)`, one relative step each:
//!
//! - a packed movement when the object is known at `t-1` and `t` and the
//!   step fits the 12/12/8 layout;
//! - `AA` when the object is unknown from `s` until it appears; `D` stores
//!   the appearance instant relative to `s` and `P` the absolute cell;
//! - `RD` when it vanishes and comes back within the log (or makes a step
//!   too large to pack); `D` stores the covered instants including the
//!   reappearance and `P` the displacement since the last known cell;
//! - `D` when it vanishes until the end of the log; `D` stores the first
//!   unknown instant relative to `s` and `P` the last known cell.
//!
//! An object unknown during the whole period has an empty log.

mod build;
mod log;
mod persist;

use alloc::string::String;
use alloc::vec::Vec;

use crate::geom::Cell;
use crate::grammar::RuleTable;
use crate::snapshot::{Snapshot, DEFAULT_SHORTCUT_STEP};
use crate::succinct::{DacSequence, IntVector};

pub use log::LogEntry;
pub(crate) use log::LogIter;
pub use persist::{FORMAT_VERSION, MAGIC};

/// One known position: dense object id, instant index and cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellEvent {
    pub object: u32,
    pub instant: u32,
    pub cell: Cell,
}

impl CellEvent {
    pub const fn new(object: u32, instant: u32, cell: Cell) -> Self {
        CellEvent {
            object,
            instant,
            cell,
        }
    }
}

/// Discretization metadata carried along with a store. Queries work on
/// cells and instants and never look at it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMeta {
    pub origin: [f64; 3],
    pub cell_size: [f64; 3],
    pub time_origin: f64,
    pub step_seconds: f64,
    /// Gap length (in instants) from which gaps were filled, 0 when not.
    pub interpolated_from: u32,
}

impl Default for GridMeta {
    fn default() -> Self {
        GridMeta {
            origin: [0.0; 3],
            cell_size: [5000.0, 5000.0, 100.0],
            time_origin: 0.0,
            step_seconds: 15.0,
            interpolated_from: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoreConfig {
    /// Instants between snapshots (`d`).
    pub period: u32,
    pub k: u32,
    /// Cube side; by default the smallest power of `k` holding every cell.
    pub side: Option<u32>,
    pub shortcut_step: u32,
    pub chunk_width: u32,
}

impl Default for StoreConfig {
    fn default() -> Self {
        StoreConfig {
            period: 120,
            k: 2,
            side: None,
            shortcut_step: DEFAULT_SHORTCUT_STEP,
            chunk_width: DacSequence::DEFAULT_CHUNK_WIDTH,
        }
    }
}

/// Events to store, sorted by `(object, instant)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StoreInput {
    /// External ids by dense id. Missing names default to the dense id.
    pub names: Vec<String>,
    pub events: Vec<CellEvent>,
    /// Number of instants `T`; defaults to the last instant + 1.
    pub instants: Option<u32>,
    pub grid: GridMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoreHeader {
    pub side: u32,
    pub k: u32,
    pub period: u32,
    pub instants: u32,
    pub names: Vec<String>,
    /// Per-axis bound on the displacement per instant of any object.
    pub speed: [u32; 3],
    pub grid: GridMeta,
    pub(crate) place_width: u32,
}

impl StoreHeader {
    pub fn objects(&self) -> u32 {
        self.names.len() as u32
    }
}

/// Object ids grouped by period.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub(crate) struct PeriodLists {
    start: IntVector,
    ids: IntVector,
}

impl PeriodLists {
    fn from_lists(lists: &[Vec<u32>]) -> Self {
        let mut start = Vec::with_capacity(lists.len() + 1);
        let mut ids = Vec::new();
        start.push(0u64);
        for l in lists {
            ids.extend(l.iter().map(|&x| x as u64));
            start.push(ids.len() as u64);
        }
        PeriodLists {
            start: IntVector::from_slice(&start),
            ids: IntVector::from_slice(&ids),
        }
    }

    pub(crate) fn of(&self, p: usize) -> impl Iterator<Item = u32> + '_ {
        let (a, b) = (self.start.get(p) as usize, self.start.get(p + 1) as usize);
        (a..b).map(move |i| self.ids.get(i) as u32)
    }

    fn size_bytes(&self) -> usize {
        self.start.size_bytes() + self.ids.size_bytes()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Store {
    pub(crate) header: StoreHeader,
    pub(crate) snapshots: Vec<Snapshot>,
    /// Terminal log words in use, sorted; symbol `i < alphabet.len()` is
    /// `alphabet[i]`, larger symbols are rules.
    pub(crate) alphabet: Vec<u32>,
    pub(crate) rules: RuleTable,
    pub(crate) symbols: IntVector,
    /// Start of log `(o, p)` in `symbols`, at index `o·P + p`.
    pub(crate) log_start: IntVector,
    /// Start of the codeword payloads of log `(o, p)` in `durations`/`places`.
    pub(crate) dp_start: IntVector,
    pub(crate) durations: DacSequence,
    pub(crate) places: DacSequence,
    /// Objects whose log starts with an absolute appearance, per period.
    pub(crate) appear: PeriodLists,
    /// Objects whose log ends with a disappearance, per period.
    pub(crate) vanish: PeriodLists,
}

/// Component sizes in bytes of the serialized store and its compression
/// ratio against 4 bytes per known `(object, instant)` record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoreStats {
    pub header_bytes: usize,
    pub snapshot_bytes: usize,
    pub log_bytes: usize,
    pub grammar_bytes: usize,
    pub payload_bytes: usize,
    pub index_bytes: usize,
    pub total_bytes: usize,
    pub records: u64,
    pub baseline_bytes: u64,
    pub ratio: f64,
    pub snapshots: usize,
    pub rules: usize,
    pub symbols: usize,
    pub codewords: usize,
}

impl Store {
    /// Builds a store; see the module docs for the log encoding.
    pub fn build(input: &StoreInput, config: &StoreConfig) -> crate::Result<Store> {
        build::build(input, config)
    }

    pub fn header(&self) -> &StoreHeader {
        &self.header
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn rules(&self) -> &RuleTable {
        &self.rules
    }

    pub fn alphabet(&self) -> &[u32] {
        &self.alphabet
    }

    pub fn objects(&self) -> u32 {
        self.header.objects()
    }

    pub fn instants(&self) -> u32 {
        self.header.instants
    }

    pub fn side(&self) -> u32 {
        self.header.side
    }

    pub fn period(&self) -> u32 {
        self.header.period
    }

    pub fn name(&self, object: u32) -> Option<&str> {
        self.header.names.get(object as usize).map(String::as_str)
    }

    pub fn object_by_name(&self, name: &str) -> Option<u32> {
        self.header
            .names
            .iter()
            .position(|n| n == name)
            .map(|i| i as u32)
    }

    pub fn periods(&self) -> usize {
        self.snapshots.len()
    }

    /// Number of codewords (AA, D and RD) over all logs.
    pub fn codeword_count(&self) -> usize {
        self.durations.len()
    }

    pub(crate) fn period_start(&self, p: usize) -> u32 {
        p as u32 * self.header.period
    }

    /// Last instant encoded by the log of period `p`.
    pub(crate) fn period_end(&self, p: usize) -> u32 {
        (self.period_start(p) + self.header.period).min(self.header.instants.saturating_sub(1))
    }

    /// Compressed log of `(object, period)`.
    pub(crate) fn log(&self, object: u32, p: usize) -> LogIter<'_> {
        let idx = object as usize * self.periods() + p;
        LogIter::new(
            self,
            self.log_start.get(idx) as usize..self.log_start.get(idx + 1) as usize,
            self.dp_start.get(idx) as usize..self.dp_start.get(idx + 1) as usize,
            self.period_start(p),
        )
    }

    /// Decoded entries of the log of `(object, period)`, rules unexpanded.
    pub fn log_entries(&self, object: u32, period: usize) -> crate::Result<Vec<LogEntry>> {
        if object >= self.objects() || period >= self.periods() {
            return Err(crate::Error::OutOfRange {
                index: period,
                len: self.periods(),
            });
        }
        Ok(self.log(object, period).collect())
    }

    /// Raw `(D, P)` payloads of the codewords of `(object, period)`, in log
    /// order.
    pub fn log_payloads(&self, object: u32, period: usize) -> crate::Result<Vec<(u64, u64)>> {
        if object >= self.objects() || period >= self.periods() {
            return Err(crate::Error::OutOfRange {
                index: period,
                len: self.periods(),
            });
        }
        let idx = object as usize * self.periods() + period;
        let (a, b) = (
            self.dp_start.get(idx) as usize,
            self.dp_start.get(idx + 1) as usize,
        );
        Ok((a..b)
            .map(|j| (self.durations.get(j), self.places.get(j)))
            .collect())
    }

    /// Number of symbols in the log of `(object, period)`.
    pub fn log_len(&self, object: u32, p: usize) -> usize {
        let idx = object as usize * self.periods() + p;
        (self.log_start.get(idx + 1) - self.log_start.get(idx)) as usize
    }

    /// Movements produced by rule `idx`, in order.
    pub fn rule_moves(&self, idx: usize) -> crate::Result<Vec<crate::geom::Delta>> {
        let sym = self.rules.symbol_of(idx);
        self.rules
            .expand(sym)?
            .into_iter()
            .map(|s| {
                self.alphabet
                    .get(s.0 as usize)
                    .and_then(|&code| crate::movement::unpack_movement(code))
                    .ok_or(crate::Error::UnknownSymbol(s.0))
            })
            .collect()
    }

    /// Decodes every instant of `object` by walking all its logs forward.
    pub fn decode_object(&self, object: u32) -> Vec<Option<Cell>> {
        let mut out = Vec::with_capacity(self.instants() as usize);
        if object >= self.objects() {
            out.resize(self.instants() as usize, None);
            return out;
        }
        for p in 0..self.periods() {
            let s = self.period_start(p);
            let last = if p + 1 == self.periods() {
                self.period_end(p)
            } else {
                self.period_start(p + 1) - 1
            };
            self.walk_forward(object, p, s, last, |_, c| out.push(c));
        }
        out
    }

    pub fn stats(&self) -> StoreStats {
        let parts = self.component_sizes();
        let total = self.serialize().len();
        let records: u64 = self.count_records();
        let baseline = records * 4;
        StoreStats {
            header_bytes: parts[0],
            snapshot_bytes: parts[1],
            grammar_bytes: parts[2],
            log_bytes: parts[3],
            payload_bytes: parts[4],
            index_bytes: parts[5],
            total_bytes: total,
            records,
            baseline_bytes: baseline,
            ratio: if baseline == 0 {
                0.0
            } else {
                total as f64 / baseline as f64
            },
            snapshots: self.snapshots.len(),
            rules: self.rules.len(),
            symbols: self.symbols.len(),
            codewords: self.durations.len(),
        }
    }

    /// Known `(object, instant)` pairs, counted from the logs.
    fn count_records(&self) -> u64 {
        (0..self.objects())
            .map(|o| self.decode_object(o).iter().filter(|c| c.is_some()).count() as u64)
            .sum()
    }

    /// In-memory size of the succinct structures.
    pub fn heap_bytes(&self) -> usize {
        self.snapshots
            .iter()
            .map(Snapshot::size_bytes)
            .sum::<usize>()
            + self.symbols.size_bytes()
            + self.log_start.size_bytes()
            + self.dp_start.size_bytes()
            + self.durations.size_bytes()
            + self.places.size_bytes()
            + self.appear.size_bytes()
            + self.vanish.size_bytes()
            + self.rules.len() * core::mem::size_of::<crate::grammar::Rule>()
            + self.alphabet.len() * 4
    }
}
