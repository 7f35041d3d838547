use alloc::string::ToString;
use alloc::vec::Vec;

use super::{PeriodLists, Store, StoreConfig, StoreHeader, StoreInput};
use crate::error::{Error, Result};
use crate::geom::{Cell, Delta};
use crate::grammar::{repair_compress, Symbol};
use crate::movement::{self, Codeword};
use crate::snapshot::Snapshot;
use crate::spatial::{height_for, padded_side};
use crate::succinct::{bit_len, DacSequence, IntVector};

/// Largest supported cube side; keeps a packed absolute cell within 63 bits.
pub const MAX_SIDE: u32 = 1 << 20;

pub(crate) fn place_width(side: u32) -> u32 {
    bit_len(2 * (side.max(1) as u64 - 1)).max(1)
}

pub(crate) fn pack_abs(c: Cell, w: u32) -> u64 {
    ((c.x as u64) << (2 * w)) | ((c.y as u64) << w) | c.z as u64
}

pub(crate) fn unpack_abs(v: u64, w: u32) -> Cell {
    let m = (1u64 << w) - 1;
    Cell::new(
        (v >> (2 * w) & m) as u32,
        (v >> w & m) as u32,
        (v & m) as u32,
    )
}

pub(crate) fn pack_rel(d: Delta, w: u32) -> u64 {
    let z = |v: i32| movement::zigzag_encode(v) as u64;
    (z(d.dx) << (2 * w)) | (z(d.dy) << w) | z(d.dz)
}

pub(crate) fn unpack_rel(v: u64, w: u32) -> Delta {
    let m = (1u64 << w) - 1;
    let z = |x: u64| movement::zigzag_decode(x as u32);
    Delta::new(z(v >> (2 * w) & m), z(v >> w & m), z(v & m))
}

/// Payload-carrying log entries before grammar compression.
struct LogWriter {
    words: Vec<u32>,
    durations: Vec<u64>,
    places: Vec<u64>,
    width: u32,
    speed: [u32; 3],
}

impl LogWriter {
    fn movement(&mut self, d: Delta) {
        match movement::pack_movement(d) {
            Ok(code) => {
                self.bump_speed(d, 1);
                self.words.push(code);
            }
            Err(_) => self.rel_disappear(1, d),
        }
    }

    fn rel_disappear(&mut self, len: u32, d: Delta) {
        self.bump_speed(d, len);
        self.words.push(Codeword::RelDisappear.code());
        self.durations.push(len as u64);
        self.places.push(pack_rel(d, self.width));
    }

    fn abs_appear(&mut self, offset: u32, c: Cell) {
        self.words.push(Codeword::AbsAppear.code());
        self.durations.push(offset as u64);
        self.places.push(pack_abs(c, self.width));
    }

    fn disappear(&mut self, offset: u32, last: Cell) {
        self.words.push(Codeword::Disappear.code());
        self.durations.push(offset as u64);
        self.places.push(pack_abs(last, self.width));
    }

    fn bump_speed(&mut self, d: Delta, len: u32) {
        let len = len.max(1) as u64;
        for (i, v) in [d.dx, d.dy, d.dz].into_iter().enumerate() {
            let per = (v.unsigned_abs() as u64).div_ceil(len) as u32;
            self.speed[i] = self.speed[i].max(per);
        }
    }
}

impl StoreConfig {
    pub fn validate(&self) -> Result<()> {
        if self.period < 2 {
            return Err(Error::InvalidConfig("period must be at least 2"));
        }
        if self.k < 2 {
            return Err(Error::InvalidConfig("k must be at least 2"));
        }
        if self.shortcut_step == 0 {
            return Err(Error::InvalidConfig("shortcut step must be positive"));
        }
        if !(1..=64).contains(&self.chunk_width) {
            return Err(Error::InvalidConfig("chunk width must be in 1..=64"));
        }
        Ok(())
    }
}

pub(crate) fn build(input: &StoreInput, config: &StoreConfig) -> Result<Store> {
    config.validate()?;
    let events = &input.events;
    for (i, w) in events.windows(2).enumerate() {
        if (w[0].object, w[0].instant) >= (w[1].object, w[1].instant) {
            return Err(Error::UnsortedEvents { index: i + 1 });
        }
    }

    let max_obj = events
        .iter()
        .map(|e| e.object as u64 + 1)
        .max()
        .unwrap_or(0);
    let n = (input.names.len() as u64).max(max_obj);
    if n > u32::MAX as u64 {
        return Err(Error::InvalidConfig("too many objects"));
    }
    let n = n as u32;
    let mut names = input.names.clone();
    names.extend((names.len() as u32..n).map(|i| i.to_string()));

    let last_instant = events.iter().map(|e| e.instant).max();
    let instants = match (input.instants, last_instant) {
        (Some(t), Some(l)) if l >= t => {
            return Err(Error::InvalidConfig(
                "event instant beyond the instant count",
            ))
        }
        (Some(t), _) => t,
        (None, Some(l)) => l
            .checked_add(1)
            .ok_or(Error::InvalidConfig("instant overflow"))?,
        (None, None) => 0,
    };

    let max_coord = events.iter().map(|e| e.cell.max_coord()).max().unwrap_or(0);
    let side = match config.side {
        Some(s) => {
            height_for(s, config.k)?;
            if max_coord >= s {
                let cell = events
                    .iter()
                    .find(|e| e.cell.max_coord() >= s)
                    .map(|e| e.cell)
                    .unwrap_or_default();
                return Err(Error::CellOutOfBounds { cell, side: s });
            }
            s
        }
        None => {
            padded_side(max_coord + 1, config.k).ok_or(Error::InvalidConfig("grid too large"))?
        }
    };
    if side > MAX_SIDE {
        return Err(Error::InvalidSide {
            side: side as u64,
            k: config.k,
        });
    }

    let d = config.period;
    let periods = if instants == 0 {
        0
    } else {
        ((instants - 1) / d + 1) as usize
    };

    let mut at_snapshot: Vec<Vec<(u32, Cell)>> = alloc::vec![Vec::new(); periods];
    for e in events {
        if e.instant % d == 0 {
            at_snapshot[(e.instant / d) as usize].push((e.object, e.cell));
        }
    }
    let snapshots = at_snapshot
        .iter()
        .enumerate()
        .map(|(p, pos)| Snapshot::build(pos, p as u32 * d, n, side, config.k, config.shortcut_step))
        .collect::<Result<Vec<_>>>()?;

    let width = place_width(side);
    let mut lw = LogWriter {
        words: Vec::new(),
        durations: Vec::new(),
        places: Vec::new(),
        width,
        speed: [0; 3],
    };
    let mut streams: Vec<Vec<u32>> = Vec::with_capacity(n as usize * periods);
    let mut dp_start: Vec<u64> = Vec::with_capacity(n as usize * periods + 1);
    dp_start.push(0);
    let mut appear: Vec<Vec<u32>> = alloc::vec![Vec::new(); periods];
    let mut vanish: Vec<Vec<u32>> = alloc::vec![Vec::new(); periods];

    let mut lo = 0usize;
    for o in 0..n {
        let mut hi = lo;
        while hi < events.len() && events[hi].object == o {
            hi += 1;
        }
        let evs = &events[lo..hi];
        lo = hi;
        let mut cur = 0usize;
        for p in 0..periods {
            let s = p as u32 * d;
            let e = (s + d).min(instants - 1);
            while cur < evs.len() && evs[cur].instant < s {
                cur += 1;
            }
            let start = lw.words.len();
            if cur < evs.len() && evs[cur].instant <= e {
                let (appeared, vanished) = encode_log(&mut lw, &evs[cur..], s, e);
                if appeared {
                    appear[p].push(o);
                }
                if vanished {
                    vanish[p].push(o);
                }
            }
            streams.push(lw.words[start..].to_vec());
            lw.words.truncate(start);
            dp_start.push(lw.durations.len() as u64);
        }
    }

    let compressed = repair_compress(&streams);
    drop(streams);

    let raw_rules = &compressed.rules;
    let mut alphabet: Vec<u32> = compressed
        .streams
        .iter()
        .flatten()
        .chain(raw_rules.rules().iter().flat_map(|r| [&r.left, &r.right]))
        .filter(|s| !raw_rules.is_rule(**s))
        .map(|s| s.0 as u32)
        .collect();
    alphabet.sort_unstable();
    alphabet.dedup();
    let dense = |s: Symbol| Symbol(alphabet.binary_search(&(s.0 as u32)).unwrap_or(0) as u64);
    let first_rule = alphabet.len() as u64;
    let rules = raw_rules.remap(first_rule, dense);

    let alphabet_total = first_rule + rules.len() as u64;
    let mut symbols = IntVector::with_width(bit_len(alphabet_total.saturating_sub(1)).max(1));
    let mut log_start = Vec::with_capacity(compressed.streams.len() + 1);
    log_start.push(0u64);
    for stream in &compressed.streams {
        for &s in stream {
            let v = if raw_rules.is_rule(s) {
                s.0 - raw_rules.first_rule() + first_rule
            } else {
                dense(s).0
            };
            symbols.push(v);
        }
        log_start.push(symbols.len() as u64);
    }

    let header = StoreHeader {
        side,
        k: config.k,
        period: d,
        instants,
        names,
        speed: lw.speed,
        grid: input.grid,
        place_width: width,
    };
    Ok(Store {
        header,
        snapshots,
        alphabet,
        rules,
        symbols,
        log_start: IntVector::from_slice(&log_start),
        dp_start: IntVector::from_slice(&dp_start),
        durations: DacSequence::new(&lw.durations, config.chunk_width)?,
        places: DacSequence::new(&lw.places, config.chunk_width)?,
        appear: PeriodLists::from_lists(&appear),
        vanish: PeriodLists::from_lists(&vanish),
    })
}

/// Encodes instants `s+1 ..= e` from `evs` (events from instant `s` on).
/// Returns whether the log starts with an appearance and ends with a
/// disappearance.
fn encode_log(lw: &mut LogWriter, evs: &[crate::store::CellEvent], s: u32, e: u32) -> (bool, bool) {
    let mut prev: Option<(u32, Cell)> = None;
    let mut appeared = false;
    for ev in evs.iter().take_while(|ev| ev.instant <= e) {
        match prev {
            None if ev.instant == s => {}
            None => {
                lw.abs_appear(ev.instant - s, ev.cell);
                appeared = true;
            }
            Some((t, c)) if t + 1 == ev.instant => lw.movement(c.delta_to(ev.cell)),
            Some((t, c)) => lw.rel_disappear(ev.instant - t, c.delta_to(ev.cell)),
        }
        prev = Some((ev.instant, ev.cell));
    }
    match prev {
        Some((t, c)) if t < e => {
            lw.disappear(t + 1 - s, c);
            (appeared, true)
        }
        _ => (appeared, false),
    }
}
