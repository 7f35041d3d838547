use core::ops::Range;

use super::build::{unpack_abs, unpack_rel};
use super::Store;
use crate::geom::{Cell, Delta};
use crate::grammar::Meta;
use crate::movement::{unpack_movement, Codeword, Terminal};

/// One decoded entry of a log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogEntry {
    Move(Delta),
    /// Rule by index in the rule table.
    Rule(usize),
    /// Unknown until `at`, where the object is at `cell`.
    Appear {
        at: u32,
        cell: Cell,
    },
    /// Unknown for `len - 1` instants, then back, moved by `disp`.
    Gap {
        len: u32,
        disp: Delta,
    },
    /// Unknown from `from` to the end of the log; `last` is the cell before.
    Vanish {
        from: u32,
        last: Cell,
    },
}

/// Double-ended reader over one log; codeword payloads are consumed from
/// the matching end of its payload range.
pub(crate) struct LogIter<'a> {
    store: &'a Store,
    sym: Range<usize>,
    dp: Range<usize>,
    base: u32,
}

impl<'a> LogIter<'a> {
    pub(crate) fn new(store: &'a Store, sym: Range<usize>, dp: Range<usize>, base: u32) -> Self {
        LogIter {
            store,
            sym,
            dp,
            base,
        }
    }

    fn decode(&mut self, i: usize, front: bool) -> Option<LogEntry> {
        let v = self.store.symbols.get(i);
        let alpha = self.store.alphabet.len() as u64;
        if v >= alpha {
            let idx = (v - alpha) as usize;
            return (idx < self.store.rules.len()).then_some(LogEntry::Rule(idx));
        }
        match Terminal::decode(self.store.alphabet[v as usize]) {
            Terminal::Move(d) => Some(LogEntry::Move(d)),
            Terminal::Code(c) => {
                let j = if front {
                    self.dp.next()?
                } else {
                    self.dp.next_back()?
                };
                let dur = self.store.durations.get(j);
                let place = self.store.places.get(j);
                let w = self.store.header.place_width;
                let dur32 = u32::try_from(dur).ok()?;
                Some(match c {
                    Codeword::AbsAppear => LogEntry::Appear {
                        at: self.base.saturating_add(dur32),
                        cell: unpack_abs(place, w),
                    },
                    Codeword::RelDisappear => LogEntry::Gap {
                        len: dur32.max(1),
                        disp: unpack_rel(place, w),
                    },
                    Codeword::Disappear => LogEntry::Vanish {
                        from: self.base.saturating_add(dur32),
                        last: unpack_abs(place, w),
                    },
                })
            }
        }
    }
}

impl Iterator for LogIter<'_> {
    type Item = LogEntry;

    fn next(&mut self) -> Option<LogEntry> {
        let i = self.sym.next()?;
        self.decode(i, true)
    }
}

impl DoubleEndedIterator for LogIter<'_> {
    fn next_back(&mut self) -> Option<LogEntry> {
        let i = self.sym.next_back()?;
        self.decode(i, false)
    }
}

impl Store {
    /// Metadata of a dense symbol; terminals inside rules are movements.
    pub(crate) fn symbol_meta(&self, v: u64) -> Meta {
        let alpha = self.alphabet.len() as u64;
        if v < alpha {
            Meta::of_move(unpack_movement(self.alphabet[v as usize]).unwrap_or(Delta::ZERO))
        } else {
            self.rules.get((v - alpha) as usize).meta
        }
    }

    pub(crate) fn rule_children(&self, idx: usize) -> (u64, u64) {
        let r = self.rules.get(idx);
        (r.left.0, r.right.0)
    }

    pub(crate) fn alphabet_len(&self) -> u64 {
        self.alphabet.len() as u64
    }
}
