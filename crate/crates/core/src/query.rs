//! The four queries over the compressed store.
//!
//! Queries start from the snapshot nearest to the query instant and replay
//! the log forward (or backward from the next snapshot). Whole rules are
//! skipped through their span and displacement; a rule overlapping the
//! queried instants is accepted or rejected from its bounding box when
//! possible and expanded otherwise. Candidates of the spatial queries come
//! from the snapshot restricted to the query box widened by the maximum
//! speed times the distance in instants.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::{Cell, CellBox};
use crate::store::{LogEntry, Store};

/// Snapshot used as the starting point of a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    /// The closer of the two snapshots around the instant (the earlier on a
    /// tie).
    #[default]
    Nearest,
    Forward,
    /// From the following snapshot when it exists and, for position queries,
    /// holds the object.
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryOptions {
    /// Use speed-widened candidate boxes, early discards and rule bounding
    /// boxes. Disabling it replays every candidate log in full.
    pub prune: bool,
    pub direction: Direction,
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions {
            prune: true,
            direction: Direction::Nearest,
        }
    }
}

/// A position inside the query box: exact, or somewhere in the expansion
/// of `sym` applied after instant `t` at `pos`.
enum Found {
    At(Cell),
    Within { sym: u64, t: u32, pos: Cell },
}

enum Visit {
    Hit(Found),
    Next(Cell),
}

impl Store {
    fn check_object(&self, object: u32) -> Result<()> {
        if object >= self.objects() {
            return Err(Error::OutOfRange {
                index: object as usize,
                len: self.objects() as usize,
            });
        }
        Ok(())
    }

    fn check_instant(&self, t: u32) -> Result<()> {
        if t >= self.instants() {
            return Err(Error::OutOfRange {
                index: t as usize,
                len: self.instants() as usize,
            });
        }
        Ok(())
    }

    /// Whether to start from the snapshot after `t` rather than before it.
    fn go_backward(&self, t: u32, dir: Direction) -> bool {
        let p = (t / self.period()) as usize;
        if p + 1 >= self.periods() {
            return false;
        }
        let s = self.period_start(p);
        match dir {
            Direction::Forward => false,
            Direction::Backward => true,
            Direction::Nearest => t - s > s + self.period() - t,
        }
    }

    fn widened(&self, r: &CellBox, dist: u32) -> CellBox {
        let sp = self.header.speed;
        r.widen([0, 1, 2].map(|i| sp[i] as u64 * dist as u64), self.side())
    }

    /// Cell of `object` at instant `t`, `None` when unknown.
    pub fn position_of(&self, object: u32, t: u32) -> Result<Option<Cell>> {
        self.position_of_with(object, t, &QueryOptions::default())
    }

    pub fn position_of_with(
        &self,
        object: u32,
        t: u32,
        opts: &QueryOptions,
    ) -> Result<Option<Cell>> {
        self.check_object(object)?;
        self.check_instant(t)?;
        let p = (t / self.period()) as usize;
        if t == self.period_start(p) {
            return Ok(self.snapshots[p].find_object(object));
        }
        if self.go_backward(t, opts.direction) {
            if let Some(end) = self.snapshots[p + 1].find_object(object) {
                return Ok(self.position_backward(object, p, end, t));
            }
        }
        Ok(self.position_forward(object, p, t))
    }

    fn position_forward(&self, object: u32, p: usize, tq: u32) -> Option<Cell> {
        let mut t = self.period_start(p);
        let mut pos = self.snapshots[p].find_object(object);
        for item in self.log(object, p) {
            match item {
                LogEntry::Move(d) => {
                    pos = Some(pos?.offset(d));
                    t += 1;
                }
                LogEntry::Rule(idx) => {
                    let m = self.rules.get(idx).meta;
                    let end = t.saturating_add(m.span);
                    if end < tq {
                        pos = Some(pos?.offset(m.disp));
                        t = end;
                    } else {
                        return Some(self.locate(self.rules.symbol_of(idx).0, t, pos?, tq));
                    }
                }
                LogEntry::Appear { at, cell } => {
                    if tq < at {
                        return None;
                    }
                    pos = Some(cell);
                    t = at;
                }
                LogEntry::Gap { len, disp } => {
                    t = t.saturating_add(len);
                    if tq < t {
                        return None;
                    }
                    pos = Some(pos?.offset(disp));
                }
                LogEntry::Vanish { .. } => return None,
            }
            if t >= tq {
                return if t == tq { pos } else { None };
            }
        }
        None
    }

    fn position_backward(&self, object: u32, p: usize, end: Cell, tq: u32) -> Option<Cell> {
        let mut t = self.period_start(p + 1);
        let mut pos = end;
        for item in self.log(object, p).rev() {
            match item {
                LogEntry::Move(d) => {
                    pos = pos.offset_back(d);
                    t -= 1;
                }
                LogEntry::Rule(idx) => {
                    let m = self.rules.get(idx).meta;
                    let start = t.checked_sub(m.span)?;
                    let before = pos.offset_back(m.disp);
                    if start < tq {
                        return Some(self.locate(self.rules.symbol_of(idx).0, start, before, tq));
                    }
                    pos = before;
                    t = start;
                }
                LogEntry::Gap { len, disp } => {
                    let start = t.checked_sub(len)?;
                    if start < tq {
                        return None;
                    }
                    pos = pos.offset_back(disp);
                    t = start;
                }
                LogEntry::Appear { .. } | LogEntry::Vanish { .. } => return None,
            }
            if t == tq {
                return Some(pos);
            }
        }
        None
    }

    /// Position at `tq` inside the expansion of `sym`, which starts after
    /// instant `t` at `pos` and covers `tq`.
    fn locate(&self, mut sym: u64, mut t: u32, mut pos: Cell, tq: u32) -> Cell {
        let alpha = self.alphabet_len();
        loop {
            if sym < alpha {
                return pos.offset(self.symbol_meta(sym).disp);
            }
            let (left, right) = self.rule_children((sym - alpha) as usize);
            let lm = self.symbol_meta(left);
            let mid = t.saturating_add(lm.span);
            if mid >= tq {
                if mid == tq {
                    return pos.offset(lm.disp);
                }
                sym = left;
            } else {
                pos = pos.offset(lm.disp);
                t = mid;
                sym = right;
            }
        }
    }

    /// One `(instant, cell)` entry per instant of `[ts, te]`; the cell is
    /// `None` where the object is unknown.
    pub fn trajectory(&self, object: u32, ts: u32, te: u32) -> Result<Vec<(u32, Option<Cell>)>> {
        self.check_object(object)?;
        self.check_instant(te)?;
        if ts > te {
            return Err(Error::InvalidConfig("trajectory start after end"));
        }
        let mut out = Vec::with_capacity((te - ts + 1) as usize);
        let d = self.period();
        for p in (ts / d) as usize..=(te / d) as usize {
            let s = self.period_start(p);
            let last = te.min(s + d - 1);
            self.walk_forward(object, p, ts.max(s), last, |t, c| out.push((t, c)));
        }
        Ok(out)
    }

    /// Calls `f(t, cell)` for every instant of `[from, to]` inside period `p`,
    /// in order, expanding only the rules that reach `from`.
    pub(crate) fn walk_forward<F: FnMut(u32, Option<Cell>)>(
        &self,
        object: u32,
        p: usize,
        from: u32,
        to: u32,
        mut f: F,
    ) {
        let mut t = self.period_start(p);
        let mut pos = self.snapshots[p].find_object(object);
        let mut emit = |t: u32, c: Option<Cell>| {
            if (from..=to).contains(&t) {
                f(t, c);
            }
        };
        emit(t, pos);
        let alpha = self.alphabet_len();
        let mut stack = Vec::new();
        for item in self.log(object, p) {
            if t >= to {
                return;
            }
            match item {
                LogEntry::Move(d) => {
                    t += 1;
                    pos = pos.map(|c| c.offset(d));
                    emit(t, pos);
                }
                LogEntry::Rule(idx) => {
                    stack.push(self.rules.symbol_of(idx).0);
                    while let Some(sym) = stack.pop() {
                        let m = self.symbol_meta(sym);
                        if t.saturating_add(m.span) < from || t >= to {
                            t = t.saturating_add(m.span);
                            pos = pos.map(|c| c.offset(m.disp));
                        } else if sym < alpha {
                            t += 1;
                            pos = pos.map(|c| c.offset(m.disp));
                            emit(t, pos);
                        } else {
                            let (l, r) = self.rule_children((sym - alpha) as usize);
                            stack.push(r);
                            stack.push(l);
                        }
                    }
                }
                LogEntry::Appear { at, cell } => {
                    while t + 1 < at && t < to {
                        t += 1;
                        emit(t, None);
                    }
                    t = at;
                    pos = Some(cell);
                    emit(t, pos);
                }
                LogEntry::Gap { len, disp } => {
                    let end = t.saturating_add(len);
                    while t + 1 < end && t < to {
                        t += 1;
                        emit(t, None);
                    }
                    t = end;
                    pos = pos.map(|c| c.offset(disp));
                    emit(t, pos);
                }
                LogEntry::Vanish { .. } => break,
            }
        }
        // Unknown for the rest of the log.
        let end = to.min(self.period_end(p));
        while t < end {
            t += 1;
            emit(t, None);
        }
    }

    /// Objects inside `r` at instant `t` with their cells, sorted by id.
    pub fn time_slice(&self, r: &CellBox, t: u32) -> Result<Vec<(u32, Cell)>> {
        self.time_slice_with(r, t, &QueryOptions::default())
    }

    pub fn time_slice_with(
        &self,
        r: &CellBox,
        t: u32,
        opts: &QueryOptions,
    ) -> Result<Vec<(u32, Cell)>> {
        self.check_instant(t)?;
        let r = r.clamp(self.side());
        let mut out = Vec::new();
        if r.is_empty() {
            return Ok(out);
        }
        let p = (t / self.period()) as usize;
        let s = self.period_start(p);
        if t == s {
            self.snapshots[p].for_each_in_box(&r, |id, c| out.push((id, c)));
        } else if self.go_backward(t, opts.direction) {
            let e = self.period_start(p + 1);
            let area = if opts.prune {
                self.widened(&r, e - t)
            } else {
                CellBox::cube(self.side())
            };
            self.snapshots[p + 1].for_each_in_box(&area, |id, c| {
                if let Some(c) = self.track_backward(id, p, c, t, &r, opts.prune) {
                    out.push((id, c));
                }
            });
            for id in self.vanish.of(p) {
                let start = self.snapshots[p].find_object(id);
                if let Some(f) = self.track_forward(id, p, start, t, t, &r, opts.prune) {
                    out.push((id, self.resolve(f, t)));
                }
            }
        } else {
            self.scan_period(
                p,
                t,
                t,
                &r,
                opts.prune,
                |_| false,
                |id, f| out.push((id, self.resolve(f, t))),
            );
        }
        out.sort_unstable_by_key(|&(id, _)| id);
        Ok(out)
    }

    /// Objects inside `r` at some instant of `[ts, te]`, sorted by id.
    pub fn time_interval(&self, r: &CellBox, ts: u32, te: u32) -> Result<Vec<u32>> {
        self.time_interval_with(r, ts, te, &QueryOptions::default())
    }

    pub fn time_interval_with(
        &self,
        r: &CellBox,
        ts: u32,
        te: u32,
        opts: &QueryOptions,
    ) -> Result<Vec<u32>> {
        self.check_instant(te)?;
        if ts > te {
            return Err(Error::InvalidConfig("interval start after end"));
        }
        let r = r.clamp(self.side());
        let mut out = Vec::new();
        if r.is_empty() {
            return Ok(out);
        }
        let mut found = alloc::vec![false; self.objects() as usize];
        let d = self.period();
        for p in (ts / d) as usize..=(te / d) as usize {
            let s = self.period_start(p);
            let (a, b) = (ts.max(s), te.min(s + d - 1));
            let mut hits = Vec::new();
            self.scan_period(
                p,
                a,
                b,
                &r,
                opts.prune,
                |id| found[id as usize],
                |id, _| hits.push(id),
            );
            for id in hits {
                found[id as usize] = true;
                out.push(id);
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Reports through `hit` the objects of period `p` inside `r` at some
    /// instant of `[a, b]`, tracking forward from the period's snapshot.
    /// Objects for which `skip` holds are not examined.
    #[allow(clippy::too_many_arguments)]
    fn scan_period<S: Fn(u32) -> bool, H: FnMut(u32, Found)>(
        &self,
        p: usize,
        a: u32,
        b: u32,
        r: &CellBox,
        prune: bool,
        skip: S,
        mut hit: H,
    ) {
        let s = self.period_start(p);
        let area = if prune {
            self.widened(r, b - s)
        } else {
            CellBox::cube(self.side())
        };
        self.snapshots[p].for_each_in_box(&area, |id, c| {
            if !skip(id) {
                if let Some(f) = self.track_forward(id, p, Some(c), a, b, r, prune) {
                    hit(id, f);
                }
            }
        });
        for id in self.appear.of(p) {
            if !skip(id) {
                if let Some(f) = self.track_forward(id, p, None, a, b, r, prune) {
                    hit(id, f);
                }
            }
        }
    }

    /// Cell at `tq` of a hit reported for the single instant `tq`.
    fn resolve(&self, f: Found, tq: u32) -> Cell {
        match f {
            Found::At(c) => c,
            Found::Within { sym, t, pos } => self.locate(sym, t, pos, tq),
        }
    }

    /// Where `object`, at `start` on the snapshot of period `p`, is first
    /// seen inside `r` during `[a, b]`.
    #[allow(clippy::too_many_arguments)]
    fn track_forward(
        &self,
        object: u32,
        p: usize,
        start: Option<Cell>,
        a: u32,
        b: u32,
        r: &CellBox,
        prune: bool,
    ) -> Option<Found> {
        let mut t = self.period_start(p);
        let mut pos = start;
        if let Some(c) = pos {
            if t >= a && r.contains(c) {
                return Some(Found::At(c));
            }
        }
        let mut stack = Vec::new();
        for item in self.log(object, p) {
            if t >= b {
                return None;
            }
            let c = match item {
                LogEntry::Move(d) => {
                    t += 1;
                    pos?.offset(d)
                }
                LogEntry::Rule(idx) => {
                    let sym = self.rules.symbol_of(idx).0;
                    let c = match self.visit(sym, t, pos?, a, b, r, prune, &mut stack) {
                        Visit::Hit(f) => return Some(f),
                        Visit::Next(c) => c,
                    };
                    t = t.saturating_add(self.rules.get(idx).meta.span);
                    pos = Some(c);
                    if prune && t < b && !self.widened(r, b - t).contains(c) {
                        return None;
                    }
                    continue;
                }
                LogEntry::Appear { at, cell } => {
                    t = at;
                    cell
                }
                LogEntry::Gap { len, disp } => {
                    t = t.saturating_add(len);
                    pos?.offset(disp)
                }
                LogEntry::Vanish { .. } => return None,
            };
            if t > b {
                return None;
            }
            if t >= a && r.contains(c) {
                return Some(Found::At(c));
            }
            pos = Some(c);
            if prune && t < b && !self.widened(r, b - t).contains(c) {
                return None;
            }
        }
        None
    }

    /// Replays `sym` from `(t, pos)` looking for a position inside `r` at an
    /// instant of `[a, b]`.
    #[allow(clippy::too_many_arguments)]
    fn visit(
        &self,
        sym: u64,
        mut t: u32,
        mut pos: Cell,
        a: u32,
        b: u32,
        r: &CellBox,
        prune: bool,
        stack: &mut Vec<u64>,
    ) -> Visit {
        let alpha = self.alphabet_len();
        stack.clear();
        stack.push(sym);
        while let Some(s) = stack.pop() {
            let m = self.symbol_meta(s);
            let end = t.saturating_add(m.span);
            if end < a || t >= b {
                t = end;
                pos = pos.offset(m.disp);
                continue;
            }
            if prune {
                let (lo, hi) = m.mbb.anchored(pos);
                if r.contains_range(lo, hi) {
                    return Visit::Hit(Found::Within { sym: s, t, pos });
                }
                if !r.intersects_range(lo, hi) {
                    t = end;
                    pos = pos.offset(m.disp);
                    continue;
                }
            }
            if s < alpha {
                t = end;
                pos = pos.offset(m.disp);
                if r.contains(pos) {
                    return Visit::Hit(Found::At(pos));
                }
            } else {
                let (l, rt) = self.rule_children((s - alpha) as usize);
                stack.push(rt);
                stack.push(l);
            }
        }
        Visit::Next(pos)
    }

    /// Cell of `object` at `tq` if inside `r`, tracking backward from `end`
    /// on the snapshot after period `p`.
    fn track_backward(
        &self,
        object: u32,
        p: usize,
        end: Cell,
        tq: u32,
        r: &CellBox,
        prune: bool,
    ) -> Option<Cell> {
        let mut t = self.period_start(p + 1);
        let mut pos = end;
        let mut stack = Vec::new();
        for item in self.log(object, p).rev() {
            match item {
                LogEntry::Move(d) => {
                    pos = pos.offset_back(d);
                    t -= 1;
                }
                LogEntry::Rule(idx) => {
                    let m = self.rules.get(idx).meta;
                    let start = t.checked_sub(m.span)?;
                    let before = pos.offset_back(m.disp);
                    if start < tq {
                        let sym = self.rules.symbol_of(idx).0;
                        return match self.visit(sym, start, before, tq, tq, r, prune, &mut stack) {
                            Visit::Hit(f) => Some(self.resolve(f, tq)),
                            Visit::Next(_) => None,
                        };
                    }
                    pos = before;
                    t = start;
                }
                LogEntry::Gap { len, disp } => {
                    let start = t.checked_sub(len)?;
                    if start < tq {
                        return None;
                    }
                    pos = pos.offset_back(disp);
                    t = start;
                }
                LogEntry::Appear { .. } | LogEntry::Vanish { .. } => return None,
            }
            if t == tq {
                return r.contains(pos).then_some(pos);
            }
            if prune && !self.widened(r, t - tq).contains(pos) {
                return None;
            }
        }
        None
    }
}
