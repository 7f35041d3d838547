//! Re-Pair over log streams, with every rule enriched by the number of
//! instants it covers, its net displacement and the bounding box of all the
//! positions it visits (relative to the position before the rule, origin
//! included).
//!
//! Pairs never form across stream boundaries or with a codeword on either
//! side. Among equally frequent pairs the lexicographically smallest
//! `(left, right)` is replaced first.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Reverse;

use hashbrown::HashMap;

use crate::codec::{ByteReader, ByteWriter, Decode, Encode};
use crate::error::{Error, Result};
use crate::geom::{Delta, RelBox};
use crate::movement::{is_codeword, unpack_movement};

/// A grammar symbol. Values below the table's `first_rule` are terminals;
/// `first_rule + i` is the `i`-th rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(pub u64);

/// Where rule ids start when terminals are raw 32-bit log words.
pub const RAW_FIRST_RULE: u64 = 1 << 32;

/// Span, displacement and bounding box of a symbol's expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Meta {
    pub span: u32,
    pub disp: Delta,
    pub mbb: RelBox,
}

impl Meta {
    pub fn of_move(d: Delta) -> Meta {
        Meta {
            span: 1,
            disp: d,
            mbb: RelBox::spanning(d),
        }
    }
}

/// Metadata of the concatenation `left · right`.
pub fn rule_metadata(left: &Meta, right: &Meta) -> Meta {
    Meta {
        span: left.span + right.span,
        disp: left.disp + right.disp,
        mbb: left.mbb.union(&right.mbb.translate(left.disp)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rule {
    pub left: Symbol,
    pub right: Symbol,
    pub meta: Meta,
}

/// Rules in creation order; each refers only to terminals or earlier rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleTable {
    first_rule: u64,
    rules: Vec<Rule>,
}

impl RuleTable {
    pub fn new(first_rule: u64) -> Self {
        RuleTable {
            first_rule,
            rules: Vec::new(),
        }
    }

    pub fn first_rule(&self) -> u64 {
        self.first_rule
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn is_rule(&self, s: Symbol) -> bool {
        s.0 >= self.first_rule
    }

    pub fn rule(&self, s: Symbol) -> Result<&Rule> {
        s.0.checked_sub(self.first_rule)
            .and_then(|i| self.rules.get(i as usize))
            .ok_or(Error::UnknownSymbol(s.0))
    }

    /// Rule by index (not symbol).
    pub fn get(&self, idx: usize) -> &Rule {
        &self.rules[idx]
    }

    pub fn symbol_of(&self, idx: usize) -> Symbol {
        Symbol(self.first_rule + idx as u64)
    }

    fn push(&mut self, left: Symbol, right: Symbol, meta: Meta) -> Symbol {
        self.rules.push(Rule { left, right, meta });
        Symbol(self.first_rule + self.rules.len() as u64 - 1)
    }

    /// Terminals of `sym`, left to right.
    pub fn expand(&self, sym: Symbol) -> Result<Vec<Symbol>> {
        let mut out = Vec::new();
        self.expand_into(sym, &mut out)?;
        Ok(out)
    }

    pub fn expand_into(&self, sym: Symbol, out: &mut Vec<Symbol>) -> Result<()> {
        let mut stack = alloc::vec![sym];
        while let Some(s) = stack.pop() {
            if self.is_rule(s) {
                let r = self.rule(s)?;
                stack.push(r.right);
                stack.push(r.left);
            } else {
                out.push(s);
            }
        }
        Ok(())
    }

    /// Rewrites terminal ids with `map` and moves rule ids to start at
    /// `first_rule`. Metadata is unchanged.
    pub fn remap<F: Fn(Symbol) -> Symbol>(&self, first_rule: u64, map: F) -> RuleTable {
        let re = |s: Symbol| {
            if self.is_rule(s) {
                Symbol(s.0 - self.first_rule + first_rule)
            } else {
                map(s)
            }
        };
        RuleTable {
            first_rule,
            rules: self
                .rules
                .iter()
                .map(|r| Rule {
                    left: re(r.left),
                    right: re(r.right),
                    meta: r.meta,
                })
                .collect(),
        }
    }

    pub(crate) fn check(&self) -> Result<()> {
        for (i, r) in self.rules.iter().enumerate() {
            let own = self.first_rule + i as u64;
            if r.left.0 >= own || r.right.0 >= own {
                return Err(Error::Corrupt("rule refers to a later symbol"));
            }
        }
        Ok(())
    }
}

impl Encode for RuleTable {
    fn encode(&self, w: &mut ByteWriter) {
        w.put_u64(self.first_rule);
        w.put_u64(self.rules.len() as u64);
        for r in &self.rules {
            w.put_u32(r.left.0 as u32);
            w.put_u32(r.right.0 as u32);
            w.put_u32(r.meta.span);
            for v in [r.meta.disp.dx, r.meta.disp.dy, r.meta.disp.dz] {
                w.put_i32(v);
            }
            for v in r.meta.mbb.lo.iter().chain(r.meta.mbb.hi.iter()) {
                w.put_i32(*v);
            }
        }
    }
}

const RULE_BYTES: usize = 4 * 12;

impl Decode for RuleTable {
    fn decode(r: &mut ByteReader<'_>) -> Result<Self> {
        let first_rule = r.get_u64()?;
        if first_rule > u32::MAX as u64 {
            return Err(Error::Corrupt("rule table boundary"));
        }
        let n = r.get_len(RULE_BYTES)?;
        let mut rules = Vec::with_capacity(n);
        for _ in 0..n {
            let left = Symbol(r.get_u32()? as u64);
            let right = Symbol(r.get_u32()? as u64);
            let span = r.get_u32()?;
            let disp = Delta::new(r.get_i32()?, r.get_i32()?, r.get_i32()?);
            let lo = [r.get_i32()?, r.get_i32()?, r.get_i32()?];
            let hi = [r.get_i32()?, r.get_i32()?, r.get_i32()?];
            rules.push(Rule {
                left,
                right,
                meta: Meta {
                    span,
                    disp,
                    mbb: RelBox { lo, hi },
                },
            });
        }
        let t = RuleTable { first_rule, rules };
        t.check()?;
        Ok(t)
    }
}

/// Output of [`repair_compress`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Compressed {
    pub streams: Vec<Vec<Symbol>>,
    pub rules: RuleTable,
}

const NONE: u32 = u32::MAX;
const BOUNDARY: u64 = u64::MAX;

#[derive(Default)]
struct PairStat {
    /// Adjacent (possibly overlapping) occurrences in the current sequence.
    count: u32,
    /// Left positions of occurrences; may hold stale entries.
    occ: Vec<u32>,
}

struct Repair {
    seq: Vec<u64>,
    next: Vec<u32>,
    prev: Vec<u32>,
    pairs: HashMap<(u64, u64), PairStat>,
    heap: BinaryHeap<(u32, Reverse<(u64, u64)>)>,
    table: RuleTable,
    metas: Vec<Meta>,
}

/// Compresses log streams whose terminals are raw 32-bit log words.
///
/// Every stream expands back to its input; no pair of pairable symbols
/// occurs twice (without overlap) across the output.
pub fn repair_compress(streams: &[Vec<u32>]) -> Compressed {
    let total: usize = streams.iter().map(|s| s.len() + 1).sum();
    assert!(total < NONE as usize, "input too long for 32-bit positions");
    let mut seq = Vec::with_capacity(total);
    for s in streams {
        seq.extend(s.iter().map(|&t| t as u64));
        seq.push(BOUNDARY);
    }
    let n = seq.len();
    let mut rp = Repair {
        next: (1..=n as u32)
            .map(|i| if i as usize == n { NONE } else { i })
            .collect(),
        prev: (0..n as u32)
            .map(|i| if i == 0 { NONE } else { i - 1 })
            .collect(),
        seq,
        pairs: HashMap::new(),
        heap: BinaryHeap::new(),
        table: RuleTable::new(RAW_FIRST_RULE),
        metas: Vec::new(),
    };
    rp.run();
    rp.finish(streams.len())
}

impl Repair {
    fn pairable(&self, a: u64, b: u64) -> bool {
        let ok = |s: u64| s != BOUNDARY && (s >= RAW_FIRST_RULE || !is_codeword(s as u32));
        ok(a) && ok(b)
    }

    fn meta(&self, s: u64) -> Meta {
        if s >= RAW_FIRST_RULE {
            self.metas[(s - RAW_FIRST_RULE) as usize]
        } else {
            Meta::of_move(unpack_movement(s as u32).expect("pairable terminal is a movement"))
        }
    }

    fn inc(&mut self, a: u64, b: u64, pos: u32) {
        if !self.pairable(a, b) {
            return;
        }
        let st = self.pairs.entry((a, b)).or_default();
        st.count += 1;
        st.occ.push(pos);
        if st.count >= 2 {
            self.heap.push((st.count, Reverse((a, b))));
        }
    }

    fn dec(&mut self, a: u64, b: u64) {
        if !self.pairable(a, b) {
            return;
        }
        if let Some(st) = self.pairs.get_mut(&(a, b)) {
            st.count -= 1;
        }
    }

    fn run(&mut self) {
        for i in 0..self.seq.len().saturating_sub(1) {
            let (a, b) = (self.seq[i], self.seq[i + 1]);
            if self.pairable(a, b) {
                let st = self.pairs.entry((a, b)).or_default();
                st.count += 1;
                st.occ.push(i as u32);
            }
        }
        let initial: Vec<_> = self
            .pairs
            .iter()
            .filter(|(_, st)| st.count >= 2)
            .map(|(&p, st)| (st.count, Reverse(p)))
            .collect();
        self.heap.extend(initial);

        while let Some((key, Reverse(pair))) = self.heap.pop() {
            let Some(st) = self.pairs.get_mut(&pair) else {
                continue;
            };
            if st.count != key {
                if st.count < key && st.count >= 2 {
                    self.heap.push((st.count, Reverse(pair)));
                }
                continue;
            }
            let mut occ = core::mem::take(&mut st.occ);
            occ.sort_unstable();
            occ.dedup();
            let (a, b) = pair;
            let mut valid = Vec::with_capacity(occ.len());
            let mut last_right = NONE;
            for &i in &occ {
                if i == last_right || self.seq[i as usize] != a {
                    continue;
                }
                let j = self.next[i as usize];
                if j == NONE || self.seq[j as usize] != b {
                    continue;
                }
                valid.push(i);
                last_right = j;
            }
            if valid.len() < 2 {
                // Dormant until a new occurrence bumps its count again.
                self.pairs.get_mut(&pair).unwrap().occ = valid;
                continue;
            }
            let meta = rule_metadata(&self.meta(a), &self.meta(b));
            let w = self.table.push(Symbol(a), Symbol(b), meta).0;
            self.metas.push(meta);
            for &i in &valid {
                self.replace_at(i, w);
            }
            if self.pairs.get(&pair).is_some_and(|st| st.count == 0) {
                self.pairs.remove(&pair);
            }
        }
    }

    fn replace_at(&mut self, i: u32, w: u64) {
        let iu = i as usize;
        let j = self.next[iu];
        let (a, b) = (self.seq[iu], self.seq[j as usize]);
        let p = self.prev[iu];
        let n = self.next[j as usize];
        if p != NONE {
            self.dec(self.seq[p as usize], a);
        }
        if n != NONE {
            self.dec(b, self.seq[n as usize]);
        }
        self.dec(a, b);
        self.seq[iu] = w;
        self.seq[j as usize] = BOUNDARY;
        self.next[iu] = n;
        if n != NONE {
            self.prev[n as usize] = i;
        }
        self.next[j as usize] = NONE;
        self.prev[j as usize] = NONE;
        if p != NONE {
            self.inc(self.seq[p as usize], w, p);
        }
        if n != NONE {
            self.inc(w, self.seq[n as usize], i);
        }
    }

    fn finish(self, count: usize) -> Compressed {
        let mut streams = Vec::with_capacity(count);
        let mut cur = Vec::new();
        let mut i = if self.seq.is_empty() { NONE } else { 0 };
        while i != NONE {
            let s = self.seq[i as usize];
            if s == BOUNDARY {
                streams.push(core::mem::take(&mut cur));
            } else {
                cur.push(Symbol(s));
            }
            i = self.next[i as usize];
        }
        debug_assert_eq!(streams.len(), count);
        Compressed {
            streams,
            rules: self.table,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::movement::{pack_movement, DISAPPEAR, REL_DISAPPEAR};
    use alloc::vec;
    use hashbrown::HashSet;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn mv(dx: i32, dy: i32, dz: i32) -> u32 {
        pack_movement(Delta::new(dx, dy, dz)).unwrap()
    }

    fn expand_stream(c: &Compressed, s: &[Symbol]) -> Vec<u32> {
        s.iter()
            .flat_map(|&x| c.rules.expand(x).unwrap())
            .map(|x| x.0 as u32)
            .collect()
    }

    fn naive_expand(t: &RuleTable, s: Symbol) -> Vec<Symbol> {
        if t.is_rule(s) {
            let r = t.rule(s).unwrap();
            let mut v = naive_expand(t, r.left);
            v.extend(naive_expand(t, r.right));
            v
        } else {
            vec![s]
        }
    }

    /// Metadata recomputed from the expansion: prefix sums of the moves.
    fn meta_from_moves(moves: &[Delta]) -> Meta {
        let mut p = Delta::ZERO;
        let mut mbb = RelBox::default();
        for &d in moves {
            p = p + d;
            mbb = mbb.union(&RelBox::spanning(p));
        }
        Meta {
            span: moves.len() as u32,
            disp: p,
            mbb,
        }
    }

    fn assert_no_repeated_pair(c: &Compressed) {
        let pairable = |s: Symbol| c.rules.is_rule(s) || !is_codeword(s.0 as u32);
        let mut seen = HashSet::new();
        for s in &c.streams {
            let mut i = 0;
            while i + 1 < s.len() {
                if pairable(s[i]) && pairable(s[i + 1]) {
                    assert!(
                        seen.insert((s[i], s[i + 1])),
                        "pair {:?} repeated",
                        (s[i], s[i + 1])
                    );
                    // Skip an overlapping occurrence of the same pair.
                    if s[i] == s[i + 1] && i + 2 < s.len() && s[i + 2] == s[i] {
                        i += 1;
                    }
                }
                i += 1;
            }
        }
    }

    #[test]
    fn two_equal_moves_make_one_rule() {
        let one = mv(1, 1, 1);
        let c = repair_compress(&[vec![one, one], vec![one, one]]);
        assert_eq!(c.rules.len(), 1);
        let r = c.rules.get(0);
        assert_eq!((r.left.0, r.right.0), (one as u64, one as u64));
        assert_eq!(r.meta.span, 2);
        assert_eq!(r.meta.disp, Delta::new(2, 2, 2));
        assert_eq!(
            r.meta.mbb,
            RelBox {
                lo: [0, 0, 0],
                hi: [2, 2, 2]
            }
        );
        let w = c.rules.symbol_of(0);
        assert_eq!(c.streams, vec![vec![w], vec![w]]);
        assert_eq!(c.rules.expand(w).unwrap(), vec![Symbol(one as u64); 2]);
    }

    #[test]
    fn single_stream_pair_twice_only_with_repetition() {
        // A pair seen once is left alone.
        let one = mv(1, 1, 1);
        let c = repair_compress(&[vec![one, one]]);
        assert!(c.rules.is_empty());
        assert_eq!(c.streams, vec![vec![Symbol(one as u64); 2]]);
    }

    #[test]
    fn distinct_pairs_stay_unchanged() {
        let s = vec![mv(1, 0, 0), mv(0, 1, 0), mv(0, 0, 1), mv(-1, 0, 0)];
        let c = repair_compress(core::slice::from_ref(&s));
        assert!(c.rules.is_empty());
        assert_eq!(expand_stream(&c, &c.streams[0]), s);
    }

    #[test]
    fn metadata_of_stationary_pair() {
        let m = rule_metadata(&Meta::of_move(Delta::ZERO), &Meta::of_move(Delta::ZERO));
        assert_eq!(m.span, 2);
        assert_eq!(m.disp, Delta::ZERO);
        assert_eq!(m.mbb, RelBox::default());
    }

    #[test]
    fn codewords_and_boundaries_split_pairs() {
        let a = mv(1, 0, 0);
        let streams = vec![vec![a, REL_DISAPPEAR, a], vec![a], vec![a, DISAPPEAR]];
        let c = repair_compress(&streams);
        assert!(c.rules.is_empty());
        for (s, orig) in c.streams.iter().zip(&streams) {
            assert_eq!(&expand_stream(&c, s), orig);
        }
    }

    #[test]
    fn long_run_compresses_logarithmically() {
        let a = mv(2, -1, 0);
        let c = repair_compress(&[vec![a; 1000]]);
        assert!(c.streams[0].len() <= 12, "{} symbols", c.streams[0].len());
        assert_eq!(expand_stream(&c, &c.streams[0]), vec![a; 1000]);
        assert_no_repeated_pair(&c);
    }

    #[test]
    fn random_streams_roundtrip_and_metadata() {
        let mut rng = StdRng::seed_from_u64(23);
        for round in 0..60 {
            let alphabet: Vec<u32> = (0..rng.gen_range(1..6))
                .map(|_| {
                    mv(
                        rng.gen_range(-2..=2),
                        rng.gen_range(-2..=2),
                        rng.gen_range(-1..=1),
                    )
                })
                .collect();
            let streams: Vec<Vec<u32>> = (0..rng.gen_range(1..8))
                .map(|_| {
                    (0..rng.gen_range(0..300))
                        .map(|_| match rng.gen_range(0..40) {
                            0 => REL_DISAPPEAR,
                            1 if round % 2 == 0 => DISAPPEAR,
                            _ => alphabet[rng.gen_range(0..alphabet.len())],
                        })
                        .collect()
                })
                .collect();
            let c = repair_compress(&streams);
            let orig_len: usize = streams.iter().map(Vec::len).sum();
            let comp_len: usize = c.streams.iter().map(Vec::len).sum();
            assert!(comp_len + 2 * c.rules.len() <= orig_len + 2);
            for (s, orig) in c.streams.iter().zip(&streams) {
                assert_eq!(&expand_stream(&c, s), orig);
            }
            assert_no_repeated_pair(&c);
            c.rules.check().unwrap();
            for i in 0..c.rules.len() {
                let sym = c.rules.symbol_of(i);
                let exp = c.rules.expand(sym).unwrap();
                assert_eq!(exp, naive_expand(&c.rules, sym));
                let moves: Vec<Delta> = exp
                    .iter()
                    .map(|s| unpack_movement(s.0 as u32).unwrap())
                    .collect();
                assert_eq!(c.rules.get(i).meta, meta_from_moves(&moves));
            }
        }
    }

    #[test]
    fn deterministic() {
        let mut rng = StdRng::seed_from_u64(1);
        let streams: Vec<Vec<u32>> = (0..5)
            .map(|_| {
                (0..200)
                    .map(|_| mv(rng.gen_range(-1..=1), rng.gen_range(-1..=1), 0))
                    .collect()
            })
            .collect();
        assert_eq!(repair_compress(&streams), repair_compress(&streams));
    }

    #[test]
    fn unknown_symbol_is_an_error() {
        let t = RuleTable::new(10);
        assert_eq!(t.expand(Symbol(12)), Err(Error::UnknownSymbol(12)));
        assert_eq!(t.expand(Symbol(3)), Ok(vec![Symbol(3)]));
    }

    #[test]
    fn table_roundtrip() {
        let one = mv(1, 1, 1);
        let c = repair_compress(&[vec![one; 9], vec![one; 5]]);
        let t = c.rules.remap(4, |_| Symbol(0));
        let mut w = ByteWriter::new();
        t.encode(&mut w);
        let bytes = w.into_inner();
        assert_eq!(RuleTable::decode(&mut ByteReader::new(&bytes)), Ok(t));
    }
}
