//! Binary container: magic, format version, body, CRC-32 of everything
//! before the trailer. All integers are little-endian.

use alloc::vec::Vec;

use super::build::{place_width, MAX_SIDE};
use super::{GridMeta, PeriodLists, Store, StoreHeader};
use crate::codec::{ByteReader, ByteWriter, Decode, Encode};
use crate::error::{Error, Result};
use crate::grammar::{Meta, RuleTable};
use crate::movement::{is_codeword, unpack_movement};
use crate::snapshot::Snapshot;
use crate::spatial::height_for;
use crate::succinct::{DacSequence, IntVector};

pub const MAGIC: [u8; 4] = *b"3DGR";
pub const FORMAT_VERSION: u16 = 1;

const PREFIX: usize = MAGIC.len() + 2;
const TRAILER: usize = 4;

impl Encode for GridMeta {
    fn encode(&self, w: &mut ByteWriter) {
        for v in self.origin.iter().chain(self.cell_size.iter()) {
            w.put_f64(*v);
        }
        w.put_f64(self.time_origin);
        w.put_f64(self.step_seconds);
        w.put_u32(self.interpolated_from);
    }
}

impl Decode for GridMeta {
    fn decode(r: &mut ByteReader<'_>) -> Result<Self> {
        let mut v = [0.0; 6];
        for x in &mut v {
            *x = r.get_f64()?;
        }
        Ok(GridMeta {
            origin: [v[0], v[1], v[2]],
            cell_size: [v[3], v[4], v[5]],
            time_origin: r.get_f64()?,
            step_seconds: r.get_f64()?,
            interpolated_from: r.get_u32()?,
        })
    }
}

impl Encode for StoreHeader {
    fn encode(&self, w: &mut ByteWriter) {
        w.put_u32(self.side);
        w.put_u32(self.k);
        w.put_u32(self.period);
        w.put_u32(self.instants);
        w.put_u32(self.place_width);
        for s in self.speed {
            w.put_u32(s);
        }
        self.grid.encode(w);
        w.put_u64(self.names.len() as u64);
        for n in &self.names {
            w.put_str(n);
        }
    }
}

impl Decode for StoreHeader {
    fn decode(r: &mut ByteReader<'_>) -> Result<Self> {
        let side = r.get_u32()?;
        let k = r.get_u32()?;
        let period = r.get_u32()?;
        let instants = r.get_u32()?;
        let place_width = r.get_u32()?;
        let speed = [r.get_u32()?, r.get_u32()?, r.get_u32()?];
        let grid = GridMeta::decode(r)?;
        let count = r.get_len(8)?;
        let names = (0..count)
            .map(|_| r.get_str())
            .collect::<Result<Vec<_>>>()?;
        if count > u32::MAX as usize {
            return Err(Error::Corrupt("object count"));
        }
        Ok(StoreHeader {
            side,
            k,
            period,
            instants,
            names,
            speed,
            grid,
            place_width,
        })
    }
}

impl Encode for PeriodLists {
    fn encode(&self, w: &mut ByteWriter) {
        self.start.encode(w);
        self.ids.encode(w);
    }
}

impl Decode for PeriodLists {
    fn decode(r: &mut ByteReader<'_>) -> Result<Self> {
        Ok(PeriodLists {
            start: IntVector::decode(r)?,
            ids: IntVector::decode(r)?,
        })
    }
}

fn encode_alphabet(a: &[u32], w: &mut ByteWriter) {
    w.put_u64(a.len() as u64);
    for &c in a {
        w.put_u32(c);
    }
}

fn decode_alphabet(r: &mut ByteReader<'_>) -> Result<Vec<u32>> {
    let n = r.get_len(4)?;
    (0..n).map(|_| r.get_u32()).collect()
}

impl Store {
    /// Serializes into the checksummed container.
    pub fn serialize(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.put_bytes(&MAGIC);
        w.put_u16(FORMAT_VERSION);
        self.encode_body(&mut w);
        let crc = crc32fast::hash(w.as_slice());
        w.put_u32(crc);
        w.into_inner()
    }

    /// Parses and validates a container produced by [`Store::serialize`].
    pub fn deserialize(bytes: &[u8]) -> Result<Store> {
        if bytes.len() < MAGIC.len() || bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::BadMagic);
        }
        if bytes.len() < PREFIX + TRAILER {
            return Err(Error::Corrupt("truncated container"));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let (content, trailer) = bytes.split_at(bytes.len() - TRAILER);
        let stored = u32::from_le_bytes([trailer[0], trailer[1], trailer[2], trailer[3]]);
        let computed = crc32fast::hash(content);
        if stored != computed {
            return Err(Error::ChecksumMismatch { stored, computed });
        }
        let mut r = ByteReader::new(&content[PREFIX..]);
        let store = Store::decode_body(&mut r)?;
        if r.remaining() != 0 {
            return Err(Error::Corrupt("trailing bytes"));
        }
        store.validate()?;
        Ok(store)
    }

    fn encode_body(&self, w: &mut ByteWriter) {
        self.header.encode(w);
        w.put_u64(self.snapshots.len() as u64);
        for s in &self.snapshots {
            s.encode(w);
        }
        encode_alphabet(&self.alphabet, w);
        self.rules.encode(w);
        self.symbols.encode(w);
        self.log_start.encode(w);
        self.dp_start.encode(w);
        self.durations.encode(w);
        self.places.encode(w);
        self.appear.encode(w);
        self.vanish.encode(w);
    }

    fn decode_body(r: &mut ByteReader<'_>) -> Result<Store> {
        let header = StoreHeader::decode(r)?;
        // A snapshot takes at least a few dozen bytes.
        let count = r.get_len(16)?;
        let snapshots = (0..count)
            .map(|_| Snapshot::decode(r))
            .collect::<Result<Vec<_>>>()?;
        Ok(Store {
            header,
            snapshots,
            alphabet: decode_alphabet(r)?,
            rules: RuleTable::decode(r)?,
            symbols: IntVector::decode(r)?,
            log_start: IntVector::decode(r)?,
            dp_start: IntVector::decode(r)?,
            durations: DacSequence::decode(r)?,
            places: DacSequence::decode(r)?,
            appear: PeriodLists::decode(r)?,
            vanish: PeriodLists::decode(r)?,
        })
    }

    /// Serialized size of header, snapshots, grammar, log symbols, codeword
    /// payloads and appear/vanish lists.
    pub(crate) fn component_sizes(&self) -> [usize; 6] {
        let size = |f: &dyn Fn(&mut ByteWriter)| {
            let mut w = ByteWriter::new();
            f(&mut w);
            w.len()
        };
        [
            PREFIX + TRAILER + size(&|w| self.header.encode(w)),
            size(&|w| {
                w.put_u64(0);
                self.snapshots.iter().for_each(|s| s.encode(w));
            }),
            size(&|w| {
                encode_alphabet(&self.alphabet, w);
                self.rules.encode(w);
            }),
            size(&|w| {
                self.symbols.encode(w);
                self.log_start.encode(w);
            }),
            size(&|w| {
                self.dp_start.encode(w);
                self.durations.encode(w);
                self.places.encode(w);
            }),
            size(&|w| {
                self.appear.encode(w);
                self.vanish.encode(w);
            }),
        ]
    }

    /// Cross-checks the decoded parts so that queries never index out of
    /// bounds.
    fn validate(&self) -> Result<()> {
        let h = &self.header;
        if h.k < 2 || h.period < 2 || h.side > MAX_SIDE {
            return Err(Error::Corrupt("header parameters"));
        }
        height_for(h.side, h.k).map_err(|_| Error::Corrupt("header side"))?;
        if h.place_width != place_width(h.side) {
            return Err(Error::Corrupt("payload width"));
        }
        let n = h.names.len();
        let periods = if h.instants == 0 {
            0
        } else {
            ((h.instants - 1) / h.period + 1) as usize
        };
        if self.snapshots.len() != periods {
            return Err(Error::Corrupt("snapshot count"));
        }
        for (p, s) in self.snapshots.iter().enumerate() {
            if s.instant() as u64 != p as u64 * h.period as u64
                || s.tree().side() != h.side
                || s.tree().k() != h.k
                || s.universe() != n
            {
                return Err(Error::Corrupt("snapshot header"));
            }
        }

        if self.alphabet.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Corrupt("alphabet order"));
        }
        let alpha = self.alphabet.len() as u64;
        if self.rules.first_rule() != alpha {
            return Err(Error::Corrupt("rule table boundary"));
        }
        self.check_rule_metadata()?;
        let total = alpha + self.rules.len() as u64;
        if self.symbols.iter().any(|v| v >= total) {
            return Err(Error::UnknownSymbol(total));
        }

        let logs = n * periods;
        check_offsets(&self.log_start, logs + 1, self.symbols.len())?;
        check_offsets(&self.dp_start, logs + 1, self.durations.len())?;
        if self.places.len() != self.durations.len() {
            return Err(Error::Corrupt("payload lengths"));
        }
        for i in 0..logs {
            let (a, b) = (
                self.log_start.get(i) as usize,
                self.log_start.get(i + 1) as usize,
            );
            let codes = (a..b)
                .filter(|&j| {
                    let v = self.symbols.get(j);
                    v < alpha && is_codeword(self.alphabet[v as usize])
                })
                .count();
            if codes as u64 != self.dp_start.get(i + 1) - self.dp_start.get(i) {
                return Err(Error::Corrupt("codeword payload count"));
            }
        }
        for lists in [&self.appear, &self.vanish] {
            check_offsets(&lists.start, periods + 1, lists.ids.len())?;
            if lists.ids.iter().any(|id| id as usize >= n) {
                return Err(Error::Corrupt("period list object"));
            }
        }
        Ok(())
    }

    /// Rules may only contain movements, and their stored span,
    /// displacement and bounding box must match their children.
    fn check_rule_metadata(&self) -> Result<()> {
        let alpha = self.alphabet.len() as u64;
        let mut metas: Vec<Meta> = Vec::with_capacity(self.rules.len());
        for r in self.rules.rules() {
            let child = |s: u64, metas: &Vec<Meta>| -> Result<Meta> {
                if s < alpha {
                    let d = unpack_movement(self.alphabet[s as usize])
                        .ok_or(Error::Corrupt("codeword inside a rule"))?;
                    Ok(Meta::of_move(d))
                } else {
                    Ok(metas[(s - alpha) as usize])
                }
            };
            let (l, rt) = (child(r.left.0, &metas)?, child(r.right.0, &metas)?);
            let span = l
                .span
                .checked_add(rt.span)
                .ok_or(Error::Corrupt("rule span"))?;
            let m = Meta {
                span,
                disp: l.disp + rt.disp,
                mbb: l.mbb.union(&rt.mbb.translate(l.disp)),
            };
            if m != r.meta {
                return Err(Error::Corrupt("rule metadata"));
            }
            metas.push(m);
        }
        Ok(())
    }
}

fn check_offsets(v: &IntVector, len: usize, end: usize) -> Result<()> {
    if v.len() != len || v.get(0) != 0 || v.get(len - 1) != end as u64 {
        return Err(Error::Corrupt("offset table"));
    }
    if v.iter().zip(v.iter().skip(1)).any(|(a, b)| a > b) {
        return Err(Error::Corrupt("offset order"));
    }
    Ok(())
}
