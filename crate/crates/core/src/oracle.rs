//! Brute-force reference answers over uncompressed events.

use alloc::vec::Vec;

use crate::geom::{Cell, CellBox};
use crate::store::CellEvent;

/// Every known position of every object, sorted by instant.
#[derive(Debug, Clone, Default)]
pub struct OracleStore {
    tracks: Vec<Vec<(u32, Cell)>>,
    instants: u32,
}

impl OracleStore {
    /// Events may come in any order; `objects` and `instants` bound the ids
    /// and instants queried later.
    pub fn new(events: &[CellEvent], objects: u32, instants: u32) -> Self {
        let mut tracks = alloc::vec![Vec::new(); objects as usize];
        for e in events {
            tracks[e.object as usize].push((e.instant, e.cell));
        }
        for t in &mut tracks {
            t.sort_unstable();
        }
        OracleStore { tracks, instants }
    }

    pub fn objects(&self) -> u32 {
        self.tracks.len() as u32
    }

    pub fn instants(&self) -> u32 {
        self.instants
    }

    pub fn track(&self, object: u32) -> &[(u32, Cell)] {
        &self.tracks[object as usize]
    }

    pub fn position_of(&self, object: u32, t: u32) -> Option<Cell> {
        let tr = self.tracks.get(object as usize)?;
        tr.binary_search_by_key(&t, |&(i, _)| i)
            .ok()
            .map(|i| tr[i].1)
    }

    pub fn trajectory(&self, object: u32, ts: u32, te: u32) -> Vec<(u32, Option<Cell>)> {
        (ts..=te)
            .map(|t| (t, self.position_of(object, t)))
            .collect()
    }

    pub fn time_slice(&self, r: &CellBox, t: u32) -> Vec<(u32, Cell)> {
        (0..self.objects())
            .filter_map(|o| {
                self.position_of(o, t)
                    .filter(|c| r.contains(*c))
                    .map(|c| (o, c))
            })
            .collect()
    }

    pub fn time_interval(&self, r: &CellBox, ts: u32, te: u32) -> Vec<u32> {
        (0..self.objects())
            .filter(|&o| {
                self.tracks[o as usize]
                    .iter()
                    .any(|&(t, c)| ts <= t && t <= te && r.contains(c))
            })
            .collect()
    }
}
