//! Absolute positions of every present object at one instant.
//!
//! The k³-tree marks occupied cells; `perm` lists the objects of each
//! occupied leaf (in `L` order, ascending id inside a leaf) and `Q` marks the
//! last object of every leaf group with a 0.
//!
//! Finding an object's slot in `perm` uses sampled back-pointers along the
//! cycles of the permutation `π(slot) = rank of perm[slot] among present ids`:
//! every `step`-th element of each long cycle points `step` elements back,
//! so `π⁻¹` costs at most about `2·step` evaluations of `π`.

use alloc::vec::Vec;

use crate::codec::{ByteReader, ByteWriter, Decode, Encode};
use crate::error::{Error, Result};
use crate::geom::{Cell, CellBox};
use crate::spatial::K3Tree;
use crate::succinct::{bit_len, BitVector, BitVectorBuilder, IntVector};

pub const DEFAULT_SHORTCUT_STEP: u32 = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    instant: u32,
    tree: K3Tree,
    perm: IntVector,
    q: BitVector,
    present: BitVector,
    step: u32,
    sampled: BitVector,
    back: IntVector,
}

impl Snapshot {
    /// Builds the snapshot of `positions` (object id → cell). Ids must be
    /// below `universe`.
    pub fn build(
        positions: &[(u32, Cell)],
        instant: u32,
        universe: u32,
        side: u32,
        k: u32,
        step: u32,
    ) -> Result<Self> {
        if step == 0 {
            return Err(Error::InvalidConfig("shortcut step must be positive"));
        }
        let cells: Vec<Cell> = positions.iter().map(|&(_, c)| c).collect();
        let tree = K3Tree::build(&cells, side, k)?;

        let mut present = BitVectorBuilder::with_capacity(universe as usize);
        present.push_zeros(universe as usize);
        for &(id, _) in positions {
            if id >= universe {
                return Err(Error::OutOfRange {
                    index: id as usize,
                    len: universe as usize,
                });
            }
        }
        let mut entries: Vec<(u128, u32)> = positions
            .iter()
            .map(|&(id, c)| (tree.key_of(c), id))
            .collect();
        entries.sort_unstable();
        let mut ids: Vec<u32> = entries.iter().map(|&(_, id)| id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateObject(w[0]));
        }
        for &id in &ids {
            present.set(id as usize);
        }
        let present = present.build();

        let mut perm = IntVector::with_width(bit_len(universe.saturating_sub(1) as u64));
        let mut q = BitVectorBuilder::with_capacity(entries.len());
        for (i, &(key, id)) in entries.iter().enumerate() {
            perm.push(id as u64);
            q.push(entries.get(i + 1).is_some_and(|&(next, _)| next == key));
        }
        let q = q.build();

        let (sampled, back) = build_shortcuts(&perm, &present, step);
        Ok(Snapshot {
            instant,
            tree,
            perm,
            q,
            present,
            step,
            sampled,
            back,
        })
    }

    pub fn instant(&self) -> u32 {
        self.instant
    }

    pub fn tree(&self) -> &K3Tree {
        &self.tree
    }

    pub fn perm(&self) -> &IntVector {
        &self.perm
    }

    pub fn q_bits(&self) -> &BitVector {
        &self.q
    }

    /// Number of objects in the snapshot.
    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Number of object ids the snapshot is defined over.
    pub fn universe(&self) -> usize {
        self.present.len()
    }

    pub fn contains(&self, id: u32) -> bool {
        (id as usize) < self.present.len() && self.present.get(id as usize)
    }

    /// Objects whose cell lies inside `query`, as `(id, cell)`.
    pub fn objects_in_box(&self, query: &CellBox) -> Vec<(u32, Cell)> {
        let mut out = Vec::new();
        self.for_each_in_box(query, |id, c| out.push((id, c)));
        out
    }

    pub fn for_each_in_box<F: FnMut(u32, Cell)>(&self, query: &CellBox, mut f: F) {
        self.tree.for_each_leaf_in_box(query, |leaf, cell| {
            // 1-based ordinal of this leaf among occupied leaves.
            let x = self.tree.l_bits().rank1(leaf + 1);
            let mut p = if x == 1 {
                0
            } else {
                self.q
                    .select0(x - 1)
                    .expect("Q has one 0 per occupied leaf")
                    + 1
            };
            loop {
                f(self.perm.get(p) as u32, cell);
                if !self.q.get(p) {
                    break;
                }
                p += 1;
            }
        });
    }

    /// Cell of `id`, or `None` when the object is not in this snapshot.
    pub fn find_object(&self, id: u32) -> Option<Cell> {
        let slot = self.slot_of(id)?;
        let y = self.q.rank0(slot);
        let leaf = self.tree.leaf_position(y + 1)?;
        self.tree.leaf_to_cell(leaf).ok()
    }

    /// Slot of `id` in `perm`, via the cycle shortcuts.
    pub fn slot_of(&self, id: u32) -> Option<usize> {
        if !self.contains(id) {
            return None;
        }
        let target = self.present.rank1(id as usize);
        let mut j = target;
        let mut jumped = false;
        for _ in 0..=self.perm.len() {
            let pj = self.pi(j);
            if pj == target {
                return Some(j);
            }
            if !jumped && self.sampled.get(j) {
                j = self.back.get(self.sampled.rank1(j)) as usize;
                jumped = true;
            } else {
                j = pj;
            }
        }
        None
    }

    /// Slot of `id` by a linear scan of `perm`.
    pub fn slot_by_scan(&self, id: u32) -> Option<usize> {
        self.perm.iter().position(|v| v == id as u64)
    }

    #[inline]
    fn pi(&self, slot: usize) -> usize {
        self.present.rank1(self.perm.get(slot) as usize)
    }

    pub fn size_bytes(&self) -> usize {
        self.tree.size_bytes()
            + self.perm.size_bytes()
            + self.q.size_bytes()
            + self.present.size_bytes()
            + self.sampled.size_bytes()
            + self.back.size_bytes()
    }
}

fn build_shortcuts(perm: &IntVector, present: &BitVector, step: u32) -> (BitVector, IntVector) {
    let n = perm.len();
    let pi = |s: usize| present.rank1(perm.get(s) as usize);
    let step = step as usize;
    let mut seen = alloc::vec![false; n];
    let mut back_of: Vec<(usize, usize)> = Vec::new();
    let mut cycle = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        cycle.clear();
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            cycle.push(j);
            j = pi(j);
        }
        if cycle.len() <= step {
            continue;
        }
        let samples: Vec<usize> = (0..cycle.len()).step_by(step).collect();
        for (i, &s) in samples.iter().enumerate() {
            let prev = samples[(i + samples.len() - 1) % samples.len()];
            back_of.push((cycle[s], cycle[prev]));
        }
    }
    back_of.sort_unstable();
    let mut sampled = BitVectorBuilder::with_capacity(n);
    sampled.push_zeros(n);
    let mut back = IntVector::with_width(bit_len(n.saturating_sub(1) as u64));
    for &(slot, target) in &back_of {
        sampled.set(slot);
        back.push(target as u64);
    }
    (sampled.build(), back)
}

impl Encode for Snapshot {
    fn encode(&self, w: &mut ByteWriter) {
        w.put_u32(self.instant);
        self.tree.encode(w);
        self.perm.encode(w);
        self.q.encode(w);
        self.present.encode(w);
        w.put_u32(self.step);
        self.sampled.encode(w);
        self.back.encode(w);
    }
}

impl Decode for Snapshot {
    fn decode(r: &mut ByteReader<'_>) -> Result<Self> {
        let instant = r.get_u32()?;
        let tree = K3Tree::decode(r)?;
        let perm = IntVector::decode(r)?;
        let q = BitVector::decode(r)?;
        let present = BitVector::decode(r)?;
        let step = r.get_u32()?;
        let sampled = BitVector::decode(r)?;
        let back = IntVector::decode(r)?;
        let n = perm.len();
        if q.len() != n
            || q.count_zeros() != tree.cell_count()
            || present.count_ones() != n
            || sampled.len() != n
            || back.len() != sampled.count_ones()
            || step == 0
        {
            return Err(Error::Corrupt("snapshot component sizes"));
        }
        if perm
            .iter()
            .any(|id| id as usize >= present.len() || !present.get(id as usize))
            || back.iter().any(|s| s as usize >= n)
        {
            return Err(Error::Corrupt("snapshot permutation"));
        }
        Ok(Snapshot {
            instant,
            tree,
            perm,
            q,
            present,
            step,
            sampled,
            back,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeMap;
    use alloc::vec;
    use rand::{rngs::StdRng, seq::SliceRandom, Rng, SeedableRng};

    fn random_positions(
        rng: &mut StdRng,
        universe: u32,
        side: u32,
        shared: u32,
    ) -> Vec<(u32, Cell)> {
        let mut ids: Vec<u32> = (0..universe).collect();
        ids.shuffle(rng);
        let n = rng.gen_range(0..=universe) as usize;
        ids[..n]
            .iter()
            .map(|&id| {
                let m = if shared > 0 { side.min(shared) } else { side };
                (
                    id,
                    Cell::new(
                        rng.gen_range(0..m),
                        rng.gen_range(0..m),
                        rng.gen_range(0..m),
                    ),
                )
            })
            .collect()
    }

    #[test]
    fn first_leaf_group_holds_both_objects() {
        // Objects 3 and 6 share the first occupied cell in L order.
        let positions = [
            (6, Cell::new(0, 0, 0)),
            (3, Cell::new(0, 0, 0)),
            (4, Cell::new(0, 4, 0)),
            (1, Cell::new(5, 6, 1)),
            (2, Cell::new(2, 3, 1)),
        ];
        let s = Snapshot::build(&positions, 0, 8, 8, 2, 16).unwrap();
        assert_eq!(s.perm().get(0), 3);
        assert_eq!(s.perm().get(1), 6);
        assert!(s.q_bits().get(0));
        assert!(!s.q_bits().get(1));
        let first = CellBox::new(Cell::new(0, 0, 0), Cell::new(0, 0, 0));
        assert_eq!(
            s.objects_in_box(&first),
            vec![(3, Cell::new(0, 0, 0)), (6, Cell::new(0, 0, 0))]
        );
        assert_eq!(s.find_object(4), Some(Cell::new(0, 4, 0)));
        assert_eq!(s.find_object(5), None);
        assert_eq!(s.find_object(99), None);
    }

    #[test]
    fn single_object() {
        let s = Snapshot::build(&[(7, Cell::new(1, 2, 3))], 0, 10, 4, 2, 16).unwrap();
        assert_eq!(s.perm().iter().collect::<Vec<_>>(), vec![7]);
        assert_eq!(s.q_bits().iter().collect::<Vec<_>>(), vec![false]);
        assert_eq!(s.find_object(7), Some(Cell::new(1, 2, 3)));
    }

    #[test]
    fn duplicate_object_is_rejected() {
        let r = Snapshot::build(
            &[(1, Cell::new(0, 0, 0)), (1, Cell::new(1, 0, 0))],
            0,
            4,
            4,
            2,
            16,
        );
        assert_eq!(r, Err(Error::DuplicateObject(1)));
        assert!(Snapshot::build(&[(9, Cell::new(0, 0, 0))], 0, 4, 4, 2, 16).is_err());
    }

    #[test]
    fn random_snapshots_match_bucketing() {
        let mut rng = StdRng::seed_from_u64(17);
        for round in 0..200 {
            let universe = rng.gen_range(1..120);
            let side = 16;
            let positions =
                random_positions(&mut rng, universe, side, if round % 2 == 0 { 3 } else { 0 });
            let step = [1, 2, 3, 16][round % 4];
            let s = Snapshot::build(&positions, 0, universe, side, 2, step).unwrap();

            // Invariants on the layout.
            assert_eq!(s.len(), positions.len());
            assert_eq!(s.q_bits().count_zeros(), s.tree().cell_count());

            // Per-cell bucketing oracle, buckets in Morton order with ascending ids.
            let mut buckets: BTreeMap<u128, Vec<u32>> = BTreeMap::new();
            for &(id, c) in &positions {
                buckets.entry(s.tree().key_of(c)).or_default().push(id);
            }
            let mut expected_perm = Vec::new();
            for ids in buckets.values_mut() {
                ids.sort_unstable();
                expected_perm.extend(ids.iter().map(|&i| i as u64));
            }
            assert_eq!(s.perm().iter().collect::<Vec<_>>(), expected_perm);

            let map: BTreeMap<u32, Cell> = positions.iter().copied().collect();
            for id in 0..universe + 2 {
                assert_eq!(s.find_object(id), map.get(&id).copied());
                assert_eq!(s.slot_of(id), s.slot_by_scan(id));
            }
            let mut all: Vec<u32> = s
                .objects_in_box(&CellBox::cube(side))
                .into_iter()
                .map(|(i, _)| i)
                .collect();
            all.sort_unstable();
            assert_eq!(all, map.keys().copied().collect::<Vec<_>>());

            for _ in 0..5 {
                let a = Cell::new(
                    rng.gen_range(0..side),
                    rng.gen_range(0..side),
                    rng.gen_range(0..side),
                );
                let b = Cell::new(
                    rng.gen_range(a.x..side),
                    rng.gen_range(a.y..side),
                    rng.gen_range(a.z..side),
                );
                let q = CellBox::new(a, b);
                let mut got = s.objects_in_box(&q);
                got.sort_unstable();
                let want: Vec<(u32, Cell)> = map
                    .iter()
                    .filter(|(_, &c)| q.contains(c))
                    .map(|(&i, &c)| (i, c))
                    .collect();
                assert_eq!(got, want);
            }

            let mut w = ByteWriter::new();
            s.encode(&mut w);
            let bytes = w.into_inner();
            assert_eq!(
                Snapshot::decode(&mut ByteReader::new(&bytes)).as_ref(),
                Ok(&s)
            );
        }
    }

    #[test]
    fn empty_snapshot() {
        let s = Snapshot::build(&[], 0, 5, 8, 2, 16).unwrap();
        assert!(s.is_empty());
        assert!(s.objects_in_box(&CellBox::cube(8)).is_empty());
        assert_eq!(s.find_object(0), None);
    }
}
