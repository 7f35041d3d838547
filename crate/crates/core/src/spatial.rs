//! The k³-tree: a succinct region octree (for `k = 2`) over the occupied
//! cells of a cube, stored as two bitmaps.
//!
//! `T` holds every level except the last in level order, `L` the last level.
//! Inside a block of `k³` sibling bits, child `(cx, cy, cz)` sits at offset
//! `cx + k·cy + k²·cz` (x fastest, then y, then z). The children of the 1 at
//! position `p` of `T` start at `rank1(T, p + 1) · k³` in the concatenation
//! `T ++ L`, so 1s in `L` enumerate occupied cells in k-ary Morton order.

use alloc::vec::Vec;

use crate::codec::{ByteReader, ByteWriter, Decode, Encode};
use crate::error::{Error, Result};
use crate::geom::{Cell, CellBox};
use crate::succinct::{BitVector, BitVectorBuilder};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct K3Tree {
    k: u32,
    side: u32,
    height: u32,
    t: BitVector,
    l: BitVector,
}

/// `log_k(side)` when `side` is a positive power of `k`.
pub fn height_for(side: u32, k: u32) -> Result<u32> {
    let err = Error::InvalidSide {
        side: side as u64,
        k,
    };
    if k < 2 || side < k {
        return Err(err);
    }
    let mut h = 0;
    let mut s = side;
    while s > 1 {
        if !s.is_multiple_of(k) {
            return Err(err);
        }
        s /= k;
        h += 1;
    }
    Ok(h)
}

/// Smallest power of `k` that is `>= n` and `>= k`.
pub fn padded_side(n: u32, k: u32) -> Option<u32> {
    let mut s = k;
    while s < n {
        s = s.checked_mul(k)?;
    }
    Some(s)
}

impl K3Tree {
    /// Builds the tree over `cells` (duplicates allowed) in a cube of `side`,
    /// which must be a power of `k`.
    pub fn build(cells: &[Cell], side: u32, k: u32) -> Result<Self> {
        let height = height_for(side, k)?;
        if let Some(&c) = cells.iter().find(|c| c.max_coord() >= side) {
            return Err(Error::CellOutOfBounds { cell: c, side });
        }
        let mut keys: Vec<u128> = cells.iter().map(|&c| morton_key(c, k, height)).collect();
        keys.sort_unstable();
        keys.dedup();

        let k3 = (k * k * k) as u128;
        let mut t = BitVectorBuilder::new();
        let mut l = BitVectorBuilder::new();
        for level in 0..height {
            let out = if level + 1 == height { &mut l } else { &mut t };
            let below = k3.pow(height - 1 - level);
            let mut prefix: Option<u128> = None;
            let mut block_start = 0;
            if keys.is_empty() && level == 0 {
                out.push_zeros(k3 as usize);
            }
            for &key in &keys {
                let p = key / (below * k3);
                if prefix != Some(p) {
                    prefix = Some(p);
                    block_start = out.len();
                    out.push_zeros(k3 as usize);
                }
                let digit = ((key / below) % k3) as usize;
                out.set(block_start + digit);
            }
        }
        Ok(K3Tree {
            k,
            side,
            height,
            t: t.build(),
            l: l.build(),
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn side(&self) -> u32 {
        self.side
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn t_bits(&self) -> &BitVector {
        &self.t
    }

    pub fn l_bits(&self) -> &BitVector {
        &self.l
    }

    /// Number of occupied cells.
    pub fn cell_count(&self) -> usize {
        self.l.count_ones()
    }

    fn k3(&self) -> usize {
        (self.k * self.k * self.k) as usize
    }

    /// Morton key of a cell in this tree's digit order.
    pub fn key_of(&self, c: Cell) -> u128 {
        morton_key(c, self.k, self.height)
    }

    /// Every occupied leaf inside `query`, in `L` order, as
    /// `(position in L, cell)`.
    pub fn leaves_in_box(&self, query: &CellBox) -> Vec<(usize, Cell)> {
        let mut out = Vec::new();
        self.for_each_leaf_in_box(query, |pos, c| out.push((pos, c)));
        out
    }

    pub fn for_each_leaf_in_box<F: FnMut(usize, Cell)>(&self, query: &CellBox, mut f: F) {
        let q = query.clamp(self.side);
        if query.is_empty() || q.is_empty() || self.l.count_ones() == 0 {
            return;
        }
        self.visit(0, 0, Cell::new(0, 0, 0), &q, &mut f);
    }

    fn visit<F: FnMut(usize, Cell)>(
        &self,
        block: usize,
        level: u32,
        origin: Cell,
        q: &CellBox,
        f: &mut F,
    ) {
        let k = self.k;
        let size = self.side / k.pow(level + 1);
        let last = level + 1 == self.height;
        let tlen = self.t.len();
        let axis = |o: u32, lo: u32, hi: u32| {
            (0..k).filter(move |&c| {
                let a = o + c * size;
                a <= hi && a + size > lo
            })
        };
        for cz in axis(origin.z, q.lo.z, q.hi.z) {
            for cy in axis(origin.y, q.lo.y, q.hi.y) {
                for cx in axis(origin.x, q.lo.x, q.hi.x) {
                    let pos = block + (cx + k * cy + k * k * cz) as usize;
                    let child = Cell::new(
                        origin.x + cx * size,
                        origin.y + cy * size,
                        origin.z + cz * size,
                    );
                    if last {
                        let lp = pos - tlen;
                        if self.l.get(lp) {
                            f(lp, child);
                        }
                    } else if self.t.get(pos) {
                        let next = self.t.rank1(pos + 1) * self.k3();
                        self.visit(next, level + 1, child, q, f);
                    }
                }
            }
        }
    }

    /// The cell of the 1 at position `leaf` of `L`, found by walking up.
    pub fn leaf_to_cell(&self, leaf: usize) -> Result<Cell> {
        if leaf >= self.l.len() || !self.l.get(leaf) {
            return Err(Error::InvalidLeaf(leaf));
        }
        let k = self.k;
        let k3 = self.k3();
        let mut g = self.t.len() + leaf;
        let mut scale = 1u32;
        let mut c = Cell::default();
        for step in 0..self.height {
            let digit = (g % k3) as u32;
            let block = g / k3;
            c.x += (digit % k) * scale;
            c.y += ((digit / k) % k) * scale;
            c.z += (digit / (k * k)) * scale;
            if step + 1 == self.height {
                if block != 0 {
                    return Err(Error::Corrupt("k3-tree path longer than its height"));
                }
                break;
            }
            scale *= k;
            g = self
                .t
                .select1(block)
                .ok_or(Error::Corrupt("k3-tree parent missing"))?;
        }
        Ok(c)
    }

    /// Position in `L` of the `j`-th (1-based) occupied leaf.
    pub fn leaf_position(&self, j: usize) -> Option<usize> {
        self.l.select1(j)
    }

    pub fn size_bytes(&self) -> usize {
        self.t.size_bytes() + self.l.size_bytes()
    }

    fn check(&self) -> Result<()> {
        let k3 = self.k3();
        if height_for(self.side, self.k)? != self.height {
            return Err(Error::Corrupt("k3-tree height"));
        }
        if !(self.t.len() + self.l.len()).is_multiple_of(k3) {
            return Err(Error::Corrupt("k3-tree bitmap sizes"));
        }
        // Blocks below the root are exactly the 1s of T (empty tree: only the root).
        let l_ok = if self.height == 1 {
            self.t.is_empty() && self.l.len() == k3
        } else {
            (self.t.count_ones() + 1)
                .checked_mul(k3)
                .and_then(|total| total.checked_sub(self.t.len()))
                == Some(self.l.len())
        };
        if !l_ok || (self.height > 1 && self.t.len() < k3) {
            return Err(Error::Corrupt("k3-tree block counts"));
        }
        Ok(())
    }
}

/// k-ary Morton key: the per-level child digits from the root down.
fn morton_key(c: Cell, k: u32, height: u32) -> u128 {
    let k3 = (k * k * k) as u128;
    let mut key = 0u128;
    for level in 0..height {
        let shift = k.pow(height - 1 - level);
        let d = (c.x / shift) % k + k * ((c.y / shift) % k) + k * k * ((c.z / shift) % k);
        key = key * k3 + d as u128;
    }
    key
}

impl Encode for K3Tree {
    fn encode(&self, w: &mut ByteWriter) {
        w.put_u32(self.k);
        w.put_u32(self.side);
        self.t.encode(w);
        self.l.encode(w);
    }
}

impl Decode for K3Tree {
    fn decode(r: &mut ByteReader<'_>) -> Result<Self> {
        let k = r.get_u32()?;
        let side = r.get_u32()?;
        if k > 1024 {
            return Err(Error::Corrupt("k3-tree arity"));
        }
        let height = height_for(side, k).map_err(|_| Error::Corrupt("k3-tree side"))?;
        let t = BitVector::decode(r)?;
        let l = BitVector::decode(r)?;
        let tree = K3Tree {
            k,
            side,
            height,
            t,
            l,
        };
        tree.check()?;
        Ok(tree)
    }
}
