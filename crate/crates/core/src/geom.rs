//! Grid cells, relative movements and boxes.

use core::fmt;

/// A cell of the discretized cube, addressed by `(x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Cell {
    pub x: u32,
    pub y: u32,
    pub z: u32,
}

impl Cell {
    pub const fn new(x: u32, y: u32, z: u32) -> Self {
        Cell { x, y, z }
    }

    /// Moves the cell by `d`. Wraps instead of panicking on corrupt input.
    pub fn offset(self, d: Delta) -> Cell {
        Cell {
            x: self.x.wrapping_add_signed(d.dx),
            y: self.y.wrapping_add_signed(d.dy),
            z: self.z.wrapping_add_signed(d.dz),
        }
    }

    /// Moves the cell by `-d`.
    pub fn offset_back(self, d: Delta) -> Cell {
        self.offset(Delta::new(
            d.dx.wrapping_neg(),
            d.dy.wrapping_neg(),
            d.dz.wrapping_neg(),
        ))
    }

    /// The displacement that takes `self` to `other`.
    pub fn delta_to(self, other: Cell) -> Delta {
        Delta {
            dx: (other.x as i64 - self.x as i64) as i32,
            dy: (other.y as i64 - self.y as i64) as i32,
            dz: (other.z as i64 - self.z as i64) as i32,
        }
    }

    pub fn max_coord(self) -> u32 {
        self.x.max(self.y).max(self.z)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.x, self.y, self.z)
    }
}

/// A relative movement in cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Delta {
    pub dx: i32,
    pub dy: i32,
    pub dz: i32,
}

impl Delta {
    pub const ZERO: Delta = Delta {
        dx: 0,
        dy: 0,
        dz: 0,
    };

    pub const fn new(dx: i32, dy: i32, dz: i32) -> Self {
        Delta { dx, dy, dz }
    }
}

impl core::ops::Add for Delta {
    type Output = Delta;

    fn add(self, o: Delta) -> Delta {
        Delta::new(
            self.dx.wrapping_add(o.dx),
            self.dy.wrapping_add(o.dy),
            self.dz.wrapping_add(o.dz),
        )
    }
}

/// Inclusive box of cells `[lo.x..=hi.x] × [lo.y..=hi.y] × [lo.z..=hi.z]`.
///
/// A box with `lo > hi` on any axis is empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellBox {
    pub lo: Cell,
    pub hi: Cell,
}

impl CellBox {
    pub const fn new(lo: Cell, hi: Cell) -> Self {
        CellBox { lo, hi }
    }

    /// The whole `[0, side)³` cube.
    pub fn cube(side: u32) -> Self {
        let m = side.saturating_sub(1);
        CellBox::new(Cell::new(0, 0, 0), Cell::new(m, m, m))
    }

    pub fn is_empty(&self) -> bool {
        self.lo.x > self.hi.x || self.lo.y > self.hi.y || self.lo.z > self.hi.z
    }

    pub fn contains(&self, c: Cell) -> bool {
        (self.lo.x..=self.hi.x).contains(&c.x)
            && (self.lo.y..=self.hi.y).contains(&c.y)
            && (self.lo.z..=self.hi.z).contains(&c.z)
    }

    /// Clamps the box to `[0, side)³`.
    pub fn clamp(&self, side: u32) -> CellBox {
        let m = side.saturating_sub(1);
        CellBox::new(
            Cell::new(self.lo.x.min(m), self.lo.y.min(m), self.lo.z.min(m)),
            Cell::new(self.hi.x.min(m), self.hi.y.min(m), self.hi.z.min(m)),
        )
    }

    /// Widens every axis by `by[axis]` cells on both sides, clamped to the cube.
    pub fn widen(&self, by: [u64; 3], side: u32) -> CellBox {
        let m = side.saturating_sub(1) as u64;
        let lo = |v: u32, w: u64| (v as u64).saturating_sub(w).min(m) as u32;
        let hi = |v: u32, w: u64| (v as u64).saturating_add(w).min(m) as u32;
        CellBox::new(
            Cell::new(
                lo(self.lo.x, by[0]),
                lo(self.lo.y, by[1]),
                lo(self.lo.z, by[2]),
            ),
            Cell::new(
                hi(self.hi.x, by[0]),
                hi(self.hi.y, by[1]),
                hi(self.hi.z, by[2]),
            ),
        )
    }

    /// Whether the box `[lo, hi]` on axis ranges intersects this one.
    pub(crate) fn intersects_range(&self, lo: [i64; 3], hi: [i64; 3]) -> bool {
        let a = self.lo_array();
        let b = self.hi_array();
        (0..3).all(|i| lo[i] <= b[i] && hi[i] >= a[i])
    }

    pub(crate) fn contains_range(&self, lo: [i64; 3], hi: [i64; 3]) -> bool {
        let a = self.lo_array();
        let b = self.hi_array();
        (0..3).all(|i| lo[i] >= a[i] && hi[i] <= b[i])
    }

    fn lo_array(&self) -> [i64; 3] {
        [self.lo.x as i64, self.lo.y as i64, self.lo.z as i64]
    }

    fn hi_array(&self) -> [i64; 3] {
        [self.hi.x as i64, self.hi.y as i64, self.hi.z as i64]
    }
}

/// Inclusive box relative to a start position, as stored in grammar rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RelBox {
    pub lo: [i32; 3],
    pub hi: [i32; 3],
}

impl RelBox {
    /// The smallest box holding the origin and `d`.
    pub fn spanning(d: Delta) -> RelBox {
        let v = [d.dx, d.dy, d.dz];
        RelBox {
            lo: v.map(|c| c.min(0)),
            hi: v.map(|c| c.max(0)),
        }
    }

    pub fn union(&self, other: &RelBox) -> RelBox {
        RelBox {
            lo: [0, 1, 2].map(|i| self.lo[i].min(other.lo[i])),
            hi: [0, 1, 2].map(|i| self.hi[i].max(other.hi[i])),
        }
    }

    pub fn translate(&self, d: Delta) -> RelBox {
        let v = [d.dx, d.dy, d.dz];
        RelBox {
            lo: [0, 1, 2].map(|i| self.lo[i].wrapping_add(v[i])),
            hi: [0, 1, 2].map(|i| self.hi[i].wrapping_add(v[i])),
        }
    }

    pub fn contains(&self, d: Delta) -> bool {
        let v = [d.dx, d.dy, d.dz];
        (0..3).all(|i| self.lo[i] <= v[i] && v[i] <= self.hi[i])
    }

    /// Absolute `(lo, hi)` corners once anchored at `at`.
    pub(crate) fn anchored(&self, at: Cell) -> ([i64; 3], [i64; 3]) {
        let p = [at.x as i64, at.y as i64, at.z as i64];
        (
            [0, 1, 2].map(|i| p[i] + self.lo[i] as i64),
            [0, 1, 2].map(|i| p[i] + self.hi[i] as i64),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widen_clamps_to_cube() {
        let r = CellBox::new(Cell::new(4, 4, 4), Cell::new(6, 6, 6));
        assert_eq!(
            r.widen([2, 2, 2], 16),
            CellBox::new(Cell::new(2, 2, 2), Cell::new(8, 8, 8))
        );
        assert_eq!(
            r.widen([100, 1, 0], 8),
            CellBox::new(Cell::new(0, 3, 4), Cell::new(7, 7, 6))
        );
    }

    #[test]
    fn malformed_box_is_empty() {
        let b = CellBox::new(Cell::new(3, 0, 0), Cell::new(2, 5, 5));
        assert!(b.is_empty());
        assert!(!b.contains(Cell::new(2, 1, 1)));
    }

    #[test]
    fn relbox_spanning_includes_origin() {
        let b = RelBox::spanning(Delta::new(2, -1, 0));
        assert_eq!(b.lo, [0, -1, 0]);
        assert_eq!(b.hi, [2, 0, 0]);
        assert!(b.contains(Delta::ZERO));
    }
}
