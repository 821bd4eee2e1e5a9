//! Binary masks, Zhang–Suen thinning and skeleton adjacency.

use crate::world::{CellIndex, NEIGHBORS_8};

/// Dense boolean raster addressed like [`crate::world::OccupancyGrid`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryGrid {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryGrid {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(CellIndex) -> bool) -> Self {
        let mut g = Self::new(width, height);
        for row in 0..height {
            for col in 0..width {
                g.bits[row * width + col] = f(CellIndex::new(col, row));
            }
        }
        g
    }

    /// Builds a mask from text rows (top row first); any non-space, non-`.`
    /// character is set.
    pub fn from_rows(rows: &[&str]) -> Self {
        let height = rows.len();
        let width = rows.iter().map(|r| r.chars().count()).max().unwrap_or(0);
        let mut g = Self::new(width, height);
        for (i, line) in rows.iter().enumerate() {
            for (col, ch) in line.chars().enumerate() {
                if ch != '.' && ch != ' ' {
                    g.set(CellIndex::new(col, height - 1 - i), true);
                }
            }
        }
        g
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, cell: CellIndex) -> bool {
        cell.col < self.width && cell.row < self.height && self.bits[cell.row * self.width + cell.col]
    }

    /// Signed lookup; anything off the raster reads as unset.
    #[inline]
    pub fn at(&self, col: i64, row: i64) -> bool {
        col >= 0
            && row >= 0
            && (col as usize) < self.width
            && (row as usize) < self.height
            && self.bits[row as usize * self.width + col as usize]
    }

    #[inline]
    pub fn set(&mut self, cell: CellIndex, value: bool) {
        let i = cell.row * self.width + cell.col;
        self.bits[i] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Set cells in row-major order (bottom row first).
    pub fn cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| CellIndex::new(i % self.width, i / self.width))
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// 8-connected components, each listed in row-major order.
    pub fn components8(&self) -> Vec<Vec<CellIndex>> {
        let mut seen = vec![false; self.bits.len()];
        let mut out = Vec::new();
        for start in self.cells() {
            let si = start.row * self.width + start.col;
            if seen[si] {
                continue;
            }
            seen[si] = true;
            let mut comp = vec![start];
            let mut stack = vec![start];
            while let Some(c) = stack.pop() {
                for &(dc, dr) in &NEIGHBORS_8 {
                    let (nc, nr) = (c.col as i64 + dc as i64, c.row as i64 + dr as i64);
                    if self.at(nc, nr) {
                        let ni = nr as usize * self.width + nc as usize;
                        if !seen[ni] {
                            seen[ni] = true;
                            let n = CellIndex::new(nc as usize, nr as usize);
                            comp.push(n);
                            stack.push(n);
                        }
                    }
                }
            }
            comp.sort_unstable_by_key(|c| (c.row, c.col));
            out.push(comp);
        }
        out
    }
}

// Clockwise ring P2..P9 starting north (row + 1).
const RING: [(i64, i64); 8] = [
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
];

/// Zhang–Suen thinning to a one-cell-wide skeleton.
///
/// Components that thin away entirely (2×2 blocks) keep the cell closest to
/// their centroid, so every input component retains at least one pixel.
/// Returns the skeleton and the number of passes performed.
pub fn skeletonize(free_mask: &BinaryGrid) -> (BinaryGrid, usize) {
    let mut img = free_mask.clone();
    let mut passes = 0;
    let mut marked = Vec::new();
    loop {
        passes += 1;
        let mut changed = false;
        for sub in 0..2 {
            marked.clear();
            for cell in img.cells() {
                let (c, r) = (cell.col as i64, cell.row as i64);
                let p: [bool; 8] = std::array::from_fn(|k| img.at(c + RING[k].0, r + RING[k].1));
                let b = p.iter().filter(|&&x| x).count();
                if !(2..=6).contains(&b) {
                    continue;
                }
                let a = (0..8).filter(|&k| !p[k] && p[(k + 1) % 8]).count();
                if a != 1 {
                    continue;
                }
                // p[0]=P2 north, p[2]=P4 east, p[4]=P6 south, p[6]=P8 west
                let ok = if sub == 0 {
                    !(p[0] && p[2] && p[4]) && !(p[2] && p[4] && p[6])
                } else {
                    !(p[0] && p[2] && p[6]) && !(p[0] && p[4] && p[6])
                };
                if ok {
                    marked.push(cell);
                }
            }
            for &cell in &marked {
                img.set(cell, false);
            }
            changed |= !marked.is_empty();
        }
        if !changed {
            break;
        }
    }
    for comp in free_mask.components8() {
        if comp.iter().any(|&c| img.get(c)) {
            continue;
        }
        let n = comp.len() as f64;
        let cx = comp.iter().map(|c| c.col as f64).sum::<f64>() / n;
        let cy = comp.iter().map(|c| c.row as f64).sum::<f64>() / n;
        let keep = comp
            .iter()
            .copied()
            .min_by(|a, b| {
                let da = (a.col as f64 - cx).powi(2) + (a.row as f64 - cy).powi(2);
                let db = (b.col as f64 - cx).powi(2) + (b.row as f64 - cy).powi(2);
                da.total_cmp(&db)
            })
            .expect("components are non-empty");
        img.set(keep, true);
    }
    (img, passes)
}

/// Mixed (m-)adjacency: 4-neighbors always, diagonal neighbors only when no
/// shared 4-neighbor is set. Removes the redundant triangles 8-adjacency
/// creates on staircase skeletons.
pub fn m_neighbors(skel: &BinaryGrid, cell: CellIndex) -> Vec<CellIndex> {
    let (c, r) = (cell.col as i64, cell.row as i64);
    let mut out = Vec::with_capacity(4);
    for &(dc, dr) in &NEIGHBORS_8 {
        let (dc, dr) = (dc as i64, dr as i64);
        if !skel.at(c + dc, r + dr) {
            continue;
        }
        if dc != 0 && dr != 0 && (skel.at(c + dc, r) || skel.at(c, r + dr)) {
            continue;
        }
        out.push(CellIndex::new((c + dc) as usize, (r + dr) as usize));
    }
    out
}
