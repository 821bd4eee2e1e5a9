//! Frontier cells, reachability and clustering on the explored grid.

use std::collections::VecDeque;

use super::skeleton::BinaryGrid;
use crate::world::{CellIndex, CellState, OccupancyGrid};

/// Free cells 8-connected to `start` through Free cells (including `start`).
pub fn reachable_free(grid: &OccupancyGrid, start: CellIndex) -> BinaryGrid {
    let mut mask = BinaryGrid::new(grid.width(), grid.height());
    if !grid.is_free(start) {
        return mask;
    }
    mask.set(start, true);
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        for n in grid.neighbors8(c) {
            if !mask.get(n) && grid.state(n) == CellState::Free {
                mask.set(n, true);
                queue.push_back(n);
            }
        }
    }
    mask
}

/// True when `cell` is Free and has an Unknown 8-neighbor.
#[inline]
pub fn is_frontier_cell(grid: &OccupancyGrid, cell: CellIndex) -> bool {
    grid.state(cell) == CellState::Free
        && grid
            .neighbors8(cell)
            .any(|n| grid.state(n) == CellState::Unknown)
}

/// Every frontier cell of the map, row-major order.
pub fn detect_frontier_cells(grid: &OccupancyGrid) -> Vec<CellIndex> {
    (0..grid.len())
        .map(|i| grid.cell_at(i))
        .filter(|&c| is_frontier_cell(grid, c))
        .collect()
}

/// Groups cells into 8-connected clusters. Clusters are ordered by their
/// first cell in row-major order; cells within a cluster are row-major too.
pub fn cluster_cells(width: usize, height: usize, cells: &[CellIndex]) -> Vec<Vec<CellIndex>> {
    let mut mask = BinaryGrid::new(width, height);
    for &c in cells {
        mask.set(c, true);
    }
    mask.components8()
}
