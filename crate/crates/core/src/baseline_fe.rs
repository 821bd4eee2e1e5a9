//! Baseline explorer pieces: wavefront frontier detection, size/distance goal
//! selection and 8-connected grid Dijkstra.

use std::collections::{BinaryHeap, VecDeque};

use thiserror::Error;

use crate::pq::MinEntry;
use crate::semantic_topo::{clearance_field, is_frontier_cell, BinaryGrid};
use crate::world::{CellIndex, CellState, OccupancyGrid, NEIGHBORS_8};

#[derive(Debug, Error, PartialEq)]
pub enum FeError {
    #[error("robot cell {0} is not Free")]
    RobotNotFree(CellIndex),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierCluster {
    pub id: usize,
    /// Cells in discovery order.
    pub cells: Vec<CellIndex>,
    pub size: usize,
    /// Rounded mean of the cells; need not be Free.
    pub centroid_cell: CellIndex,
    /// Cluster cell closest to the centroid.
    pub entry_cell: CellIndex,
    /// Wavefront steps from the robot to `entry_cell`.
    pub distance: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeConfig {
    pub alpha_size: f64,
    pub alpha_dist: f64,
    /// Meters around Occupied cells where planning steps are penalized.
    pub inflation: f64,
    /// Extra step cost, as a multiple of the step, right next to an obstacle.
    pub inflation_cost: f64,
}

impl Default for FeConfig {
    fn default() -> Self {
        Self {
            alpha_size: 1.0,
            alpha_dist: 1.0,
            inflation: 0.3,
            inflation_cost: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WfdResult {
    pub clusters: Vec<FrontierCluster>,
    /// Cells dequeued by the outer and inner breadth-first searches.
    pub visited: usize,
}

/// Wavefront frontier detection from `robot_cell` through Free space.
pub fn wfd_detect(explored: &OccupancyGrid, robot_cell: CellIndex) -> Result<WfdResult, FeError> {
    if !explored.is_free(robot_cell) {
        return Err(FeError::RobotNotFree(robot_cell));
    }
    let n = explored.len();
    let mut dist = vec![usize::MAX; n];
    let mut in_cluster = vec![false; n];
    let mut visited = 0;
    let mut groups: Vec<Vec<CellIndex>> = Vec::new();
    let mut queue = VecDeque::from([robot_cell]);
    dist[explored.index(robot_cell)] = 0;
    while let Some(c) = queue.pop_front() {
        visited += 1;
        let dc = dist[explored.index(c)];
        if !in_cluster[explored.index(c)] && is_frontier_cell(explored, c) {
            // Inner wavefront over connected frontier cells.
            let mut group = vec![c];
            in_cluster[explored.index(c)] = true;
            let mut inner = VecDeque::from([c]);
            while let Some(f) = inner.pop_front() {
                visited += 1;
                for m in explored.neighbors8(f) {
                    let mi = explored.index(m);
                    if !in_cluster[mi] && is_frontier_cell(explored, m) {
                        in_cluster[mi] = true;
                        group.push(m);
                        inner.push_back(m);
                    }
                }
            }
            groups.push(group);
        }
        for m in explored.neighbors8(c) {
            let mi = explored.index(m);
            if dist[mi] == usize::MAX && explored.is_free(m) {
                dist[mi] = dc + 1;
                queue.push_back(m);
            }
        }
    }
    let clusters = groups
        .into_iter()
        .enumerate()
        .map(|(id, cells)| {
            let k = cells.len() as f64;
            let cx = cells.iter().map(|c| c.col as f64).sum::<f64>() / k;
            let cy = cells.iter().map(|c| c.row as f64).sum::<f64>() / k;
            let centroid_cell = CellIndex::new(cx.round() as usize, cy.round() as usize);
            let mut entry_cell = cells[0];
            let mut best = f64::INFINITY;
            for &c in &cells {
                let d = (c.col as f64 - cx).powi(2) + (c.row as f64 - cy).powi(2);
                if d < best {
                    best = d;
                    entry_cell = c;
                }
            }
            FrontierCluster {
                id,
                size: cells.len(),
                distance: dist[explored.index(entry_cell)],
                cells,
                centroid_cell,
                entry_cell,
            }
        })
        .collect();
    Ok(WfdResult { clusters, visited })
}

/// Utility `α_size·size − α_dist·distance`.
pub fn fe_utility(c: &FrontierCluster, cfg: &FeConfig) -> f64 {
    cfg.alpha_size * c.size as f64 - cfg.alpha_dist * c.distance as f64
}

/// Highest-utility cluster, ties to the smaller id; `None` when exploration is complete.
pub fn fe_select<'a>(clusters: &'a [FrontierCluster], cfg: &FeConfig) -> Option<&'a FrontierCluster> {
    clusters.iter().max_by(|a, b| {
        fe_utility(a, cfg)
            .total_cmp(&fe_utility(b, cfg))
            .then(b.id.cmp(&a.id))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub cells: Vec<CellIndex>,
    /// In cells; diagonal steps cost √2, scaled up near obstacles when a penalty is used.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub path: Option<GridPath>,
    /// Nodes settled by the search.
    pub expansions: usize,
}

/// True when a step from `c` by `(dc, dr)` stays in Free space without
/// cutting an occupied or unknown corner.
pub fn step_allowed(grid: &OccupancyGrid, c: CellIndex, dc: isize, dr: isize) -> bool {
    let Some(n) = grid.neighbor(c, dc, dr) else {
        return false;
    };
    if !grid.is_free(n) {
        return false;
    }
    if dc != 0 && dr != 0 {
        let a = grid.neighbor(c, dc, 0).is_some_and(|x| grid.is_free(x));
        let b = grid.neighbor(c, 0, dr).is_some_and(|x| grid.is_free(x));
        return a && b;
    }
    true
}

/// Per-cell step multiplier surcharge falling linearly from `weight` at an
/// Occupied cell to zero at `inflation` meters.
pub fn clearance_penalty(explored: &OccupancyGrid, inflation: f64, weight: f64) -> Vec<f64> {
    let mask = BinaryGrid::from_fn(explored.width(), explored.height(), |c| {
        explored.state(c) != CellState::Occupied
    });
    let res = explored.resolution();
    clearance_field(&mask)
        .into_iter()
        .map(|d| {
            if inflation > 0.0 {
                weight * (1.0 - d * res / inflation).max(0.0)
            } else {
                0.0
            }
        })
        .collect()
}

/// 8-connected Dijkstra over Free cells; Unknown and Occupied block.
pub fn grid_plan(explored: &OccupancyGrid, from: CellIndex, to: CellIndex) -> PlanResult {
    grid_plan_with(explored, from, to, None)
}

/// [`grid_plan`] with an optional per-cell surcharge applied to steps entering a cell.
pub fn grid_plan_with(
    explored: &OccupancyGrid,
    from: CellIndex,
    to: CellIndex,
    penalty: Option<&[f64]>,
) -> PlanResult {
    let mut expansions = 0;
    if !explored.is_free(from) || !explored.is_free(to) {
        return PlanResult {
            path: None,
            expansions,
        };
    }
    let n = explored.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent: Vec<Option<CellIndex>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    dist[explored.index(from)] = 0.0;
    heap.push(MinEntry::new(0.0, seq, from));
    while let Some(MinEntry { cost, item: c, .. }) = heap.pop() {
        if cost > dist[explored.index(c)] {
            continue;
        }
        expansions += 1;
        if c == to {
            let mut cells = vec![c];
            let mut cur = c;
            while let Some(p) = parent[explored.index(cur)] {
                cells.push(p);
                cur = p;
            }
            cells.reverse();
            return PlanResult {
                path: Some(GridPath { cells, cost }),
                expansions,
            };
        }
        for &(dc, dr) in &NEIGHBORS_8 {
            if !step_allowed(explored, c, dc, dr) {
                continue;
            }
            let m = explored.neighbor(c, dc, dr).expect("allowed steps stay on the grid");
            let step = if dc != 0 && dr != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
            let mi = explored.index(m);
            let nd = cost + step * (1.0 + penalty.map_or(0.0, |p| p[mi]));
            if nd < dist[mi] {
                dist[mi] = nd;
                parent[mi] = Some(c);
                seq += 1;
                heap.push(MinEntry::new(nd, seq, m));
            }
        }
    }
    PlanResult {
        path: None,
        expansions,
    }
}
