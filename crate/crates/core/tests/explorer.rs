//! Closed-loop missions on small fixture maps.

mod common;

use topo_explore::explorer::{run_exploration, ExplorationRun, Outcome, RunConfig, Strategy};
use topo_explore::robot_sim::footprint_collides;
use topo_explore::semantic_topo::detect_frontier_cells;
use topo_explore::world::{CellState, OccupancyGrid, WorldPose};

use common::*;

/// Builds a map from a closure over (col, row) with row 0 at the bottom.
fn map_from(w: usize, h: usize, wall: impl Fn(usize, usize) -> bool) -> OccupancyGrid {
    let rows: Vec<String> = (0..h)
        .rev()
        .map(|r| (0..w).map(|c| if wall(c, r) { '#' } else { '.' }).collect())
        .collect();
    ascii(&rows.iter().map(String::as_str).collect::<Vec<_>>())
}

fn border(w: usize, h: usize, c: usize, r: usize) -> bool {
    c < 2 || r < 2 || c >= w - 2 || r >= h - 2
}

/// 5 m × 5 m room.
fn room() -> OccupancyGrid {
    map_from(104, 104, |c, r| border(104, 104, c, r))
}

/// Two 2.5 m rooms joined by a 0.5 m door in the middle wall.
fn two_rooms() -> OccupancyGrid {
    map_from(104, 54, |c, r| border(104, 54, c, r) || ((51..53).contains(&c) && !(22..32).contains(&r)))
}

/// Room with a sealed Free pocket inside a walled box; every passage around
/// the box is at least 0.5 m wide.
fn sealed_pocket() -> OccupancyGrid {
    map_from(80, 80, |c, r| {
        let in_box = (36..56).contains(&c) && (36..56).contains(&r);
        let box_inner = (38..54).contains(&c) && (38..54).contains(&r);
        border(80, 80, c, r) || (in_box && !box_inner)
    })
}

fn start() -> WorldPose {
    WorldPose::new(0.5, 0.5, 0.0)
}

fn reachable_cells(gt: &OccupancyGrid) -> Vec<bool> {
    brute_reachable(gt, gt.world_to_cell(&start()).unwrap())
}

fn check_run(gt: &OccupancyGrid, run: &ExplorationRun) {
    assert_eq!(run.outcome, Outcome::Completed, "{} seed {}", run.strategy, run.seed);
    let reach = reachable_cells(gt);
    for (k, &r) in reach.iter().enumerate() {
        let free = run.explored.state(gt.cell_at(k)) == CellState::Free;
        assert_eq!(free, r, "cell {:?}", gt.cell_at(k));
    }
    let res = gt.resolution();
    let want = reach.iter().filter(|&&b| b).count() as f64 * res * res;
    assert!((run.final_area() - want).abs() < 1e-9);
    assert!(run.area_curve.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 >= w[0].1));
    assert!(detect_frontier_cells(&run.explored).iter().all(|c| !reach[gt.index(*c)]));
    for p in &run.trajectory {
        assert!(!footprint_collides(gt, *p, 0.11), "body overlaps a wall at {p:?}");
    }
}

#[test]
fn single_room_is_fully_covered() {
    let gt = room();
    for strategy in [Strategy::Pm, Strategy::Fe] {
        let run = run_exploration(&gt, &start(), strategy, &RunConfig::default(), 0).unwrap();
        check_run(&gt, &run);
        assert!(run.elapsed_sim_time > 0.0);
    }
}

#[test]
fn door_between_rooms_gives_staged_coverage() {
    let gt = two_rooms();
    let run = run_exploration(&gt, &start(), Strategy::Pm, &RunConfig::default(), 1).unwrap();
    check_run(&gt, &run);
    let mut rises = run.area_curve.windows(2).filter(|w| w[1].1 > w[0].1).map(|w| w[1].0).collect::<Vec<_>>();
    rises.dedup();
    assert!(rises.len() >= 2, "area rose only at {rises:?}");
}

#[test]
fn sealed_pocket_is_not_counted() {
    let gt = sealed_pocket();
    let run = run_exploration(&gt, &start(), Strategy::Pm, &RunConfig::default(), 2).unwrap();
    check_run(&gt, &run);
    let res = gt.resolution();
    assert!(run.final_area() < gt.count(CellState::Free) as f64 * res * res);
}

#[test]
fn every_fixture_terminates_for_both_strategies() {
    for gt in [room(), two_rooms(), sealed_pocket()] {
        for strategy in [Strategy::Pm, Strategy::Fe] {
            for seed in 0..10 {
                let run = run_exploration(&gt, &start(), strategy, &RunConfig::default(), seed).unwrap();
                check_run(&gt, &run);
            }
        }
    }
}

#[test]
fn same_seed_same_mission() {
    let gt = two_rooms();
    for strategy in [Strategy::Pm, Strategy::Fe] {
        let a = run_exploration(&gt, &start(), strategy, &RunConfig::default(), 7).unwrap();
        let b = run_exploration(&gt, &start(), strategy, &RunConfig::default(), 7).unwrap();
        assert_eq!(a.trajectory, b.trajectory);
        assert_eq!(a.area_curve, b.area_curve);
        assert_eq!(a.cycles, b.cycles);
        assert_eq!(a.explored, b.explored);
    }
}

#[test]
fn start_in_a_wall_is_rejected() {
    let gt = room();
    let bad = WorldPose::new(0.02, 0.02, 0.0);
    assert!(run_exploration(&gt, &bad, Strategy::Pm, &RunConfig::default(), 0).is_err());
}

#[test]
fn tiny_budget_times_out() {
    let gt = two_rooms();
    let cfg = RunConfig {
        time_budget: 1.0,
        ..RunConfig::default()
    };
    let run = run_exploration(&gt, &start(), Strategy::Pm, &cfg, 0).unwrap();
    assert_eq!(run.outcome, Outcome::Timeout);
    assert!(run.elapsed_sim_time <= 1.0 + 1e-9);
}
