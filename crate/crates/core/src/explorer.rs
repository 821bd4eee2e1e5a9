//! The exploration loop: sense, map, choose a frontier, track the path.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::baseline_fe::{clearance_penalty, fe_utility, grid_plan_with, wfd_detect, FeConfig, FeError};
use crate::frontier_goal::{GoalWeights, ScoreRow};
use crate::potential_nav::{
    compute_field, field_to_command, ControlGains, FieldParams, NavError, PathTracker,
};
use crate::robot_sim::{integrate_scan, raycast, step, RobotState, SimConfig, SimError};
use crate::semantic_topo::{is_frontier_cell, segment_with, SegmentConfig, SegmentError};
use crate::topo_path::{search, PathError, SearchConfig};
use crate::world::{CellIndex, OccupancyGrid, Point2, WorldPose};

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("start pose ({x:.3}, {y:.3}) is not in Free space")]
    InvalidStart { x: f64, y: f64 },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Nav(#[from] NavError),
    #[error(transparent)]
    Fe(#[from] FeError),
    #[error("invalid run config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// Semantic-topometric planner.
    Pm,
    /// Wavefront frontier baseline.
    Fe,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Pm => "PM",
            Strategy::Fe => "FE",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pm" => Ok(Strategy::Pm),
            "fe" => Ok(Strategy::Fe),
            other => Err(format!("unknown strategy '{other}' (expected PM or FE)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Completed,
    Collision,
    Timeout,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Completed => "completed",
            Outcome::Collision => "collision",
            Outcome::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub segment: SegmentConfig,
    pub weights: GoalWeights,
    pub search: SearchConfig,
    pub field: FieldParams,
    pub gains: ControlGains,
    pub fe: FeConfig,
    /// Seconds of sim time between forced replans.
    pub replan_interval: f64,
    /// Meters.
    pub goal_tolerance: f64,
    /// Sim-time budget in seconds.
    pub time_budget: f64,
    /// Half-width of the uniform start-position jitter, meters.
    pub start_jitter: f64,
    /// Draw the start heading uniformly from the seed.
    pub random_heading: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            segment: SegmentConfig::default(),
            weights: GoalWeights::default(),
            search: SearchConfig::default(),
            field: FieldParams::default(),
            gains: ControlGains::default(),
            fe: FeConfig::default(),
            replan_interval: 2.0,
            goal_tolerance: 0.10,
            time_budget: 1200.0,
            start_jitter: 0.02,
            random_heading: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ExploreError> {
        self.sim.validate()?;
        self.segment.validate()?;
        self.weights
            .validate()
            .map_err(|e| ExploreError::Config(e.to_string()))?;
        self.field.validate()?;
        if !(self.replan_interval > 0.0) || !(self.goal_tolerance > 0.0) || !(self.time_budget > 0.0) {
            return Err(ExploreError::Config(
                "replan interval, goal tolerance and time budget must be positive".into(),
            ));
        }
        if !(self.start_jitter >= 0.0) {
            return Err(ExploreError::Config("start jitter must be >= 0".into()));
        }
        Ok(())
    }
}

/// Deterministic per-cycle work counters.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord {
    pub time: f64,
    pub frontiers: usize,
    /// Map generation and frontier detection.
    pub detect_ops: u64,
    pub select_ops: u64,
    pub plan_ops: u64,
    pub path_len: f64,
}

/// Wall-clock nanoseconds per stage of one cycle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WallTiming {
    pub detect_ns: u64,
    pub select_ns: u64,
    pub plan_ns: u64,
}

#[derive(Debug, Clone)]
pub struct ExplorationRun {
    pub strategy: Strategy,
    pub seed: u64,
    pub start: WorldPose,
    pub ticks: usize,
    pub elapsed_sim_time: f64,
    /// `(sim time s, explored free area m²)` at every change, plus both ends.
    pub area_curve: Vec<(f64, f64)>,
    pub cycles: Vec<CycleRecord>,
    pub wall: Vec<WallTiming>,
    /// Per-cycle score tables, PM only: `(cycle index, row)`.
    pub scores: Vec<(usize, ScoreRow)>,
    pub trajectory: Vec<Point2>,
    pub outcome: Outcome,
    pub explored: OccupancyGrid,
    pub final_pose: WorldPose,
}

impl ExplorationRun {
    pub fn final_area(&self) -> f64 {
        self.area_curve.last().map_or(0.0, |p| p.1)
    }
}

/// Start pose perturbed by the seed: uniform heading and a small position jitter.
pub fn seeded_start(start: &WorldPose, seed: u64, cfg: &RunConfig) -> WorldPose {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta = if cfg.random_heading {
        rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)
    } else {
        start.theta
    };
    let (dx, dy) = if cfg.start_jitter > 0.0 {
        (
            rng.random_range(-cfg.start_jitter..=cfg.start_jitter),
            rng.random_range(-cfg.start_jitter..=cfg.start_jitter),
        )
    } else {
        (0.0, 0.0)
    };
    WorldPose::new(start.x + dx, start.y + dy, theta)
}

/// Inputs to the replan decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriggerState {
    pub has_plan: bool,
    pub distance_to_goal: f64,
    /// Any of the goal's frontier cells is still a frontier.
    pub frontier_alive: bool,
    pub since_replan: f64,
}

pub fn replan_trigger(s: &TriggerState, cfg: &RunConfig) -> bool {
    !s.has_plan
        || s.distance_to_goal <= cfg.goal_tolerance
        || !s.frontier_alive
        || s.since_replan >= cfg.replan_interval - 1e-9
}

struct ActivePlan {
    tracker: Option<PathTracker>,
    target: Option<Point2>,
    watch: Vec<CellIndex>,
}

enum Cycle {
    Done,
    Plan(ActivePlan),
}

/// Runs one exploration mission from the seeded start pose.
pub fn run_exploration(
    ground_truth: &OccupancyGrid,
    start: &WorldPose,
    strategy: Strategy,
    cfg: &RunConfig,
    seed: u64,
) -> Result<ExplorationRun, ExploreError> {
    cfg.validate()?;
    let pose = seeded_start(start, seed, cfg);
    match ground_truth.world_to_cell(&pose) {
        Some(c) if ground_truth.is_free(c) => {}
        _ => return Err(ExploreError::InvalidStart { x: pose.x, y: pose.y }),
    }
    let mut explored = ground_truth.unknown_like();
    let mut robot = RobotState::at_rest(pose, cfg.sim.robot_radius);
    let dt = cfg.sim.dt;
    let mut t = 0.0;
    let mut ticks = 0usize;
    let mut area_curve = Vec::new();
    let mut cycles = Vec::new();
    let mut wall = Vec::new();
    let mut scores = Vec::new();
    let mut trajectory = vec![pose.position()];
    let mut plan: Option<ActivePlan> = None;
    let mut last_replan = f64::NEG_INFINITY;
    let mut failed_targets: HashSet<CellIndex> = HashSet::new();
    let mut last_area = f64::NAN;

    let outcome = loop {
        let scan = raycast(ground_truth, &robot.pose, &cfg.sim)?;
        integrate_scan(&mut explored, &robot.pose, &scan)?;
        let area = explored.free_area_m2();
        if area != last_area {
            area_curve.push((t, area));
            last_area = area;
        }

        let trigger = match &plan {
            None => true,
            Some(p) => replan_trigger(
                &TriggerState {
                    has_plan: p.tracker.is_some(),
                    distance_to_goal: p
                        .target
                        .map_or(f64::INFINITY, |g| g.distance(robot.pose.position())),
                    frontier_alive: p.watch.iter().any(|&c| is_frontier_cell(&explored, c)),
                    since_replan: t - last_replan,
                },
                cfg,
            ) && (p.tracker.is_some() || t - last_replan >= cfg.replan_interval - 1e-9),
        };
        if trigger {
            last_replan = t;
            let cell = explored
                .world_to_cell(&robot.pose)
                .ok_or(SimError::OutOfBounds { x: robot.pose.x, y: robot.pose.y })?;
            let cycle = match strategy {
                Strategy::Pm => pm_cycle(&explored, cell, &robot.pose, cfg, t, &mut cycles, &mut wall, &mut scores)?,
                Strategy::Fe => fe_cycle(&explored, cell, cfg, t, &mut cycles, &mut wall, &mut failed_targets)?,
            };
            match cycle {
                Cycle::Done => break Outcome::Completed,
                Cycle::Plan(p) => plan = Some(p),
            }
        }

        if t >= cfg.time_budget {
            break Outcome::Timeout;
        }
        let cmd = match plan.as_mut().and_then(|p| p.tracker.as_mut()) {
            Some(tracker) => {
                let goal = tracker.select_goal_point(&robot.pose, &scan, &cfg.field, &explored);
                let field = compute_field(&goal, &scan, &cfg.field)?;
                field_to_command(field, cfg.sim.v_max, cfg.sim.omega_max, &cfg.gains)
            }
            None => (0.0, 0.0),
        };
        match step(&robot, cmd, dt, ground_truth, &cfg.sim) {
            Ok(next) => robot = next,
            Err(SimError::Collision { .. }) => break Outcome::Collision,
            Err(e) => return Err(e.into()),
        }
        ticks += 1;
        t = ticks as f64 * dt;
        trajectory.push(robot.pose.position());
    };
    if area_curve.last().map(|p| p.0) != Some(t) {
        area_curve.push((t, explored.free_area_m2()));
    }
    Ok(ExplorationRun {
        strategy,
        seed,
        start: pose,
        ticks,
        elapsed_sim_time: t,
        area_curve,
        cycles,
        wall,
        scores,
        trajectory,
        outcome,
        explored,
        final_pose: robot.pose,
    })
}

/// One planning cycle at `pose` with fresh state, as the explorer would run it.
pub fn planning_cycle(
    explored: &OccupancyGrid,
    pose: &WorldPose,
    strategy: Strategy,
    cfg: &RunConfig,
) -> Result<CycleRecord, ExploreError> {
    let cell = explored
        .world_to_cell(pose)
        .ok_or(SimError::OutOfBounds { x: pose.x, y: pose.y })?;
    let (mut cycles, mut wall) = (Vec::new(), Vec::new());
    match strategy {
        Strategy::Pm => pm_cycle(explored, cell, pose, cfg, 0.0, &mut cycles, &mut wall, &mut Vec::new())?,
        Strategy::Fe => fe_cycle(explored, cell, cfg, 0.0, &mut cycles, &mut wall, &mut HashSet::new())?,
    };
    Ok(cycles.pop().expect("every cycle records itself"))
}

fn tracker(path: &[Point2], explored: &OccupancyGrid, cfg: &RunConfig) -> Result<PathTracker, NavError> {
    let mut t = PathTracker::new(path, explored.resolution() / 4.0)?;
    t.clearance = cfg.sim.robot_radius;
    Ok(t)
}

fn nanos(since: Instant) -> u64 {
    since.elapsed().as_nanos() as u64
}

#[allow(clippy::too_many_arguments)]
fn pm_cycle(
    explored: &OccupancyGrid,
    cell: CellIndex,
    pose: &WorldPose,
    cfg: &RunConfig,
    t: f64,
    cycles: &mut Vec<CycleRecord>,
    wall: &mut Vec<WallTiming>,
    scores: &mut Vec<(usize, ScoreRow)>,
) -> Result<Cycle, ExploreError> {
    let t0 = Instant::now();
    let map = segment_with(explored, cell, &cfg.segment)?;
    let detect_ns = nanos(t0);
    let mut rec = CycleRecord {
        time: t,
        frontiers: map.goals.len(),
        detect_ops: map.stats.cell_ops,
        select_ops: 0,
        plan_ops: 0,
        path_len: 0.0,
    };
    if map.goals.is_empty() {
        cycles.push(rec);
        wall.push(WallTiming {
            detect_ns,
            ..Default::default()
        });
        return Ok(Cycle::Done);
    }
    let t1 = Instant::now();
    let out = search(&map, pose, &cfg.weights, &cfg.search)?;
    let plan_ns = nanos(t1);
    let t2 = Instant::now();
    let best = out.best().cloned();
    let select_ns = nanos(t2);
    rec.plan_ops = out.stats.pops as u64;
    rec.select_ops = out.paths.len() as u64;
    let index = cycles.len();
    for p in &out.paths {
        let g = &map.goals[p.terminal_goal];
        scores.push((
            index,
            ScoreRow {
                goal: g.id,
                sem: g.into(),
                cost: p.cost,
                chosen: best.as_ref().is_some_and(|b| b.terminal_goal == g.id),
            },
        ));
    }
    let active = match best {
        Some(path) => {
            rec.path_len = path.length;
            let g = &map.goals[path.terminal_goal];
            ActivePlan {
                tracker: Some(tracker(&path.waypoints, explored, cfg)?),
                target: Some(g.target.position()),
                watch: g.frontier_cells.clone(),
            }
        }
        None => ActivePlan {
            tracker: None,
            target: None,
            watch: Vec::new(),
        },
    };
    cycles.push(rec);
    wall.push(WallTiming {
        detect_ns,
        select_ns,
        plan_ns,
    });
    Ok(Cycle::Plan(active))
}

fn fe_cycle(
    explored: &OccupancyGrid,
    cell: CellIndex,
    cfg: &RunConfig,
    t: f64,
    cycles: &mut Vec<CycleRecord>,
    wall: &mut Vec<WallTiming>,
    failed: &mut HashSet<CellIndex>,
) -> Result<Cycle, ExploreError> {
    let t0 = Instant::now();
    let wfd = wfd_detect(explored, cell)?;
    let detect_ns = nanos(t0);
    let mut rec = CycleRecord {
        time: t,
        frontiers: wfd.clusters.len(),
        detect_ops: wfd.visited as u64,
        select_ops: wfd.clusters.len() as u64,
        plan_ops: 0,
        path_len: 0.0,
    };
    if wfd.clusters.is_empty() {
        cycles.push(rec);
        wall.push(WallTiming {
            detect_ns,
            ..Default::default()
        });
        return Ok(Cycle::Done);
    }
    let t1 = Instant::now();
    // Commit to the best cluster before knowing whether it can be reached.
    let mut order: Vec<usize> = (0..wfd.clusters.len()).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (&wfd.clusters[a], &wfd.clusters[b]);
        fe_utility(cb, &cfg.fe)
            .total_cmp(&fe_utility(ca, &cfg.fe))
            .then(ca.id.cmp(&cb.id))
    });
    let choice = order.iter().find_map(|&i| {
        let c = &wfd.clusters[i];
        if !failed.contains(&c.centroid_cell) {
            Some((c, c.centroid_cell))
        } else if !failed.contains(&c.entry_cell) {
            Some((c, c.entry_cell))
        } else {
            None
        }
    });
    let select_ns = nanos(t1);
    let Some((cluster, target)) = choice else {
        cycles.push(rec);
        wall.push(WallTiming {
            detect_ns,
            select_ns,
            plan_ns: 0,
        });
        return Ok(Cycle::Plan(ActivePlan {
            tracker: None,
            target: None,
            watch: Vec::new(),
        }));
    };
    let t2 = Instant::now();
    let penalty = clearance_penalty(explored, cfg.fe.inflation, cfg.fe.inflation_cost);
    let planned = grid_plan_with(explored, cell, target, Some(&penalty));
    let plan_ns = nanos(t2);
    rec.plan_ops = planned.expansions as u64;
    let active = match planned.path {
        Some(path) => {
            let pts: Vec<Point2> = path.cells.iter().map(|&c| explored.cell_to_world(c)).collect();
            rec.path_len = crate::polyline::length(&pts);
            ActivePlan {
                tracker: Some(tracker(&pts, explored, cfg)?),
                target: Some(explored.cell_to_world(target)),
                watch: cluster.cells.clone(),
            }
        }
        None => {
            failed.insert(target);
            ActivePlan {
                tracker: None,
                target: None,
                watch: cluster.cells.clone(),
            }
        }
    };
    cycles.push(rec);
    wall.push(WallTiming {
        detect_ns,
        select_ns,
        plan_ns,
    });
    Ok(Cycle::Plan(active))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> RunConfig {
        RunConfig::default()
    }

    #[test]
    fn trigger_cases() {
        let c = cfg();
        let base = TriggerState {
            has_plan: true,
            distance_to_goal: 1.0,
            frontier_alive: true,
            since_replan: 1.0,
        };
        assert!(!replan_trigger(&base, &c));
        assert!(replan_trigger(&TriggerState { distance_to_goal: 0.05, ..base }, &c));
        assert!(replan_trigger(&TriggerState { frontier_alive: false, ..base }, &c));
        assert!(replan_trigger(&TriggerState { since_replan: 2.0, ..base }, &c));
        assert!(replan_trigger(&TriggerState { has_plan: false, ..base }, &c));
    }

    #[test]
    fn seeded_start_is_deterministic() {
        let s = WorldPose::new(1.0, 1.0, 0.0);
        let a = seeded_start(&s, 7, &cfg());
        let b = seeded_start(&s, 7, &cfg());
        assert_eq!(a, b);
        assert!((a.x - 1.0).abs() <= 0.02 && (a.y - 1.0).abs() <= 0.02);
        assert_ne!(a, seeded_start(&s, 8, &cfg()));
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("pm".parse::<Strategy>().unwrap(), Strategy::Pm);
        assert_eq!("FE".parse::<Strategy>().unwrap(), Strategy::Fe);
        assert!("x".parse::<Strategy>().is_err());
    }
}
