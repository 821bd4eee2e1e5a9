//! Differential-drive kinematics, 2D LiDAR raycasting and ideal scan integration.
//!
//! Pose is ground truth and sensing is noise-free, so the explored map only
//! ever contains cells whose state matches the ground truth.

use std::f64::consts::PI;

use thiserror::Error;

use crate::world::{normalize_angle, CellIndex, CellState, OccupancyGrid, Point2, WorldPose};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("pose ({x:.3}, {y:.3}) is outside the map")]
    OutOfBounds { x: f64, y: f64 },
    #[error("pose ({x:.3}, {y:.3}) is inside an occupied cell")]
    InsideObstacle { x: f64, y: f64 },
    #[error("explored map and scan pose do not share geometry: {0}")]
    GeometryMismatch(String),
    #[error("robot footprint collides at ({x:.3}, {y:.3})")]
    Collision { x: f64, y: f64 },
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Seconds per tick.
    pub dt: f64,
    pub beams: usize,
    pub lidar_max_range: f64,
    pub v_max: f64,
    pub omega_max: f64,
    /// Collision footprint radius in meters.
    pub robot_radius: f64,
    pub rng_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            beams: 360,
            lidar_max_range: 3.5,
            v_max: 0.15,
            omega_max: 2.0,
            robot_radius: 0.11,
            rng_seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0) {
            return Err(SimError::InvalidConfig(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.beams < 8 {
            return Err(SimError::InvalidConfig(format!(
                "at least 8 beams required, got {}",
                self.beams
            )));
        }
        if !(self.lidar_max_range > 0.0) || !(self.v_max > 0.0) || !(self.omega_max > 0.0) {
            return Err(SimError::InvalidConfig(
                "range and speed limits must be positive".into(),
            ));
        }
        if !(self.robot_radius >= 0.0) {
            return Err(SimError::InvalidConfig("robot radius must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub pose: WorldPose,
    pub linear_vel: f64,
    pub angular_vel: f64,
    pub radius: f64,
}

impl RobotState {
    pub fn at_rest(pose: WorldPose, radius: f64) -> Self {
        Self {
            pose,
            linear_vel: 0.0,
            angular_vel: 0.0,
            radius,
        }
    }
}

/// One full revolution of range readings.
#[derive(Debug, Clone, PartialEq)]
pub struct LidarScan {
    /// Beam angles relative to the robot heading, strictly increasing.
    pub angles: Vec<f64>,
    /// Meters; no-hit beams carry `max_range`.
    pub ranges: Vec<f64>,
    /// First occupied cell per beam, `None` for no-hit beams.
    pub hit_cells: Vec<Option<CellIndex>>,
    /// Occupied cells lit by the beam footprint around the hit cells.
    pub spot_cells: Vec<CellIndex>,
    pub max_range: f64,
}

impl LidarScan {
    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn is_hit(&self, i: usize) -> bool {
        self.hit_cells[i].is_some()
    }

    /// `L_min`: the shortest reading; `max_range` when nothing was hit.
    pub fn min_range(&self) -> f64 {
        self.ranges.iter().copied().fold(self.max_range, f64::min)
    }
}

/// Evenly spaced robot-relative beam angles starting at `-π`.
pub fn beam_angles(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| -PI + i as f64 * (2.0 * PI / n as f64))
        .collect()
}

/// Amanatides–Woo traversal of the cells pierced by a ray.
///
/// Yields `(cell, t_enter)` with `t_enter` the distance in meters at which
/// the ray enters the cell. Stops at the grid edge or once `t_enter`
/// reaches `max_dist`. Ties between axes step along x first.
#[derive(Debug, Clone)]
pub struct GridRay {
    col: i64,
    row: i64,
    width: i64,
    height: i64,
    step_col: i64,
    step_row: i64,
    t_max_x: f64,
    t_max_y: f64,
    t_delta_x: f64,
    t_delta_y: f64,
    t_enter: f64,
    max_dist: f64,
}

impl GridRay {
    pub fn new(grid: &OccupancyGrid, from: Point2, angle: f64, max_dist: f64) -> Self {
        let res = grid.resolution();
        let u = (from.x - grid.origin().x) / res;
        let v = (from.y - grid.origin().y) / res;
        let (col, row) = (u.floor() as i64, v.floor() as i64);
        let (dx, dy) = (angle.cos(), angle.sin());
        let axis = |d: f64, pos: f64, idx: i64| -> (i64, f64, f64) {
            if d > 0.0 {
                (1, ((idx + 1) as f64 - pos) * res / d, res / d)
            } else if d < 0.0 {
                (-1, (pos - idx as f64) * res / -d, res / -d)
            } else {
                (0, f64::INFINITY, f64::INFINITY)
            }
        };
        let (step_col, t_max_x, t_delta_x) = axis(dx, u, col);
        let (step_row, t_max_y, t_delta_y) = axis(dy, v, row);
        Self {
            col,
            row,
            width: grid.width() as i64,
            height: grid.height() as i64,
            step_col,
            step_row,
            t_max_x,
            t_max_y,
            t_delta_x,
            t_delta_y,
            t_enter: 0.0,
            max_dist,
        }
    }
}

impl Iterator for GridRay {
    type Item = (CellIndex, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if self.col < 0
            || self.row < 0
            || self.col >= self.width
            || self.row >= self.height
            || self.t_enter >= self.max_dist
        {
            return None;
        }
        let out = (
            CellIndex::new(self.col as usize, self.row as usize),
            self.t_enter,
        );
        if self.t_max_x <= self.t_max_y {
            self.col += self.step_col;
            self.t_enter = self.t_max_x;
            self.t_max_x += self.t_delta_x;
        } else {
            self.row += self.step_row;
            self.t_enter = self.t_max_y;
            self.t_max_y += self.t_delta_y;
        }
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamReturn {
    pub range: f64,
    pub hit: Option<CellIndex>,
    pub spot: Vec<CellIndex>,
}

/// Casts one beam against the ground truth. `world_angle` is absolute.
pub fn cast_beam(
    ground_truth: &OccupancyGrid,
    from: Point2,
    world_angle: f64,
    max_range: f64,
) -> BeamReturn {
    let mut previous: Option<CellIndex> = None;
    for (cell, t) in GridRay::new(ground_truth, from, world_angle, max_range) {
        if ground_truth.state(cell) == CellState::Occupied {
            let spot = match previous {
                Some(free) => footprint_cells(ground_truth, cell, free),
                None => Vec::new(),
            };
            return BeamReturn {
                range: t,
                hit: Some(cell),
                spot,
            };
        }
        previous = Some(cell);
    }
    BeamReturn {
        range: max_range,
        hit: None,
        spot: Vec::new(),
    }
}

// A beam has a finite spot: walls flanking the hit cell that also touch the
// last free cell are seen too. Without this, concave wall corners stay
// Unknown forever because no ray can enter them.
fn footprint_cells(gt: &OccupancyGrid, hit: CellIndex, last_free: CellIndex) -> Vec<CellIndex> {
    gt.neighbors4(hit)
        .filter(|&n| n != last_free && n.chebyshev(last_free) <= 1)
        .filter(|&n| gt.state(n) == CellState::Occupied)
        .collect()
}

/// Simulates a full scan from `pose` against the ground truth.
pub fn raycast(
    ground_truth: &OccupancyGrid,
    pose: &WorldPose,
    cfg: &SimConfig,
) -> Result<LidarScan, SimError> {
    let cell = ground_truth
        .world_to_cell(pose)
        .ok_or(SimError::OutOfBounds { x: pose.x, y: pose.y })?;
    if ground_truth.state(cell) == CellState::Occupied {
        return Err(SimError::InsideObstacle { x: pose.x, y: pose.y });
    }
    let angles = beam_angles(cfg.beams);
    let mut ranges = Vec::with_capacity(angles.len());
    let mut hit_cells = Vec::with_capacity(angles.len());
    let mut spot_cells = Vec::new();
    for &a in &angles {
        let beam = cast_beam(
            ground_truth,
            pose.position(),
            pose.theta + a,
            cfg.lidar_max_range,
        );
        ranges.push(beam.range);
        hit_cells.push(beam.hit);
        spot_cells.extend(beam.spot);
    }
    spot_cells.sort_unstable();
    spot_cells.dedup();
    Ok(LidarScan {
        angles,
        ranges,
        hit_cells,
        spot_cells,
        max_range: cfg.lidar_max_range,
    })
}

/// Writes a scan into the explored map; returns the number of newly known cells.
///
/// Cells pierced before the hit become Free, hit and footprint cells become
/// Occupied. Known cells are never overwritten.
pub fn integrate_scan(
    explored: &mut OccupancyGrid,
    pose: &WorldPose,
    scan: &LidarScan,
) -> Result<usize, SimError> {
    if explored.world_to_cell(pose).is_none() {
        return Err(SimError::GeometryMismatch(format!(
            "pose ({:.3}, {:.3}) outside explored grid",
            pose.x, pose.y
        )));
    }
    if scan.angles.len() != scan.ranges.len() || scan.hit_cells.len() != scan.ranges.len() {
        return Err(SimError::GeometryMismatch("scan arrays differ in length".into()));
    }
    let mut learned = 0;
    let mut mark = |grid: &mut OccupancyGrid, cell: CellIndex, state: CellState| {
        if grid.state(cell) == CellState::Unknown {
            grid.set(cell, state);
            learned += 1;
        }
    };
    let res = explored.resolution();
    for i in 0..scan.len() {
        let range = scan.ranges[i];
        let hit = scan.hit_cells[i];
        if let Some(h) = hit {
            if !explored.contains(h) {
                return Err(SimError::GeometryMismatch(format!("hit cell {h} outside grid")));
            }
        }
        let reach = if hit.is_some() { range + res } else { range };
        for (cell, t) in GridRay::new(explored, pose.position(), pose.theta + scan.angles[i], reach)
        {
            if Some(cell) == hit {
                mark(explored, cell, CellState::Occupied);
                break;
            }
            if hit.is_none() && t >= range {
                break;
            }
            mark(explored, cell, CellState::Free);
        }
    }
    for &c in &scan.spot_cells {
        if !explored.contains(c) {
            return Err(SimError::GeometryMismatch(format!("spot cell {c} outside grid")));
        }
        mark(explored, c, CellState::Occupied);
    }
    Ok(learned)
}

/// True when a disc of `radius` at `p` overlaps an Occupied cell or leaves the grid.
pub fn footprint_collides(grid: &OccupancyGrid, p: Point2, radius: f64) -> bool {
    let res = grid.resolution();
    let o = grid.origin();
    let c0 = ((p.x - radius - o.x) / res).floor() as i64;
    let c1 = ((p.x + radius - o.x) / res).floor() as i64;
    let r0 = ((p.y - radius - o.y) / res).floor() as i64;
    let r1 = ((p.y + radius - o.y) / res).floor() as i64;
    for row in r0..=r1 {
        for col in c0..=c1 {
            if col < 0 || row < 0 || col >= grid.width() as i64 || row >= grid.height() as i64 {
                return true;
            }
            let cell = CellIndex::new(col as usize, row as usize);
            if grid.state(cell) != CellState::Occupied {
                continue;
            }
            let lo_x = o.x + col as f64 * res;
            let lo_y = o.y + row as f64 * res;
            let nx = p.x.clamp(lo_x, lo_x + res);
            let ny = p.y.clamp(lo_y, lo_y + res);
            if (p.x - nx).hypot(p.y - ny) < radius {
                return true;
            }
        }
    }
    false
}

/// Advances the robot by one tick of exact unicycle motion.
pub fn step(
    robot: &RobotState,
    cmd: (f64, f64),
    dt: f64,
    ground_truth: &OccupancyGrid,
    cfg: &SimConfig,
) -> Result<RobotState, SimError> {
    if !(dt > 0.0) {
        return Err(SimError::InvalidConfig(format!("dt must be > 0, got {dt}")));
    }
    let v = cmd.0.clamp(-cfg.v_max, cfg.v_max);
    let w = cmd.1.clamp(-cfg.omega_max, cfg.omega_max);
    let WorldPose { x, y, theta } = robot.pose;
    let (nx, ny) = if w.abs() < 1e-12 {
        (x + v * theta.cos() * dt, y + v * theta.sin() * dt)
    } else {
        let th1 = theta + w * dt;
        (
            x + v / w * (th1.sin() - theta.sin()),
            y - v / w * (th1.cos() - theta.cos()),
        )
    };
    let pose = WorldPose {
        x: nx,
        y: ny,
        theta: normalize_angle(theta + w * dt),
    };
    if footprint_collides(ground_truth, pose.position(), robot.radius) {
        return Err(SimError::Collision { x: nx, y: ny });
    }
    Ok(RobotState {
        pose,
        linear_vel: v,
        angular_vel: w,
        radius: robot.radius,
    })
}
