//! Potential-field local navigation along a global path.

use thiserror::Error;

use crate::polyline;
use crate::robot_sim::{footprint_collides, GridRay, LidarScan};
use crate::world::{normalize_angle, CellState, OccupancyGrid, Point2, WorldPose};

#[derive(Debug, Error, PartialEq)]
pub enum NavError {
    #[error("path has no waypoints")]
    EmptyPath,
    #[error("beam {index} has non-positive range {range}")]
    NonPositiveRange { index: usize, range: f64 },
    #[error("field parameters must be positive")]
    InvalidParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldParams {
    /// Attraction magnitude.
    pub f_g: f64,
    /// Repulsion scale, meter-weighted.
    pub f_o: f64,
    /// Goal window as a multiple of the shortest range reading.
    pub f_l: f64,
}

impl Default for FieldParams {
    fn default() -> Self {
        Self {
            f_g: 30.0,
            f_o: 0.065,
            f_l: 1.5,
        }
    }
}

impl FieldParams {
    pub fn validate(&self) -> Result<(), NavError> {
        if self.f_g > 0.0 && self.f_o > 0.0 && self.f_l > 0.0 {
            Ok(())
        } else {
            Err(NavError::InvalidParams)
        }
    }
}

/// Gains mapping the field vector to velocity commands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlGains {
    pub k_v: f64,
    pub k_omega: f64,
    /// Angular speed used when the field vanishes.
    pub nudge: f64,
}

impl Default for ControlGains {
    fn default() -> Self {
        Self {
            k_v: 0.005,
            k_omega: 2.0,
            nudge: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoalPoint {
    pub position: Point2,
    /// Robot-relative bearing in `(-π, π]`.
    pub bearing: f64,
}

/// `F = f_g·[cos G_v, sin G_v] − Σ (f_o/L_i)·[cos L_vi, sin L_vi]`, robot frame.
pub fn compute_field(goal: &GoalPoint, scan: &LidarScan, params: &FieldParams) -> Result<[f64; 2], NavError> {
    let mut fx = params.f_g * goal.bearing.cos();
    let mut fy = params.f_g * goal.bearing.sin();
    for (i, (&a, &r)) in scan.angles.iter().zip(&scan.ranges).enumerate() {
        if !(r > 0.0) {
            return Err(NavError::NonPositiveRange { index: i, range: r });
        }
        let k = params.f_o / r;
        fx -= k * a.cos();
        fy -= k * a.sin();
    }
    Ok([fx, fy])
}

/// Heading-gated proportional mapping to `(linear, angular)` commands.
pub fn field_to_command(field: [f64; 2], v_max: f64, omega_max: f64, gains: &ControlGains) -> (f64, f64) {
    let mag = field[0].hypot(field[1]);
    if mag < 1e-12 {
        return (0.0, gains.nudge.clamp(-omega_max, omega_max));
    }
    let alpha = field[1].atan2(field[0]);
    let omega = (gains.k_omega * alpha).clamp(-omega_max, omega_max);
    let v = (gains.k_v * mag * alpha.cos().max(0.0)).clamp(0.0, v_max);
    (v, omega)
}

/// True when no Occupied cell of `explored` lies on the segment `from → to`.
pub fn line_of_sight(explored: &OccupancyGrid, from: Point2, to: Point2) -> bool {
    let d = from.distance(to);
    if d < 1e-12 {
        return true;
    }
    let angle = (to.y - from.y).atan2(to.x - from.x);
    for (cell, t) in GridRay::new(explored, from, angle, d) {
        if t > d {
            break;
        }
        if explored.state(cell) == CellState::Occupied {
            return false;
        }
    }
    true
}

/// True when a disk of `radius` can slide from `from` to `to` without touching
/// an Occupied cell of `explored`. The start position itself is not tested.
pub fn swept_clear(explored: &OccupancyGrid, from: Point2, to: Point2, radius: f64) -> bool {
    let d = from.distance(to);
    let step = explored.resolution() / 2.0;
    let n = (d / step).ceil() as usize;
    (1..=n).all(|i| !footprint_collides(explored, from.lerp(to, i as f64 / n as f64), radius))
}

/// Path resampled at fixed arc spacing, plus the forward-only progress index.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTracker {
    samples: Vec<Point2>,
    spacing: f64,
    progress: usize,
    /// Arc length searched ahead of the progress index for the nearest sample.
    pub search_window: f64,
    /// Body radius a goal point must be reachable with in a straight line; 0 checks the center line only.
    pub clearance: f64,
}

impl PathTracker {
    pub fn new(path: &[Point2], spacing: f64) -> Result<Self, NavError> {
        if path.is_empty() {
            return Err(NavError::EmptyPath);
        }
        let len = polyline::length(path);
        let n = (len / spacing).ceil().max(0.0) as usize;
        let mut samples = Vec::with_capacity(n + 1);
        for i in 0..n {
            samples.push(polyline::point_at(path, i as f64 * spacing));
        }
        samples.push(*path.last().unwrap());
        Ok(Self {
            samples,
            spacing,
            progress: 0,
            search_window: 1.0,
            clearance: 0.0,
        })
    }

    pub fn samples(&self) -> &[Point2] {
        &self.samples
    }

    pub fn progress(&self) -> usize {
        self.progress
    }

    pub fn end(&self) -> Point2 {
        *self.samples.last().unwrap()
    }

    /// Farthest sample ahead of the robot that lies within `f_l·L_min` and is
    /// visible on the explored map; the nearest sample otherwise.
    pub fn select_goal_point(
        &mut self,
        robot: &WorldPose,
        scan: &LidarScan,
        params: &FieldParams,
        explored: &OccupancyGrid,
    ) -> GoalPoint {
        let p = robot.position();
        let window = (self.search_window / self.spacing).ceil() as usize;
        let hi = self.progress.saturating_add(window).min(self.samples.len() - 1);
        let mut nearest = self.progress;
        let mut nd = f64::INFINITY;
        for i in self.progress..=hi {
            let d = self.samples[i].distance(p);
            if d < nd {
                nd = d;
                nearest = i;
            }
        }
        self.progress = nearest;
        let radius = params.f_l * scan.min_range();
        let mut chosen = nearest;
        for i in (nearest..self.samples.len()).rev() {
            let q = self.samples[i];
            if q.distance(p) <= radius
                && line_of_sight(explored, p, q)
                && (self.clearance <= 0.0 || swept_clear(explored, p, q, self.clearance))
            {
                chosen = i;
                break;
            }
        }
        let g = self.samples[chosen];
        let (dx, dy) = (g.x - p.x, g.y - p.y);
        let world = if dx.hypot(dy) > 1e-9 {
            dy.atan2(dx)
        } else {
            self.tangent(chosen)
        };
        GoalPoint {
            position: g,
            bearing: normalize_angle(world - robot.theta),
        }
    }

    fn tangent(&self, i: usize) -> f64 {
        let n = self.samples.len();
        let (a, b) = if i + 1 < n {
            (self.samples[i], self.samples[i + 1])
        } else if n >= 2 {
            (self.samples[n - 2], self.samples[n - 1])
        } else {
            return 0.0;
        };
        (b.y - a.y).atan2(b.x - a.x)
    }
}

/// Stateless goal-point selection from the start of `path`.
pub fn select_goal_point(
    path: &[Point2],
    robot: &WorldPose,
    scan: &LidarScan,
    params: &FieldParams,
    explored: &OccupancyGrid,
) -> Result<GoalPoint, NavError> {
    let mut t = PathTracker::new(path, explored.resolution() / 4.0)?;
    t.search_window = f64::INFINITY;
    Ok(t.select_goal_point(robot, scan, params, explored))
}
