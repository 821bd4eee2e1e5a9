//! Cost-pruned search over the semantic area graph for paths to frontiers.
//!
//! Each area has an anchor on its skeleton segment (the midpoint, or the
//! single point of an intersection). Moving from area `A` to neighbor `N`
//! through a link costs the skeleton distance from `A`'s anchor to the port
//! plus the distance from the port to `N`'s anchor. Because accumulated cost
//! only depends on the area reached, a per-area best cost prunes the search
//! without losing the optimum.

use std::collections::BinaryHeap;

use thiserror::Error;

use crate::frontier_goal::{cost_order, score_terms, CostBreakdown, GoalError, GoalWeights};
use crate::polyline;
use crate::pq::MinEntry;
use crate::semantic_topo::{AreaClass, AreaId, GoalId, SemanticTopometricMap};
use crate::world::{normalize_angle, Point2, WorldPose};

#[derive(Debug, Error, PartialEq)]
pub enum PathError {
    #[error("robot at ({x:.3}, {y:.3}) lies outside every area")]
    RobotOutsideAreas { x: f64, y: f64 },
    #[error(transparent)]
    Goal(#[from] GoalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchOrder {
    /// Pop the cheapest partial path first.
    #[default]
    Priority,
    /// Pop the most recently pushed partial path first.
    Lifo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub order: SearchOrder,
    /// Arc length along the path used to measure the initial turn, meters.
    pub lookahead: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            order: SearchOrder::Priority,
            lookahead: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopoPath {
    pub area_sequence: Vec<AreaId>,
    pub waypoints: Vec<Point2>,
    /// `d`, meters.
    pub length: f64,
    pub terminal_goal: GoalId,
    /// `v`, radians in `[0, π]`.
    pub initial_turn: f64,
    pub cost: CostBreakdown,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub pops: usize,
    pub pushes: usize,
    pub pruned: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// One path per reachable goal, ordered by goal id.
    pub paths: Vec<TopoPath>,
    pub stats: SearchStats,
}

impl SearchOutcome {
    /// Index of the cheapest path.
    pub fn best(&self) -> Option<&TopoPath> {
        self.paths
            .iter()
            .min_by(|a, b| cost_order((&a.cost, a.terminal_goal), (&b.cost, b.terminal_goal)))
    }
}

/// Anchor parameter of an area along its skeleton segment.
pub fn anchor(map: &SemanticTopometricMap, area: AreaId) -> f64 {
    let a = &map.areas[area];
    match a.class {
        AreaClass::Intersection => 0.0,
        _ => a.length() / 2.0,
    }
}

#[derive(Debug, Clone)]
struct Partial {
    area: AreaId,
    parent: Option<usize>,
    /// Link used to enter `area`.
    link: Option<usize>,
    /// Meters from the robot projection to `area`'s anchor.
    d: f64,
    v: f64,
    cost: f64,
}

/// Initial turn: the angle between the robot heading and the chord to the
/// point `lookahead` meters along `prefix`.
pub fn initial_turn(robot: &WorldPose, prefix: &[Point2], lookahead: f64) -> f64 {
    if prefix.is_empty() {
        return 0.0;
    }
    let len = polyline::length(prefix);
    let q = polyline::point_at(prefix, lookahead.min(len));
    let (dx, dy) = (q.x - robot.x, q.y - robot.y);
    if dx.hypot(dy) < 1e-9 {
        return 0.0;
    }
    normalize_angle(dy.atan2(dx) - robot.theta).abs()
}

/// Paths to every reachable frontier in one traversal.
pub fn find_all_frontier_paths(
    map: &SemanticTopometricMap,
    robot: &WorldPose,
    weights: &GoalWeights,
) -> Result<Vec<TopoPath>, PathError> {
    Ok(search(map, robot, weights, &SearchConfig::default())?.paths)
}

/// Cheapest path to any frontier; `None` when no frontier is reachable.
pub fn find_optimal_path(
    map: &SemanticTopometricMap,
    robot: &WorldPose,
    weights: &GoalWeights,
) -> Result<Option<TopoPath>, PathError> {
    Ok(search(map, robot, weights, &SearchConfig::default())?
        .best()
        .cloned())
}

/// The pruned search with explicit configuration and work counters.
pub fn search(
    map: &SemanticTopometricMap,
    robot: &WorldPose,
    weights: &GoalWeights,
    cfg: &SearchConfig,
) -> Result<SearchOutcome, PathError> {
    weights.validate()?;
    let l = map.avg_intersection_path_len;
    if !(l > 0.0) {
        return Err(GoalError::NonPositivePathLength(l).into());
    }
    let p = robot.position();
    let start = map
        .locate(p)
        .ok_or(PathError::RobotOutsideAreas { x: p.x, y: p.y })?;
    let start_seg = &map.areas[start].skeleton_segment;
    let s_r = polyline::project(start_seg, p).0;

    let n = map.areas.len();
    let mut area_cost = vec![f64::INFINITY; n];
    area_cost[start] = 0.0;
    let mut arena: Vec<Partial> = Vec::new();
    let mut stats = SearchStats::default();
    // Best arena entry that reached each frontier pathway.
    let mut reached: Vec<Option<usize>> = vec![None; n];

    let mut heap: BinaryHeap<MinEntry<usize>> = BinaryHeap::new();
    let mut stack: Vec<usize> = Vec::new();
    let push = |arena: &mut Vec<Partial>,
                    heap: &mut BinaryHeap<MinEntry<usize>>,
                    stack: &mut Vec<usize>,
                    part: Partial| {
        let id = arena.len();
        let cost = part.cost;
        arena.push(part);
        match cfg.order {
            SearchOrder::Priority => heap.push(MinEntry::new(cost, id as u64, id)),
            SearchOrder::Lifo => stack.push(id),
        }
    };

    for &k in map.links_of(start) {
        let (nb, pa, pb) = map.links[k].from_side(start);
        let an = anchor(map, nb);
        let d = (s_r - pa).abs() + (pb - an).abs();
        let mut prefix = polyline::slice(start_seg, s_r, pa);
        polyline::extend(&mut prefix, &polyline::slice(&map.areas[nb].skeleton_segment, pb, an));
        let v = initial_turn(robot, &prefix, cfg.lookahead);
        let cost = weights.w_v * v + d / l;
        if area_cost[nb] <= cost {
            stats.pruned += 1;
            continue;
        }
        area_cost[nb] = cost;
        stats.pushes += 1;
        push(
            &mut arena,
            &mut heap,
            &mut stack,
            Partial {
                area: nb,
                parent: None,
                link: Some(k),
                d,
                v,
                cost,
            },
        );
    }

    loop {
        let id = match cfg.order {
            SearchOrder::Priority => match heap.pop() {
                Some(e) => e.item,
                None => break,
            },
            SearchOrder::Lifo => match stack.pop() {
                Some(i) => i,
                None => break,
            },
        };
        let cur = arena[id].clone();
        if cur.cost > area_cost[cur.area] {
            continue;
        }
        stats.pops += 1;
        if map.areas[cur.area].class == AreaClass::FrontierPathway {
            reached[cur.area] = Some(id);
        }
        let ac = anchor(map, cur.area);
        for &k in map.links_of(cur.area) {
            let (nb, pa, pb) = map.links[k].from_side(cur.area);
            let d = cur.d + (ac - pa).abs() + (pb - anchor(map, nb)).abs();
            let cost = weights.w_v * cur.v + d / l;
            if area_cost[nb] <= cost {
                stats.pruned += 1;
                continue;
            }
            area_cost[nb] = cost;
            stats.pushes += 1;
            push(
                &mut arena,
                &mut heap,
                &mut stack,
                Partial {
                    area: nb,
                    parent: Some(id),
                    link: Some(k),
                    d,
                    v: cur.v,
                    cost,
                },
            );
        }
    }

    let mut paths = Vec::new();
    for goal in &map.goals {
        let fp = goal.area;
        let sem = goal.into();
        if fp == start {
            let len = map.areas[fp].length();
            let wp = polyline::slice(start_seg, s_r, len);
            let v = initial_turn(robot, &wp, cfg.lookahead);
            let d = (len - s_r).abs();
            let cost = score_terms(d, v, sem, weights, l)?;
            paths.push(TopoPath {
                area_sequence: vec![start],
                waypoints: wp,
                length: d,
                terminal_goal: goal.id,
                initial_turn: v,
                cost,
            });
            continue;
        }
        let Some(end) = reached[fp] else { continue };
        let tail = map.areas[fp].length() - anchor(map, fp);
        let d = arena[end].d + tail;
        let cost = score_terms(d, arena[end].v, sem, weights, l)?;
        let (area_sequence, waypoints) = reconstruct(map, &arena, end, start, s_r);
        paths.push(TopoPath {
            area_sequence,
            waypoints,
            length: d,
            terminal_goal: goal.id,
            initial_turn: arena[end].v,
            cost,
        });
    }
    Ok(SearchOutcome { paths, stats })
}

fn reconstruct(
    map: &SemanticTopometricMap,
    arena: &[Partial],
    end: usize,
    start: AreaId,
    s_r: f64,
) -> (Vec<AreaId>, Vec<Point2>) {
    let mut chain = vec![end];
    while let Some(p) = arena[*chain.last().unwrap()].parent {
        chain.push(p);
    }
    chain.reverse();
    let mut areas = vec![start];
    let mut wp = Vec::new();
    // Parameter where the walk currently stands on the previous area.
    let mut prev_area = start;
    let mut prev_param = s_r;
    for &i in &chain {
        let part = &arena[i];
        let link = &map.links[part.link.expect("every partial enters through a link")];
        let (_, pa, pb) = link.from_side(prev_area);
        let seg_prev = &map.areas[prev_area].skeleton_segment;
        polyline::extend(&mut wp, &polyline::slice(seg_prev, prev_param, pa));
        // Entering an area always walks to its anchor first.
        let an = anchor(map, part.area);
        let seg = &map.areas[part.area].skeleton_segment;
        polyline::extend(&mut wp, &polyline::slice(seg, pb, an));
        areas.push(part.area);
        prev_area = part.area;
        prev_param = an;
    }
    let last = &map.areas[prev_area];
    polyline::extend(&mut wp, &polyline::slice(&last.skeleton_segment, prev_param, last.length()));
    (areas, wp)
}
