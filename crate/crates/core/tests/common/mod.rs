//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use topo_explore::frontier_goal::GoalWeights;
use topo_explore::semantic_topo::{AreaClass, AreaLink, FrontierGoal, SemanticArea, SemanticTopometricMap};
use topo_explore::world::{parse_ascii, CellIndex, CellState, OccupancyGrid, Point2, WorldPose};

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn scenario_path(name: &str) -> PathBuf {
    repo_root().join("scenarios").join(format!("{name}.cfg"))
}

pub fn ascii(rows: &[&str]) -> OccupancyGrid {
    let mut text = rows.join("\n");
    text.push('\n');
    parse_ascii(&text, 0.05).unwrap()
}

/// Random grid mixing Free, Occupied and Unknown blobs.
pub fn random_grid(rng: &mut impl Rng, w: usize, h: usize) -> OccupancyGrid {
    let mut g = OccupancyGrid::new(w, h, 0.05, Point2::default(), CellState::Free).unwrap();
    for _ in 0..(w * h / 40) {
        let state = match rng.random_range(0..3) {
            0 => CellState::Occupied,
            1 => CellState::Unknown,
            _ => CellState::Free,
        };
        let (c, r) = (rng.random_range(0..w), rng.random_range(0..h));
        let (bw, bh) = (rng.random_range(1..6), rng.random_range(1..6));
        for row in r..(r + bh).min(h) {
            for col in c..(c + bw).min(w) {
                g.set(CellIndex::new(col, row), state);
            }
        }
    }
    g
}

/// Frontier cells by the textbook definition, with explicit bounds checks.
pub fn brute_frontier(g: &OccupancyGrid) -> Vec<CellIndex> {
    let mut out = Vec::new();
    for row in 0..g.height() {
        for col in 0..g.width() {
            if g.state(CellIndex::new(col, row)) != CellState::Free {
                continue;
            }
            let mut unknown = false;
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    let (c, r) = (col as i64 + dc, row as i64 + dr);
                    if (dc, dr) != (0, 0)
                        && c >= 0
                        && r >= 0
                        && (c as usize) < g.width()
                        && (r as usize) < g.height()
                        && g.state(CellIndex::new(c as usize, r as usize)) == CellState::Unknown
                    {
                        unknown = true;
                    }
                }
            }
            if unknown {
                out.push(CellIndex::new(col, row));
            }
        }
    }
    out
}

/// 8-connected Free reachability by fixed-point relaxation.
pub fn brute_reachable(g: &OccupancyGrid, start: CellIndex) -> Vec<bool> {
    let (w, h) = (g.width(), g.height());
    let mut on = vec![false; w * h];
    if g.state(start) != CellState::Free {
        return on;
    }
    on[start.row * w + start.col] = true;
    loop {
        let mut changed = false;
        for row in 0..h {
            for col in 0..w {
                let i = row * w + col;
                if on[i] || g.state(CellIndex::new(col, row)) != CellState::Free {
                    continue;
                }
                let touches = (-1i64..=1).any(|dr| {
                    (-1i64..=1).any(|dc| {
                        let (c, r) = (col as i64 + dc, row as i64 + dr);
                        c >= 0 && r >= 0 && (c as usize) < w && (r as usize) < h && on[r as usize * w + c as usize]
                    })
                });
                if touches {
                    on[i] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            return on;
        }
    }
}

/// Partitions cells into 8-connected groups by repeated merging.
pub fn brute_clusters(cells: &[CellIndex]) -> Vec<Vec<CellIndex>> {
    let mut label: Vec<usize> = (0..cells.len()).collect();
    loop {
        let mut changed = false;
        for i in 0..cells.len() {
            for j in 0..cells.len() {
                if cells[i].chebyshev(cells[j]) == 1 && label[j] < label[i] {
                    label[i] = label[j];
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut groups: Vec<Vec<CellIndex>> = Vec::new();
    let mut keys: Vec<usize> = label.clone();
    keys.sort_unstable();
    keys.dedup();
    for k in keys {
        let mut g: Vec<CellIndex> = cells.iter().zip(&label).filter(|(_, &l)| l == k).map(|(&c, _)| c).collect();
        g.sort_by_key(|c| (c.row, c.col));
        groups.push(g);
    }
    groups.sort();
    groups
}

/// Cost of a frontier written out by hand.
pub fn hand_cost(d: f64, v: f64, p_l: f64, o: usize, p_u: usize, w: &GoalWeights, l: f64) -> f64 {
    let metric = d / l + w.w_v * v;
    let gain = w.w_p * p_l + w.w_i * (o as f64 + p_u as f64);
    metric - gain
}

fn seg_len(pts: &[Point2]) -> f64 {
    pts.windows(2).map(|w| (w[1].x - w[0].x).hypot(w[1].y - w[0].y)).sum()
}

fn seg_point(pts: &[Point2], s: f64) -> Point2 {
    let mut left = s.max(0.0);
    for w in pts.windows(2) {
        let l = (w[1].x - w[0].x).hypot(w[1].y - w[0].y);
        if left <= l && l > 0.0 {
            let t = left / l;
            return Point2::new(w[0].x + t * (w[1].x - w[0].x), w[0].y + t * (w[1].y - w[0].y));
        }
        left -= l;
    }
    *pts.last().unwrap()
}

/// Points of `pts` between arc lengths `a` and `b`, walking backwards when
/// `b < a`, keeping every vertex passed on the way.
fn seg_slice(pts: &[Point2], a: f64, b: f64) -> Vec<Point2> {
    let mut at = vec![0.0];
    for w in pts.windows(2) {
        at.push(at.last().unwrap() + (w[1].x - w[0].x).hypot(w[1].y - w[0].y));
    }
    let (lo, hi) = (a.min(b), a.max(b));
    let mut params = vec![a];
    let mut inner: Vec<f64> = at.into_iter().filter(|&s| s > lo && s < hi).collect();
    if b < a {
        inner.reverse();
    }
    params.extend(inner);
    params.push(b);
    params.into_iter().map(|s| seg_point(pts, s)).collect()
}

/// Synthetic area graph where every area lives in its own 3 m tile, so the
/// robot's area is unambiguous.
pub struct SynthGraph {
    pub map: SemanticTopometricMap,
    pub robot: WorldPose,
    pub start: usize,
    pub s_r: f64,
}

pub fn synth_graph(rng: &mut impl Rng, n: usize, extra_links: usize) -> SynthGraph {
    let cols = (n as f64).sqrt().ceil() as usize;
    let mut areas = Vec::new();
    let mut goals = Vec::new();
    for i in 0..n {
        let (ox, oy) = ((i % cols) as f64 * 3.0, (i / cols) as f64 * 3.0);
        let k = rng.random_range(2..4);
        let pts: Vec<Point2> = (0..k)
            .map(|_| Point2::new(ox + rng.random_range(0.2..2.8), oy + rng.random_range(0.2..2.8)))
            .collect();
        let class = if i == 1 || rng.random_bool(0.3) {
            AreaClass::FrontierPathway
        } else {
            [AreaClass::Intersection, AreaClass::Pathway, AreaClass::DeadEnd][rng.random_range(0..3)]
        };
        let mut a = SemanticArea::new(i, class, pts);
        if class == AreaClass::FrontierPathway {
            let id = goals.len();
            a.goal = Some(id);
            let end = *a.skeleton_segment.last().unwrap();
            goals.push(FrontierGoal {
                id,
                target: WorldPose::new(end.x, end.y, 0.0),
                target_cell: CellIndex::new(0, 0),
                frontier_cells: vec![],
                area: i,
                path_to_nearest_intersection_len: rng.random_range(0.0..3.0),
                nearest_intersection: None,
                openings: rng.random_range(0..5),
                connected_frontier_pathways: rng.random_range(0..3),
            });
        }
        areas.push(a);
    }
    let mut pairs = Vec::new();
    for i in 1..n {
        pairs.push((rng.random_range(0..i), i));
    }
    for _ in 0..extra_links {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            pairs.push((a, b));
        }
    }
    let links = pairs
        .into_iter()
        .map(|(a, b)| {
            let pa = rng.random_range(0.0..=1.0) * seg_len(&areas[a].skeleton_segment);
            let pb = rng.random_range(0.0..=1.0) * seg_len(&areas[b].skeleton_segment);
            AreaLink {
                a,
                b,
                port: seg_point(&areas[a].skeleton_segment, pa),
                param_a: pa,
                param_b: pb,
            }
        })
        .collect();
    let start = 0;
    let s_r = rng.random_range(0.0..=1.0) * seg_len(&areas[start].skeleton_segment);
    let p = seg_point(&areas[start].skeleton_segment, s_r);
    let robot = WorldPose::new(p.x, p.y, rng.random_range(-3.1..3.1));
    let l = rng.random_range(0.5..3.0);
    let map = SemanticTopometricMap::from_parts(areas, links, goals, l).unwrap();
    SynthGraph { map, robot, start, s_r }
}

fn oracle_anchor(map: &SemanticTopometricMap, a: usize) -> f64 {
    if map.areas[a].class == AreaClass::Intersection {
        0.0
    } else {
        seg_len(&map.areas[a].skeleton_segment) / 2.0
    }
}

fn oracle_turn(robot: &WorldPose, prefix: &[Point2], lookahead: f64) -> f64 {
    let q = seg_point(prefix, lookahead.min(seg_len(prefix)));
    let (dx, dy) = (q.x - robot.x, q.y - robot.y);
    if dx.hypot(dy) < 1e-9 {
        return 0.0;
    }
    let mut a = dy.atan2(dx) - robot.theta;
    while a > std::f64::consts::PI {
        a -= std::f64::consts::TAU;
    }
    while a <= -std::f64::consts::PI {
        a += std::f64::consts::TAU;
    }
    a.abs()
}

/// `(a, b, param on a, param on b)` seen from `from`.
fn sides(l: &AreaLink, from: usize) -> (usize, f64, f64) {
    if l.a == from {
        (l.b, l.param_a, l.param_b)
    } else {
        (l.a, l.param_b, l.param_a)
    }
}

/// Minimum cost over every simple area path from the robot to every frontier.
/// Returns `(best total, its d)`.
pub fn brute_force_best(g: &SynthGraph, w: &GoalWeights, lookahead: f64) -> Option<(f64, f64)> {
    let map = &g.map;
    let l = map.avg_intersection_path_len;
    let mut best: Option<(f64, f64)> = None;
    let mut offer = |total: f64, d: f64| {
        if best.is_none_or(|(bt, bd)| total < bt - 1e-12 || ((total - bt).abs() <= 1e-12 && d < bd)) {
            best = Some((total, d));
        }
    };
    let start_seg = &map.areas[g.start].skeleton_segment;
    for goal in &map.goals {
        if goal.area == g.start {
            let len = seg_len(start_seg);
            let v = oracle_turn(&g.robot, &seg_slice(start_seg, g.s_r, len), lookahead);
            let d = (len - g.s_r).abs();
            offer(
                hand_cost(d, v, goal.path_to_nearest_intersection_len, goal.openings, goal.connected_frontier_pathways, w, l),
                d,
            );
        }
    }
    // depth-first over simple paths: (area, d so far, v, visited)
    let n = map.areas.len();
    let mut stack: Vec<(usize, f64, f64, Vec<bool>)> = Vec::new();
    for l_link in &map.links {
        if l_link.a != g.start && l_link.b != g.start {
            continue;
        }
        let (nb, pa, pb) = sides(l_link, g.start);
        let an = oracle_anchor(map, nb);
        let d = (g.s_r - pa).abs() + (pb - an).abs();
        let mut prefix = seg_slice(start_seg, g.s_r, pa);
        prefix.extend(seg_slice(&map.areas[nb].skeleton_segment, pb, an));
        let v = oracle_turn(&g.robot, &prefix, lookahead);
        let mut seen = vec![false; n];
        seen[g.start] = true;
        seen[nb] = true;
        stack.push((nb, d, v, seen));
    }
    while let Some((a, d, v, seen)) = stack.pop() {
        if let Some(gid) = map.areas[a].goal {
            let goal = &map.goals[gid];
            let tail = seg_len(&map.areas[a].skeleton_segment) - oracle_anchor(map, a);
            let total_d = d + tail;
            offer(
                hand_cost(total_d, v, goal.path_to_nearest_intersection_len, goal.openings, goal.connected_frontier_pathways, w, l),
                total_d,
            );
        }
        let an = oracle_anchor(map, a);
        for l_link in &map.links {
            if l_link.a != a && l_link.b != a {
                continue;
            }
            let (nb, pa, pb) = sides(l_link, a);
            if seen[nb] {
                continue;
            }
            let mut s2 = seen.clone();
            s2[nb] = true;
            stack.push((nb, d + (an - pa).abs() + (pb - oracle_anchor(map, nb)).abs(), v, s2));
        }
    }
    best
}

/// Independent field: attraction and repulsion summed as separate component lists.
pub fn field_oracle(bearing: f64, angles: &[f64], ranges: &[f64], f_g: f64, f_o: f64) -> [f64; 2] {
    let rx: Vec<f64> = angles.iter().zip(ranges).map(|(a, r)| f_o / r * a.cos()).collect();
    let ry: Vec<f64> = angles.iter().zip(ranges).map(|(a, r)| f_o / r * a.sin()).collect();
    [
        f_g * bearing.cos() - rx.iter().sum::<f64>(),
        f_g * bearing.sin() - ry.iter().sum::<f64>(),
    ]
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Tree of areas where each child starts exactly on its parent's segment, so
/// link ports coincide geometrically.
pub fn geometric_tree(rng: &mut impl Rng, n: usize) -> SynthGraph {
    let mut areas: Vec<SemanticArea> = Vec::new();
    let mut goals = Vec::new();
    let mut links = Vec::new();
    for i in 0..n {
        let mut pts = Vec::new();
        if i == 0 {
            pts.push(Point2::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)));
        } else {
            let parent = rng.random_range(0..i);
            let pa = rng.random_range(0.0..=1.0) * seg_len(&areas[parent].skeleton_segment);
            let port = seg_point(&areas[parent].skeleton_segment, pa);
            links.push(AreaLink {
                a: parent,
                b: i,
                port,
                param_a: pa,
                param_b: 0.0,
            });
            pts.push(port);
        }
        for _ in 0..rng.random_range(1..3) {
            pts.push(Point2::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)));
        }
        let class = if i > 0 && rng.random_bool(0.4) {
            AreaClass::FrontierPathway
        } else {
            [AreaClass::Intersection, AreaClass::Pathway][rng.random_range(0..2)]
        };
        let mut a = SemanticArea::new(i, class, pts);
        if class == AreaClass::FrontierPathway {
            a.goal = Some(goals.len());
            let end = *a.skeleton_segment.last().unwrap();
            goals.push(FrontierGoal {
                id: goals.len(),
                target: WorldPose::new(end.x, end.y, 0.0),
                target_cell: CellIndex::new(0, 0),
                frontier_cells: vec![],
                area: i,
                path_to_nearest_intersection_len: 1.0,
                nearest_intersection: None,
                openings: 0,
                connected_frontier_pathways: 0,
            });
        }
        areas.push(a);
    }
    let s_r = rng.random_range(0.0..=1.0) * seg_len(&areas[0].skeleton_segment);
    let p = seg_point(&areas[0].skeleton_segment, s_r);
    let robot = WorldPose::new(p.x, p.y, 0.0);
    let map = SemanticTopometricMap::from_parts(areas, links, goals, 1.0).unwrap();
    SynthGraph { map, robot, start: 0, s_r }
}
