//! Semantic topometric segmentation of the explored grid.
//!
//! The reachable Free region is thinned to a skeleton, the skeleton is traced
//! into a graph, short spurs are pruned, and every reachable frontier cluster
//! is attached to the graph by a shortest stub. Branches and nodes are then
//! classified into intersections, pathways, dead ends and frontier pathways.

pub mod export;
pub mod frontier;
pub mod graph;
pub mod skeleton;

use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use thiserror::Error;

pub use frontier::{cluster_cells, detect_frontier_cells, is_frontier_cell, reachable_free};
pub use graph::{classify_junctions, Junction, NodeKind, SkeletonGraph};
pub use skeleton::{m_neighbors, skeletonize, BinaryGrid};

use crate::polyline;
use crate::pq::MinEntry;
use crate::world::{CellIndex, CellState, OccupancyGrid, Point2, WorldPose, NEIGHBORS_8};
use graph::{BranchId, NodeId};

pub type AreaId = usize;
pub type GoalId = usize;

#[derive(Debug, Error, PartialEq)]
pub enum SegmentError {
    #[error("robot cell {0} is not Free")]
    RobotNotFree(CellIndex),
    #[error("explored map contains no Free space")]
    EmptyFreeSpace,
    #[error("invalid semantic map: {0}")]
    Invalid(String),
    #[error("invalid segmentation config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AreaClass {
    Intersection,
    Pathway,
    DeadEnd,
    FrontierPathway,
}

impl AreaClass {
    pub const ALL: [AreaClass; 4] = [
        AreaClass::Intersection,
        AreaClass::Pathway,
        AreaClass::DeadEnd,
        AreaClass::FrontierPathway,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AreaClass::Intersection => "intersection",
            AreaClass::Pathway => "pathway",
            AreaClass::DeadEnd => "dead_end",
            AreaClass::FrontierPathway => "frontier_pathway",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticArea {
    pub id: AreaId,
    pub class: AreaClass,
    /// Grid cells labelled with this area, row-major.
    pub cells: Vec<CellIndex>,
    /// Skeleton polyline in world coordinates. Frontier pathways run from
    /// their connection port to the frontier target; intersections hold a
    /// single point.
    pub skeleton_segment: Vec<Point2>,
    pub openings: usize,
    pub connected_frontier_pathways: usize,
    pub goal: Option<GoalId>,
}

impl SemanticArea {
    pub fn new(id: AreaId, class: AreaClass, skeleton_segment: Vec<Point2>) -> Self {
        Self {
            id,
            class,
            cells: Vec::new(),
            skeleton_segment,
            openings: 0,
            connected_frontier_pathways: 0,
            goal: None,
        }
    }

    pub fn length(&self) -> f64 {
        polyline::length(&self.skeleton_segment)
    }
}

/// Adjacency between two areas meeting at `port`. `param_a`/`param_b` are the
/// arc lengths of the port along each area's skeleton segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaLink {
    pub a: AreaId,
    pub b: AreaId,
    pub port: Point2,
    pub param_a: f64,
    pub param_b: f64,
}

impl AreaLink {
    /// `(neighbor, param on this side, param on the neighbor side)`.
    pub fn from_side(&self, area: AreaId) -> (AreaId, f64, f64) {
        if self.a == area {
            (self.b, self.param_a, self.param_b)
        } else {
            (self.a, self.param_b, self.param_a)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierGoal {
    pub id: GoalId,
    /// Representative frontier pose; heading follows the approach direction.
    pub target: WorldPose,
    pub target_cell: CellIndex,
    pub frontier_cells: Vec<CellIndex>,
    /// The FrontierPathway area ending at this goal.
    pub area: AreaId,
    /// `p_l`: skeleton distance from the target to the nearest intersection.
    pub path_to_nearest_intersection_len: f64,
    pub nearest_intersection: Option<AreaId>,
    /// `O` of the nearest intersection (0 without one).
    pub openings: usize,
    /// `P_u` of the nearest intersection (0 without one).
    pub connected_frontier_pathways: usize,
}

/// Work counters of one segmentation call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SegmentStats {
    pub reachable_cells: usize,
    pub skeleton_pixels: usize,
    pub thinning_passes: usize,
    pub frontier_cells: usize,
    /// Cells touched by all grid passes; a deterministic proxy for runtime.
    pub cell_ops: u64,
}

#[derive(Debug, Clone, PartialEq)]
struct LabelGrid {
    width: usize,
    height: usize,
    resolution: f64,
    origin: Point2,
    labels: Vec<Option<AreaId>>,
}

#[derive(Debug, Clone)]
pub struct SemanticTopometricMap {
    pub areas: Vec<SemanticArea>,
    pub links: Vec<AreaLink>,
    pub goals: Vec<FrontierGoal>,
    pub frontier_paths: Vec<AreaId>,
    /// `L_path` in meters.
    pub avg_intersection_path_len: f64,
    pub skeleton: SkeletonGraph,
    pub stats: SegmentStats,
    adjacency: Vec<Vec<usize>>,
    labels: Option<LabelGrid>,
}

impl SemanticTopometricMap {
    /// Assembles a map from explicit parts, validating references. Used for
    /// synthetic graphs where no grid exists; robot lookup then falls back
    /// to the nearest skeleton segment.
    pub fn from_parts(
        areas: Vec<SemanticArea>,
        links: Vec<AreaLink>,
        goals: Vec<FrontierGoal>,
        avg_intersection_path_len: f64,
    ) -> Result<Self, SegmentError> {
        let n = areas.len();
        for (i, a) in areas.iter().enumerate() {
            if a.id != i {
                return Err(SegmentError::Invalid(format!("area {i} has id {}", a.id)));
            }
            if a.skeleton_segment.is_empty() {
                return Err(SegmentError::Invalid(format!("area {i} has no skeleton segment")));
            }
            if a.class == AreaClass::FrontierPathway {
                match a.goal {
                    Some(g) if g < goals.len() && goals[g].area == i => {}
                    _ => {
                        return Err(SegmentError::Invalid(format!(
                            "frontier pathway {i} must reference exactly one goal"
                        )))
                    }
                }
            }
        }
        for (i, g) in goals.iter().enumerate() {
            if g.id != i || g.area >= n || areas[g.area].class != AreaClass::FrontierPathway {
                return Err(SegmentError::Invalid(format!("goal {i} is malformed")));
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for (k, l) in links.iter().enumerate() {
            if l.a >= n || l.b >= n || l.a == l.b {
                return Err(SegmentError::Invalid(format!("link {k} references bad areas")));
            }
            adjacency[l.a].push(k);
            adjacency[l.b].push(k);
        }
        if !(avg_intersection_path_len > 0.0) {
            return Err(SegmentError::Invalid("L_path must be positive".into()));
        }
        let frontier_paths = areas
            .iter()
            .filter(|a| a.class == AreaClass::FrontierPathway)
            .map(|a| a.id)
            .collect();
        Ok(Self {
            areas,
            links,
            goals,
            frontier_paths,
            avg_intersection_path_len,
            skeleton: SkeletonGraph::default(),
            stats: SegmentStats::default(),
            adjacency,
            labels: None,
        })
    }

    /// Link indices touching `area`.
    pub fn links_of(&self, area: AreaId) -> &[usize] {
        &self.adjacency[area]
    }

    /// Distinct neighbor areas of `area`.
    pub fn neighbors(&self, area: AreaId) -> Vec<AreaId> {
        let mut v: Vec<AreaId> = self.adjacency[area]
            .iter()
            .map(|&k| self.links[k].from_side(area).0)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn count(&self, class: AreaClass) -> usize {
        self.areas.iter().filter(|a| a.class == class).count()
    }

    /// Area label of a grid cell, when the map was built from a grid.
    pub fn label(&self, cell: CellIndex) -> Option<AreaId> {
        let l = self.labels.as_ref()?;
        if cell.col >= l.width || cell.row >= l.height {
            return None;
        }
        l.labels[cell.row * l.width + cell.col]
    }

    /// Area containing world point `p`. Grid-backed maps use cell labels;
    /// synthetic maps use the nearest skeleton segment.
    pub fn locate(&self, p: Point2) -> Option<AreaId> {
        if let Some(l) = &self.labels {
            let u = ((p.x - l.origin.x) / l.resolution).floor();
            let v = ((p.y - l.origin.y) / l.resolution).floor();
            if !(u >= 0.0 && v >= 0.0) || u >= l.width as f64 || v >= l.height as f64 {
                return None;
            }
            return l.labels[v as usize * l.width + u as usize];
        }
        self.areas
            .iter()
            .map(|a| (polyline::project(&a.skeleton_segment, p).1, a.id))
            .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)))
            .map(|(_, id)| id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentConfig {
    /// Frontier clusters with fewer cells are dropped unless every cluster is that small.
    pub min_frontier_cluster: usize,
    /// Spur threshold: `spur_factor·clearance + spur_min_cells`, in cells.
    pub spur_factor: f64,
    pub spur_min_cells: f64,
    /// Length in meters of the dead-end stretch at a closed branch end.
    pub dead_end_len: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            min_frontier_cluster: 3,
            spur_factor: 1.5,
            spur_min_cells: 2.0,
            dead_end_len: 0.25,
        }
    }
}

impl SegmentConfig {
    pub fn validate(&self) -> Result<(), SegmentError> {
        if self.min_frontier_cluster == 0 {
            return Err(SegmentError::InvalidConfig("min_frontier_cluster must be >= 1".into()));
        }
        if !(self.spur_factor >= 0.0) || !(self.spur_min_cells >= 0.0) || !(self.dead_end_len > 0.0) {
            return Err(SegmentError::InvalidConfig(
                "spur and dead-end parameters must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Segments with default parameters.
pub fn segment(
    explored: &OccupancyGrid,
    robot_cell: CellIndex,
) -> Result<SemanticTopometricMap, SegmentError> {
    segment_with(explored, robot_cell, &SegmentConfig::default())
}

/// Chamfer distance (cells) from each mask cell to the nearest cell outside
/// the mask; the raster border counts as outside.
pub fn clearance_field(mask: &BinaryGrid) -> Vec<f64> {
    let (w, h) = (mask.width(), mask.height());
    let diag = std::f64::consts::SQRT_2;
    let mut d: Vec<f64> = (0..w * h)
        .map(|i| if mask.get(CellIndex::new(i % w, i / w)) { f64::INFINITY } else { 0.0 })
        .collect();
    let read = |d: &Vec<f64>, c: i64, r: i64| -> f64 {
        if c < 0 || r < 0 || c >= w as i64 || r >= h as i64 {
            0.0
        } else {
            d[r as usize * w + c as usize]
        }
    };
    let fwd = [(-1, 0, 1.0), (-1, -1, diag), (0, -1, 1.0), (1, -1, diag)];
    for r in 0..h as i64 {
        for c in 0..w as i64 {
            let i = r as usize * w + c as usize;
            for &(dc, dr, cost) in &fwd {
                let v = read(&d, c + dc, r + dr) + cost;
                if v < d[i] {
                    d[i] = v;
                }
            }
        }
    }
    for r in (0..h as i64).rev() {
        for c in (0..w as i64).rev() {
            let i = r as usize * w + c as usize;
            for &(dc, dr, cost) in &fwd {
                let v = read(&d, c - dc, r - dr) + cost;
                if v < d[i] {
                    d[i] = v;
                }
            }
        }
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Owner {
    Node(NodeId),
    Branch(BranchId),
}

/// Octile Dijkstra through `reach` from `target` to the first owned skeleton
/// pixel. Returns the cell path from that pixel to `target`.
fn attach_stub(
    reach: &BinaryGrid,
    owner: &[Option<Owner>],
    target: CellIndex,
    ops: &mut u64,
) -> Option<(Vec<CellIndex>, Owner)> {
    let w = reach.width();
    let idx = |c: CellIndex| c.row * w + c.col;
    let mut dist = vec![f64::INFINITY; w * reach.height()];
    let mut parent: Vec<Option<CellIndex>> = vec![None; w * reach.height()];
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    dist[idx(target)] = 0.0;
    heap.push(MinEntry::new(0.0, seq, target));
    while let Some(MinEntry { cost, item: c, .. }) = heap.pop() {
        if cost > dist[idx(c)] {
            continue;
        }
        *ops += 1;
        if let Some(o) = owner[idx(c)] {
            let mut path = vec![c];
            let mut cur = c;
            while let Some(p) = parent[idx(cur)] {
                path.push(p);
                cur = p;
            }
            return Some((path, o));
        }
        for &(dc, dr) in &NEIGHBORS_8 {
            let Some(n) = c.offset(dc, dr) else { continue };
            if !reach.get(n) {
                continue;
            }
            let step = if dc != 0 && dr != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
            let nd = cost + step;
            if nd < dist[idx(n)] {
                dist[idx(n)] = nd;
                parent[idx(n)] = Some(c);
                seq += 1;
                heap.push(MinEntry::new(nd, seq, n));
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Intersection,
    DeadEnd,
    FrontierEnd(GoalId),
    Ring,
    Lone,
}

impl Role {
    fn rank(self) -> u8 {
        match self {
            Role::Intersection => 0,
            Role::DeadEnd => 1,
            Role::FrontierEnd(_) => 2,
            Role::Ring | Role::Lone => 3,
        }
    }
}

struct Piece {
    s0: f64,
    s1: f64,
    class: AreaClass,
    rev: bool,
    goal: Option<GoalId>,
}

impl Piece {
    fn new(s0: f64, s1: f64, class: AreaClass, rev: bool) -> Self {
        Self {
            s0,
            s1,
            class,
            rev,
            goal: None,
        }
    }

    fn local(&self, s: f64) -> f64 {
        if self.rev {
            self.s1 - s
        } else {
            s - self.s0
        }
    }
}

#[derive(Default)]
struct Builder {
    areas: Vec<SemanticArea>,
    links: Vec<AreaLink>,
    sources: Vec<(CellIndex, AreaId)>,
}

impl Builder {
    fn add(&mut self, class: AreaClass, poly: Vec<Point2>, goal: Option<GoalId>) -> AreaId {
        let id = self.areas.len();
        let mut a = SemanticArea::new(id, class, polyline::dedup(poly));
        a.goal = goal;
        self.areas.push(a);
        id
    }

    fn link(&mut self, a: AreaId, pa: f64, b: AreaId, pb: f64) {
        let port = polyline::point_at(&self.areas[a].skeleton_segment, pa);
        self.links.push(AreaLink {
            a,
            b,
            port,
            param_a: pa,
            param_b: pb,
        });
    }

    fn source(&mut self, cells: impl IntoIterator<Item = CellIndex>, area: AreaId) {
        self.sources.extend(cells.into_iter().map(|c| (c, area)));
    }
}

/// Full segmentation with explicit parameters.
pub fn segment_with(
    explored: &OccupancyGrid,
    robot_cell: CellIndex,
    cfg: &SegmentConfig,
) -> Result<SemanticTopometricMap, SegmentError> {
    cfg.validate()?;
    if explored.count(CellState::Free) == 0 {
        return Err(SegmentError::EmptyFreeSpace);
    }
    if !explored.is_free(robot_cell) {
        return Err(SegmentError::RobotNotFree(robot_cell));
    }
    let (w, h) = (explored.width(), explored.height());
    let idx = |c: CellIndex| c.row * w + c.col;
    let mut stats = SegmentStats::default();
    let mut ops: u64 = 0;

    let reach = reachable_free(explored, robot_cell);
    stats.reachable_cells = reach.count();
    ops += stats.reachable_cells as u64;

    let (skel, passes) = skeletonize(&reach);
    stats.thinning_passes = passes;
    stats.skeleton_pixels = skel.count();
    ops += (passes * stats.reachable_cells) as u64;

    let mut graph = SkeletonGraph::extract(&skel);
    let clearance = clearance_field(&reach);
    ops += 2 * (w * h) as u64;
    graph.prune_spurs(
        |n| {
            n.pixels
                .iter()
                .map(|c| clearance[idx(*c)])
                .fold(0.0, f64::max)
        },
        cfg.spur_factor,
        cfg.spur_min_cells,
    );
    contract_passing(&mut graph, &BTreeMap::new());

    // Frontier clusters reachable from the robot.
    let fcells: Vec<CellIndex> = reach.cells().filter(|&c| is_frontier_cell(explored, c)).collect();
    stats.frontier_cells = fcells.len();
    let mut clusters = cluster_cells(w, h, &fcells);
    if clusters.iter().any(|c| c.len() >= cfg.min_frontier_cluster) {
        clusters.retain(|c| c.len() >= cfg.min_frontier_cluster);
    }
    let targets: Vec<CellIndex> = clusters.iter().map(|c| nearest_to_centroid(c)).collect();

    // Attach every target to the skeleton.
    let mut owner: Vec<Option<Owner>> = vec![None; w * h];
    for n in graph.alive_nodes() {
        for &p in &graph.nodes[n].pixels {
            owner[idx(p)] = Some(Owner::Node(n));
        }
    }
    for b in graph.alive_branches() {
        for &p in &graph.branches[b].pixels {
            owner[idx(p)] = Some(Owner::Branch(b));
        }
    }
    let mut stubs: Vec<Vec<CellIndex>> = Vec::with_capacity(targets.len());
    let mut node_stubs: BTreeMap<NodeId, Vec<GoalId>> = BTreeMap::new();
    let mut branch_requests: BTreeMap<BranchId, Vec<(usize, GoalId)>> = BTreeMap::new();
    for (g, &t) in targets.iter().enumerate() {
        let (path, o) = attach_stub(&reach, &owner, t, &mut ops)
            .expect("the skeleton spans the reachable region");
        match o {
            Owner::Node(n) => node_stubs.entry(n).or_default().push(g),
            Owner::Branch(b) => {
                let v = nearest_vertex(&graph.branches[b].points, path[0]);
                branch_requests.entry(b).or_default().push((v, g));
            }
        }
        stubs.push(path);
    }
    for (b, mut reqs) in branch_requests {
        reqs.sort_unstable();
        let mut verts: Vec<usize> = reqs.iter().map(|r| r.0).collect();
        verts.dedup();
        let nodes = graph.split(b, &verts);
        for (v, g) in reqs {
            let k = verts.binary_search(&v).expect("vertex was requested");
            node_stubs.entry(nodes[k]).or_default().push(g);
        }
    }
    contract_passing(&mut graph, &node_stubs);

    let to_world = |p: (f64, f64)| explored.grid_to_world(p.0, p.1);
    let stub_world = |g: GoalId| -> Vec<Point2> {
        stubs[g][1..].iter().map(|&c| explored.cell_to_world(c)).collect()
    };

    // Node roles and node-owned areas.
    let mut b = Builder::default();
    let mut role: BTreeMap<NodeId, Role> = BTreeMap::new();
    let mut node_area: BTreeMap<NodeId, AreaId> = BTreeMap::new();
    let mut goal_area: Vec<Option<AreaId>> = vec![None; targets.len()];
    let no_stubs = Vec::new();
    for n in graph.alive_nodes().collect::<Vec<_>>() {
        let deg = graph.degree(n);
        let ks = node_stubs.get(&n).unwrap_or(&no_stubs);
        let pos = to_world(graph.nodes[n].pos);
        let pixels = graph.nodes[n].pixels.clone();
        let r = match (deg, ks.len()) {
            (d, k) if d + k >= 3 => {
                let ia = b.add(AreaClass::Intersection, vec![pos], None);
                b.source(pixels, ia);
                for &g in ks {
                    let mut poly = vec![pos];
                    poly.extend(stub_world(g));
                    let fp = b.add(AreaClass::FrontierPathway, poly, Some(g));
                    b.link(ia, 0.0, fp, 0.0);
                    b.source(stubs[g][1..].iter().copied(), fp);
                    goal_area[g] = Some(fp);
                }
                node_area.insert(n, ia);
                Role::Intersection
            }
            (1, 0) => Role::DeadEnd,
            (1, 1) => Role::FrontierEnd(ks[0]),
            (0, 0) => {
                let de = b.add(AreaClass::DeadEnd, vec![pos], None);
                b.source(pixels, de);
                Role::Lone
            }
            (0, k) => {
                let mut first = None;
                for &g in &ks[..k] {
                    let mut poly = vec![pos];
                    poly.extend(stub_world(g));
                    let fp = b.add(AreaClass::FrontierPathway, poly, Some(g));
                    b.source(stubs[g][1..].iter().copied(), fp);
                    goal_area[g] = Some(fp);
                    match first {
                        None => {
                            b.source(pixels.iter().copied(), fp);
                            first = Some(fp);
                        }
                        Some(f) => b.link(f, 0.0, fp, 0.0),
                    }
                }
                Role::Lone
            }
            _ => Role::Ring,
        };
        role.insert(n, r);
    }

    // Branch areas.
    let mut ii_lengths = Vec::new();
    for br in graph.alive_branches().collect::<Vec<_>>() {
        let (na, nb) = (graph.branches[br].a, graph.branches[br].b);
        let mut pb: Vec<Point2> = graph.polyline(br).into_iter().map(to_world).collect();
        let mut pixels_a = graph.nodes[na].pixels.clone();
        let mut pixels_b = graph.nodes[nb].pixels.clone();
        let branch_pixels = graph.branches[br].pixels.clone();

        if na == nb {
            let l = polyline::length(&pb);
            if role[&na] == Role::Intersection {
                let ia = node_area[&na];
                let p1 = b.add(AreaClass::Pathway, polyline::slice(&pb, 0.0, l / 2.0), None);
                let p2 = b.add(AreaClass::Pathway, polyline::slice(&pb, l / 2.0, l), None);
                b.link(ia, 0.0, p1, 0.0);
                b.link(p1, l / 2.0, p2, 0.0);
                b.link(p2, l / 2.0, ia, 0.0);
                ii_lengths.push(l);
                for c in branch_pixels {
                    let s = polyline::project(&pb, explored.cell_to_world(c)).0;
                    b.source([c], if s <= l / 2.0 { p1 } else { p2 });
                }
            } else {
                let t = l / 3.0;
                let ids: Vec<AreaId> = (0..3)
                    .map(|k| {
                        b.add(
                            AreaClass::Pathway,
                            polyline::slice(&pb, k as f64 * t, (k + 1) as f64 * t),
                            None,
                        )
                    })
                    .collect();
                b.link(ids[0], t, ids[1], 0.0);
                b.link(ids[1], t, ids[2], 0.0);
                b.link(ids[2], t, ids[0], 0.0);
                b.source(pixels_a, ids[0]);
                for c in branch_pixels {
                    let s = polyline::project(&pb, explored.cell_to_world(c)).0;
                    b.source([c], ids[((s / t) as usize).min(2)]);
                }
            }
            continue;
        }

        let (mut ra, mut rb) = (role[&na], role[&nb]);
        let (mut ida, mut idb) = (na, nb);
        if ra.rank() > rb.rank() {
            pb.reverse();
            std::mem::swap(&mut ra, &mut rb);
            std::mem::swap(&mut pixels_a, &mut pixels_b);
            std::mem::swap(&mut ida, &mut idb);
        }
        let lb = polyline::length(&pb);
        let mut p = Vec::new();
        let mut la = 0.0;
        if let Role::FrontierEnd(g) = ra {
            let mut s = stub_world(g);
            s.reverse();
            p.extend(s);
            p.push(to_world(graph.nodes[ida].pos));
            la = polyline::length(&p);
        }
        polyline::extend(&mut p, &pb);
        if let Role::FrontierEnd(g) = rb {
            polyline::extend(&mut p, &stub_world(g));
        }
        let l = polyline::length(&p);
        let dead = |cap: f64| cfg.dead_end_len.min(cap);
        use AreaClass::*;
        let pieces: Vec<Piece> = match (ra, rb) {
            (Role::Intersection, Role::Intersection) => {
                ii_lengths.push(l);
                vec![Piece::new(0.0, l, Pathway, false)]
            }
            (Role::Intersection, Role::DeadEnd) => {
                let dl = dead(l / 2.0);
                vec![Piece::new(0.0, l - dl, Pathway, false), Piece::new(l - dl, l, DeadEnd, false)]
            }
            (Role::DeadEnd, Role::DeadEnd) => {
                let dl = dead(l / 3.0);
                vec![
                    Piece::new(0.0, dl, DeadEnd, true),
                    Piece::new(dl, l - dl, Pathway, false),
                    Piece::new(l - dl, l, DeadEnd, false),
                ]
            }
            (Role::Intersection, Role::FrontierEnd(g)) => {
                let mut fp = Piece::new(0.0, l, FrontierPathway, false);
                fp.goal = Some(g);
                vec![fp]
            }
            (Role::DeadEnd, Role::FrontierEnd(g)) => {
                let dl = dead(lb / 2.0);
                let mut fp = Piece::new(dl, l, FrontierPathway, false);
                fp.goal = Some(g);
                vec![Piece::new(0.0, dl, DeadEnd, true), fp]
            }
            (Role::FrontierEnd(ga), Role::FrontierEnd(gb)) => {
                let m = la + lb / 2.0;
                let mut f1 = Piece::new(0.0, m, FrontierPathway, true);
                f1.goal = Some(ga);
                let mut f2 = Piece::new(m, l, FrontierPathway, false);
                f2.goal = Some(gb);
                vec![f1, f2]
            }
            other => unreachable!("branch between roles {other:?}"),
        };
        let ids: Vec<AreaId> = pieces
            .iter()
            .map(|pc| {
                let poly = if pc.rev {
                    polyline::slice(&p, pc.s1, pc.s0)
                } else {
                    polyline::slice(&p, pc.s0, pc.s1)
                };
                b.add(pc.class, poly, pc.goal)
            })
            .collect();
        for k in 1..pieces.len() {
            let s = pieces[k - 1].s1;
            b.link(ids[k - 1], pieces[k - 1].local(s), ids[k], pieces[k].local(s));
        }
        if ra == Role::Intersection {
            b.link(node_area[&ida], 0.0, ids[0], pieces[0].local(0.0));
        }
        if rb == Role::Intersection {
            let last = pieces.len() - 1;
            b.link(ids[last], pieces[last].local(l), node_area[&idb], 0.0);
        }
        for (k, pc) in pieces.iter().enumerate() {
            if let Some(g) = pc.goal {
                goal_area[g] = Some(ids[k]);
                b.source(stubs[g][1..].iter().copied(), ids[k]);
            }
        }
        if ra != Role::Intersection {
            b.source(pixels_a, ids[0]);
        }
        if rb != Role::Intersection {
            b.source(pixels_b, ids[pieces.len() - 1]);
        }
        for c in branch_pixels {
            let s = polyline::project(&p, explored.cell_to_world(c)).0;
            let k = pieces.iter().position(|pc| s <= pc.s1).unwrap_or(pieces.len() - 1);
            b.source([c], ids[k]);
        }
    }

    let Builder {
        mut areas,
        links,
        sources,
    } = b;

    // Intersection counters.
    let mut adjacency = vec![Vec::new(); areas.len()];
    for (k, l) in links.iter().enumerate() {
        adjacency[l.a].push(k);
        adjacency[l.b].push(k);
    }
    for a in 0..areas.len() {
        if areas[a].class != AreaClass::Intersection {
            continue;
        }
        let mut nb: Vec<AreaId> = adjacency[a].iter().map(|&k| links[k].from_side(a).0).collect();
        nb.sort_unstable();
        nb.dedup();
        areas[a].openings = nb.len();
        areas[a].connected_frontier_pathways = nb
            .iter()
            .filter(|&&n| areas[n].class == AreaClass::FrontierPathway)
            .count();
    }

    // Cell labels: multi-source BFS through the reachable region.
    let mut labels: Vec<Option<AreaId>> = vec![None; w * h];
    let mut sources = sources;
    sources.sort_by_key(|(c, _)| (c.row, c.col));
    let mut queue = VecDeque::new();
    for (c, a) in sources {
        if labels[idx(c)].is_none() && reach.get(c) {
            labels[idx(c)] = Some(a);
            queue.push_back(c);
        }
    }
    while let Some(c) = queue.pop_front() {
        ops += 1;
        let a = labels[idx(c)];
        for &(dc, dr) in &NEIGHBORS_8 {
            if let Some(n) = c.offset(dc, dr) {
                if reach.get(n) && labels[idx(n)].is_none() {
                    labels[idx(n)] = a;
                    queue.push_back(n);
                }
            }
        }
    }
    for (i, l) in labels.iter().enumerate() {
        if let Some(a) = l {
            areas[*a].cells.push(explored.cell_at(i));
        }
    }

    // Goals with their semantic context.
    let mut goals = Vec::with_capacity(targets.len());
    for (g, cluster) in clusters.into_iter().enumerate() {
        let area = goal_area[g].expect("every goal owns a frontier pathway");
        let seg = &areas[area].skeleton_segment;
        let theta = if seg.len() >= 2 {
            let (p0, p1) = (seg[seg.len() - 2], seg[seg.len() - 1]);
            (p1.y - p0.y).atan2(p1.x - p0.x)
        } else {
            0.0
        };
        let tp = explored.cell_to_world(targets[g]);
        let (pl, ni) = nearest_intersection(&areas, &links, &adjacency, area);
        let (o, pu) = ni.map_or((0, 0), |i| (areas[i].openings, areas[i].connected_frontier_pathways));
        goals.push(FrontierGoal {
            id: g,
            target: WorldPose::new(tp.x, tp.y, theta),
            target_cell: targets[g],
            frontier_cells: cluster,
            area,
            path_to_nearest_intersection_len: if ni.is_some() { pl } else { 0.0 },
            nearest_intersection: ni,
            openings: o,
            connected_frontier_pathways: pu,
        });
    }

    let l_path = if ii_lengths.is_empty() {
        1.0
    } else {
        ii_lengths.iter().sum::<f64>() / ii_lengths.len() as f64
    };
    stats.cell_ops = ops;
    let frontier_paths = areas
        .iter()
        .filter(|a| a.class == AreaClass::FrontierPathway)
        .map(|a| a.id)
        .collect();
    Ok(SemanticTopometricMap {
        areas,
        links,
        goals,
        frontier_paths,
        avg_intersection_path_len: l_path,
        skeleton: graph,
        stats,
        adjacency,
        labels: Some(LabelGrid {
            width: w,
            height: h,
            resolution: explored.resolution(),
            origin: explored.origin(),
            labels,
        }),
    })
}

/// Contracts degree-2 nodes joining two distinct branches and carrying no stubs.
fn contract_passing(graph: &mut SkeletonGraph, stubs: &BTreeMap<NodeId, Vec<GoalId>>) {
    loop {
        let next = graph.alive_nodes().find(|&n| {
            let inc = graph.incident(n);
            inc.len() == 2 && inc[0] != inc[1] && !stubs.contains_key(&n)
        });
        match next {
            Some(n) => {
                graph.contract(n);
            }
            None => break,
        }
    }
}

fn nearest_to_centroid(cells: &[CellIndex]) -> CellIndex {
    let n = cells.len() as f64;
    let cx = cells.iter().map(|c| c.col as f64).sum::<f64>() / n;
    let cy = cells.iter().map(|c| c.row as f64).sum::<f64>() / n;
    let mut best = cells[0];
    let mut bd = f64::INFINITY;
    for &c in cells {
        let d = (c.col as f64 - cx).powi(2) + (c.row as f64 - cy).powi(2);
        if d < bd {
            bd = d;
            best = c;
        }
    }
    best
}

fn nearest_vertex(points: &[(f64, f64)], c: CellIndex) -> usize {
    let p = (c.col as f64 + 0.5, c.row as f64 + 0.5);
    let mut best = 0;
    let mut bd = f64::INFINITY;
    for (i, q) in points.iter().enumerate() {
        let d = (q.0 - p.0).hypot(q.1 - p.1);
        if d < bd {
            bd = d;
            best = i;
        }
    }
    best
}

/// Skeleton distance from a frontier pathway's target to the closest
/// intersection, moving along area segments between link ports.
fn nearest_intersection(
    areas: &[SemanticArea],
    links: &[AreaLink],
    adjacency: &[Vec<usize>],
    start: AreaId,
) -> (f64, Option<AreaId>) {
    let mut best: BTreeMap<(AreaId, usize), f64> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(MinEntry::new(0.0, seq, (start, areas[start].length(), usize::MAX)));
    while let Some(MinEntry {
        cost,
        item: (a, param, via),
        ..
    }) = heap.pop()
    {
        if areas[a].class == AreaClass::Intersection {
            return (cost, Some(a));
        }
        if via != usize::MAX && best.get(&(a, via)).is_some_and(|&c| c < cost) {
            continue;
        }
        for &k in &adjacency[a] {
            let (n, pa, pn) = links[k].from_side(a);
            let nc = cost + (param - pa).abs();
            if best.get(&(n, k)).is_none_or(|&c| nc < c) {
                best.insert((n, k), nc);
                seq += 1;
                heap.push(MinEntry::new(nc, seq, (n, pn, k)));
            }
        }
    }
    (0.0, None)
}
