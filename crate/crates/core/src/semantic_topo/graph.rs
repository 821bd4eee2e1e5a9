//! Skeleton graph: junction clusters, endpoints and the branches between them.
//!
//! Coordinates are in cell units with cell centers at `i + 0.5`.

use std::collections::HashSet;

use super::skeleton::{m_neighbors, BinaryGrid};
use crate::world::CellIndex;

pub type NodeId = usize;
pub type BranchId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    /// Cluster of skeleton pixels with three or more m-neighbors.
    Junction,
    /// Pixel with exactly one m-neighbor.
    Endpoint,
    /// Pixel with no m-neighbor.
    Isolated,
    /// Arbitrary anchor on a skeleton cycle without junctions.
    Loop,
    /// Split point where a frontier stub meets a branch interior.
    Attach,
}

#[derive(Debug, Clone)]
pub struct SkelNode {
    pub kind: NodeKind,
    pub pixels: Vec<CellIndex>,
    pub pos: (f64, f64),
    pub alive: bool,
}

#[derive(Debug, Clone)]
pub struct SkelBranch {
    pub a: NodeId,
    pub b: NodeId,
    /// Interior vertices from `a` to `b`.
    pub points: Vec<(f64, f64)>,
    /// Skeleton pixels owned by the branch.
    pub pixels: Vec<CellIndex>,
    pub alive: bool,
}

impl SkelBranch {
    fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Self {
            a: self.b,
            b: self.a,
            points,
            pixels: self.pixels.clone(),
            alive: self.alive,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SkeletonGraph {
    pub nodes: Vec<SkelNode>,
    pub branches: Vec<SkelBranch>,
}

fn center(c: CellIndex) -> (f64, f64) {
    (c.col as f64 + 0.5, c.row as f64 + 0.5)
}

fn dist(p: (f64, f64), q: (f64, f64)) -> f64 {
    (p.0 - q.0).hypot(p.1 - q.1)
}

impl SkeletonGraph {
    /// Traces the graph of a thinned skeleton under m-adjacency.
    pub fn extract(skel: &BinaryGrid) -> Self {
        let w = skel.width();
        let idx = |c: CellIndex| c.row * w + c.col;
        let n_cells = w * skel.height();
        let mut nbrs: Vec<Vec<CellIndex>> = vec![Vec::new(); n_cells];
        let pixels: Vec<CellIndex> = skel.cells().collect();
        for &p in &pixels {
            nbrs[idx(p)] = m_neighbors(skel, p);
        }

        let mut g = SkeletonGraph::default();
        let mut node_of: Vec<Option<NodeId>> = vec![None; n_cells];

        let junction_mask =
            BinaryGrid::from_fn(w, skel.height(), |c| skel.get(c) && nbrs[idx(c)].len() >= 3);
        for comp in junction_mask.components8() {
            let id = g.push_node(NodeKind::Junction, comp);
            for &p in &g.nodes[id].pixels.clone() {
                node_of[idx(p)] = Some(id);
            }
        }
        for &p in &pixels {
            let kind = match nbrs[idx(p)].len() {
                0 => NodeKind::Isolated,
                1 => NodeKind::Endpoint,
                _ => continue,
            };
            let id = g.push_node(kind, vec![p]);
            node_of[idx(p)] = Some(id);
        }

        let mut used: HashSet<(usize, usize)> = HashSet::new();
        let mut on_chain = vec![false; n_cells];
        let mut trace = |g: &mut SkeletonGraph,
                         node_of: &Vec<Option<NodeId>>,
                         on_chain: &mut Vec<bool>,
                         from: NodeId,
                         p: CellIndex,
                         q: CellIndex| {
            if !used.insert((idx(p), idx(q))) {
                return;
            }
            let (mut prev, mut cur) = (p, q);
            let mut chain = Vec::new();
            loop {
                if let Some(m) = node_of[idx(cur)] {
                    used.insert((idx(cur), idx(prev)));
                    let points = chain.iter().map(|&c| center(c)).collect();
                    g.branches.push(SkelBranch {
                        a: from,
                        b: m,
                        points,
                        pixels: chain,
                        alive: true,
                    });
                    return;
                }
                on_chain[idx(cur)] = true;
                chain.push(cur);
                let next = nbrs[idx(cur)].iter().copied().find(|&x| x != prev);
                match next {
                    Some(n) => {
                        prev = cur;
                        cur = n;
                    }
                    None => {
                        // Degenerate chain end; close it with an endpoint.
                        let last = chain.pop().expect("chain non-empty");
                        on_chain[idx(last)] = false;
                        let id = g.push_node(NodeKind::Endpoint, vec![last]);
                        let points = chain.iter().map(|&c| center(c)).collect();
                        g.branches.push(SkelBranch {
                            a: from,
                            b: id,
                            points,
                            pixels: chain,
                            alive: true,
                        });
                        return;
                    }
                }
            }
        };

        for n in 0..g.nodes.len() {
            for p in g.nodes[n].pixels.clone() {
                for q in nbrs[idx(p)].clone() {
                    if node_of[idx(q)] == Some(n) {
                        continue;
                    }
                    trace(&mut g, &node_of, &mut on_chain, n, p, q);
                }
            }
        }

        // Cycles made only of degree-2 pixels.
        for &p in &pixels {
            if node_of[idx(p)].is_some() || on_chain[idx(p)] {
                continue;
            }
            let id = g.push_node(NodeKind::Loop, vec![p]);
            node_of[idx(p)] = Some(id);
            let first = nbrs[idx(p)][0];
            trace(&mut g, &node_of, &mut on_chain, id, p, first);
        }

        // Tiny self-loops at junction clusters are thinning artifacts.
        for b in &mut g.branches {
            if b.a == b.b && g.nodes[b.a].kind == NodeKind::Junction && b.pixels.len() <= 2 {
                b.alive = false;
            }
        }
        g
    }

    fn push_node(&mut self, kind: NodeKind, pixels: Vec<CellIndex>) -> NodeId {
        let n = pixels.len() as f64;
        let pos = (
            pixels.iter().map(|c| c.col as f64 + 0.5).sum::<f64>() / n,
            pixels.iter().map(|c| c.row as f64 + 0.5).sum::<f64>() / n,
        );
        self.nodes.push(SkelNode {
            kind,
            pixels,
            pos,
            alive: true,
        });
        self.nodes.len() - 1
    }

    pub fn add_node(&mut self, kind: NodeKind, pixels: Vec<CellIndex>, pos: (f64, f64)) -> NodeId {
        self.nodes.push(SkelNode {
            kind,
            pixels,
            pos,
            alive: true,
        });
        self.nodes.len() - 1
    }

    pub fn add_branch(&mut self, branch: SkelBranch) -> BranchId {
        self.branches.push(branch);
        self.branches.len() - 1
    }

    pub fn alive_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&n| self.nodes[n].alive)
    }

    pub fn alive_branches(&self) -> impl Iterator<Item = BranchId> + '_ {
        (0..self.branches.len()).filter(|&b| self.branches[b].alive)
    }

    /// Alive branches touching `n`; a self-loop appears twice.
    pub fn incident(&self, n: NodeId) -> Vec<BranchId> {
        let mut out = Vec::new();
        for b in self.alive_branches() {
            let br = &self.branches[b];
            if br.a == n {
                out.push(b);
            }
            if br.b == n {
                out.push(b);
            }
        }
        out
    }

    pub fn degree(&self, n: NodeId) -> usize {
        self.incident(n).len()
    }

    /// Vertices from node `a` through the interior to node `b`.
    pub fn polyline(&self, b: BranchId) -> Vec<(f64, f64)> {
        let br = &self.branches[b];
        let mut out = Vec::with_capacity(br.points.len() + 2);
        out.push(self.nodes[br.a].pos);
        out.extend_from_slice(&br.points);
        out.push(self.nodes[br.b].pos);
        out
    }

    /// Branch length in cells.
    pub fn length(&self, b: BranchId) -> f64 {
        self.polyline(b).windows(2).map(|w| dist(w[0], w[1])).sum()
    }

    /// Merges the two branches meeting at a degree-2 node that is not a
    /// self-loop. Returns false when `n` does not qualify.
    pub fn contract(&mut self, n: NodeId) -> bool {
        let inc = self.incident(n);
        if inc.len() != 2 || inc[0] == inc[1] {
            return false;
        }
        let b1 = if self.branches[inc[0]].b == n {
            self.branches[inc[0]].clone()
        } else {
            self.branches[inc[0]].reversed()
        };
        let b2 = if self.branches[inc[1]].a == n {
            self.branches[inc[1]].clone()
        } else {
            self.branches[inc[1]].reversed()
        };
        let node = &self.nodes[n];
        let mut points = b1.points;
        points.push(node.pos);
        points.extend(b2.points);
        let mut pixels = b1.pixels;
        pixels.extend(node.pixels.iter().copied());
        pixels.extend(b2.pixels);
        self.branches[inc[0]].alive = false;
        self.branches[inc[1]].alive = false;
        self.nodes[n].alive = false;
        self.branches.push(SkelBranch {
            a: b1.a,
            b: b2.b,
            points,
            pixels,
            alive: true,
        });
        true
    }

    /// Contracts every degree-2 node whose kind is not `Loop` and which
    /// joins two distinct branches.
    pub fn contract_all(&mut self) {
        loop {
            let next = self.alive_nodes().find(|&n| {
                let inc = self.incident(n);
                inc.len() == 2 && inc[0] != inc[1]
            });
            match next {
                Some(n) => {
                    self.contract(n);
                }
                None => break,
            }
        }
    }

    /// Iteratively removes short endpoint-to-junction branches. A spur is
    /// removed when its length is below `factor·clearance(junction) + min_cells`.
    pub fn prune_spurs(&mut self, clearance: impl Fn(&SkelNode) -> f64, factor: f64, min_cells: f64) {
        loop {
            let mut best: Option<(f64, BranchId, NodeId, NodeId)> = None;
            for b in self.alive_branches() {
                let br = &self.branches[b];
                if br.a == br.b {
                    continue;
                }
                for (end, other) in [(br.a, br.b), (br.b, br.a)] {
                    if self.nodes[end].kind != NodeKind::Endpoint || self.degree(end) != 1 {
                        continue;
                    }
                    if self.degree(other) < 3 {
                        continue;
                    }
                    let len = self.length(b);
                    if len < factor * clearance(&self.nodes[other]) + min_cells
                        && best.is_none_or(|(l, id, _, _)| (len, b) < (l, id))
                    {
                        best = Some((len, b, end, other));
                    }
                }
            }
            let Some((_, b, end, junction)) = best else {
                break;
            };
            self.branches[b].alive = false;
            self.nodes[end].alive = false;
            match self.degree(junction) {
                2 => {
                    self.contract(junction);
                }
                1 => self.nodes[junction].kind = NodeKind::Endpoint,
                _ => {}
            }
        }
    }

    /// Splits branch `b` at its interior vertices `at` (ascending, distinct),
    /// creating one `Attach` node per vertex. Returns the new node ids.
    pub fn split(&mut self, b: BranchId, at: &[usize]) -> Vec<NodeId> {
        let br = self.branches[b].clone();
        let owner_of_pixel = |c: CellIndex| -> usize {
            let p = center(c);
            br.points
                .iter()
                .enumerate()
                .min_by(|x, y| dist(*x.1, p).total_cmp(&dist(*y.1, p)).then(x.0.cmp(&y.0)))
                .map(|(i, _)| i)
                .unwrap_or(0)
        };
        let mut new_nodes = Vec::with_capacity(at.len());
        let mut split_pixels: Vec<Vec<CellIndex>> = vec![Vec::new(); at.len()];
        let mut piece_pixels: Vec<Vec<CellIndex>> = vec![Vec::new(); at.len() + 1];
        for &c in &br.pixels {
            let v = owner_of_pixel(c);
            if let Ok(k) = at.binary_search(&v) {
                if center(c) == br.points[v] {
                    split_pixels[k].push(c);
                    continue;
                }
            }
            let piece = at.partition_point(|&s| s < v);
            piece_pixels[piece].push(c);
        }
        for (k, &v) in at.iter().enumerate() {
            let id = self.add_node(NodeKind::Attach, std::mem::take(&mut split_pixels[k]), br.points[v]);
            new_nodes.push(id);
        }
        self.branches[b].alive = false;
        let mut prev_node = br.a;
        let mut prev_v: isize = -1;
        for k in 0..=at.len() {
            let (end_node, end_v) = if k < at.len() {
                (new_nodes[k], at[k] as isize)
            } else {
                (br.b, br.points.len() as isize)
            };
            let points = br.points[(prev_v + 1) as usize..end_v as usize].to_vec();
            self.branches.push(SkelBranch {
                a: prev_node,
                b: end_node,
                points,
                pixels: std::mem::take(&mut piece_pixels[k]),
                alive: true,
            });
            prev_node = end_node;
            prev_v = end_v;
        }
        new_nodes
    }
}

/// A junction cluster reported by [`classify_junctions`].
#[derive(Debug, Clone, PartialEq)]
pub struct Junction {
    pub pixels: Vec<CellIndex>,
    /// Centroid in cell units.
    pub centroid: (f64, f64),
    /// Number of distinct skeleton branches leaving the cluster.
    pub degree: usize,
}

/// Junction clusters of a thinned skeleton with their branch counts.
pub fn classify_junctions(skeleton: &BinaryGrid) -> Vec<Junction> {
    let g = SkeletonGraph::extract(skeleton);
    g.alive_nodes()
        .filter(|&n| g.nodes[n].kind == NodeKind::Junction)
        .map(|n| Junction {
            pixels: g.nodes[n].pixels.clone(),
            centroid: g.nodes[n].pos,
            degree: g.degree(n),
        })
        .filter(|j| j.degree >= 3)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plus(arm: usize) -> BinaryGrid {
        let n = 2 * arm + 3;
        let c = arm + 1;
        BinaryGrid::from_fn(n, n, |p| {
            (p.row == c && (1..n - 1).contains(&p.col)) || (p.col == c && (1..n - 1).contains(&p.row))
        })
    }

    // Brute-force count of skeleton pixels with 3+ 8-neighbors.
    fn brute_junction_pixels(s: &BinaryGrid) -> Vec<CellIndex> {
        s.cells()
            .filter(|c| {
                let mut n = 0;
                for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        if (dc, dr) != (0, 0) && s.at(c.col as i64 + dc, c.row as i64 + dr) {
                            n += 1;
                        }
                    }
                }
                n >= 3
            })
            .collect()
    }

    #[test]
    fn plus_junction_has_degree_four() {
        let s = plus(5);
        let j = classify_junctions(&s);
        assert_eq!(j.len(), 1);
        assert_eq!(j[0].degree, 4);
        assert_eq!(j[0].pixels, vec![CellIndex::new(6, 6)]);
        // Oracle: the 8-neighbor junction blob splits the rest into 4 branches.
        let blob = brute_junction_pixels(&s);
        assert!(blob.contains(&CellIndex::new(6, 6)));
        let mut rest = s.clone();
        for c in blob {
            rest.set(c, false);
        }
        assert_eq!(rest.components8().len(), 4);
    }

    #[test]
    fn t_junction_has_degree_three() {
        let s = BinaryGrid::from_rows(&[
            "...........",
            ".XXXXXXXXX.",
            ".....X.....",
            ".....X.....",
            ".....X.....",
            ".....X.....",
            "...........",
        ]);
        let j = classify_junctions(&s);
        assert_eq!(j.len(), 1);
        assert_eq!(j[0].degree, 3);
    }

    #[test]
    fn straight_line_has_no_junction() {
        let s = BinaryGrid::from_rows(&[".......", ".XXXXX.", "......."]);
        assert!(classify_junctions(&s).is_empty());
        let g = SkeletonGraph::extract(&s);
        assert_eq!(g.alive_branches().count(), 1);
        assert_eq!(g.length(0), 4.0);
    }

    #[test]
    fn ring_gets_a_loop_node() {
        let s = BinaryGrid::from_rows(&[".....", ".XXX.", ".X.X.", ".XXX.", "....."]);
        let g = SkeletonGraph::extract(&s);
        assert_eq!(g.alive_nodes().count(), 1);
        assert_eq!(g.nodes[0].kind, NodeKind::Loop);
        let b: Vec<_> = g.alive_branches().collect();
        assert_eq!(b.len(), 1);
        assert_eq!(g.branches[b[0]].a, g.branches[b[0]].b);
        assert_eq!(g.length(b[0]), 8.0);
    }

    #[test]
    fn every_pixel_is_owned_once() {
        let s = plus(4);
        let g = SkeletonGraph::extract(&s);
        let mut owned: Vec<CellIndex> = g
            .alive_nodes()
            .flat_map(|n| g.nodes[n].pixels.clone())
            .chain(g.alive_branches().flat_map(|b| g.branches[b].pixels.clone()))
            .collect();
        owned.sort_by_key(|c| (c.row, c.col));
        let all: Vec<CellIndex> = s.cells().collect();
        assert_eq!(owned, all);
    }

    #[test]
    fn short_spur_is_pruned_and_merged() {
        let s = BinaryGrid::from_rows(&[
            ".............",
            ".XXXXXXXXXXX.",
            "......X......",
            "......X......",
            ".............",
        ]);
        let mut g = SkeletonGraph::extract(&s);
        assert_eq!(classify_junctions(&s)[0].degree, 3);
        g.prune_spurs(|_| 1.0, 1.5, 2.0);
        let b: Vec<_> = g.alive_branches().collect();
        assert_eq!(b.len(), 1);
        assert_eq!(g.length(b[0]), 10.0);
        assert!(g.alive_nodes().all(|n| g.nodes[n].kind == NodeKind::Endpoint));
    }

    #[test]
    fn split_preserves_length() {
        let s = BinaryGrid::from_rows(&["...........", ".XXXXXXXXX.", "..........."]);
        let mut g = SkeletonGraph::extract(&s);
        let before = g.length(0);
        let nodes = g.split(0, &[2, 5]);
        assert_eq!(nodes.len(), 2);
        let total: f64 = g.alive_branches().map(|b| g.length(b)).sum();
        assert!((total - before).abs() < 1e-12);
        assert_eq!(g.nodes[nodes[0]].pixels.len(), 1);
    }
}
