//! Line-oriented text export of a semantic map and class colors for overlays.

use std::fmt::Write;

use super::{AreaClass, SemanticTopometricMap};

/// RGB color used for each area class in rendered overlays.
pub fn class_color(class: AreaClass) -> [u8; 3] {
    match class {
        AreaClass::Intersection => [230, 159, 0],
        AreaClass::Pathway => [86, 180, 233],
        AreaClass::DeadEnd => [0, 158, 115],
        AreaClass::FrontierPathway => [204, 121, 167],
    }
}

/// One line per map, area, link and goal. Numbers use fixed precision so the
/// output is stable for golden comparisons.
pub fn graph_text(map: &SemanticTopometricMap) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "map areas={} links={} goals={} l_path={:.4}",
        map.areas.len(),
        map.links.len(),
        map.goals.len(),
        map.avg_intersection_path_len
    );
    for a in &map.areas {
        let goal = a.goal.map_or("-".to_string(), |g| g.to_string());
        let _ = writeln!(
            s,
            "area {} {} cells={} len={:.4} openings={} pu={} goal={}",
            a.id,
            a.class.name(),
            a.cells.len(),
            a.length(),
            a.openings,
            a.connected_frontier_pathways,
            goal
        );
    }
    for l in &map.links {
        let _ = writeln!(s, "link {} {} port={:.4},{:.4}", l.a, l.b, l.port.x, l.port.y);
    }
    for g in &map.goals {
        let ni = g.nearest_intersection.map_or("-".to_string(), |i| i.to_string());
        let _ = writeln!(
            s,
            "goal {} area={} target={:.4},{:.4} cells={} pl={:.4} intersection={}",
            g.id,
            g.area,
            g.target.x,
            g.target.y,
            g.frontier_cells.len(),
            g.path_to_nearest_intersection_len,
            ni
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantic_topo::segment;
    use crate::world::parse_ascii;

    #[test]
    fn corridor_export() {
        let g = parse_ascii("############\n#..........#\n############\n", 0.05).unwrap();
        let m = segment(&g, crate::world::CellIndex::new(2, 1)).unwrap();
        let text = graph_text(&m);
        assert!(text.starts_with("map areas=3 links=2 goals=0 l_path=1.0000\n"));
        assert_eq!(text.lines().filter(|l| l.contains("dead_end")).count(), 2);
        assert_eq!(text.lines().count(), 1 + 3 + 2);
    }

    #[test]
    fn colors_are_distinct() {
        let mut c: Vec<_> = AreaClass::ALL.iter().map(|&k| class_color(k)).collect();
        c.dedup();
        assert_eq!(c.len(), 4);
    }
}
