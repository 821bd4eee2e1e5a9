//! Arc-length utilities for world-space polylines.

use crate::world::Point2;

pub fn length(pts: &[Point2]) -> f64 {
    pts.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Cumulative arc length at each vertex; first entry is 0.
pub fn cumulative(pts: &[Point2]) -> Vec<f64> {
    let mut out = Vec::with_capacity(pts.len());
    let mut acc = 0.0;
    for (i, p) in pts.iter().enumerate() {
        if i > 0 {
            acc += pts[i - 1].distance(*p);
        }
        out.push(acc);
    }
    out
}

/// Point at arc length `s`, clamped to the ends.
pub fn point_at(pts: &[Point2], s: f64) -> Point2 {
    assert!(!pts.is_empty(), "empty polyline");
    let mut acc = 0.0;
    for w in pts.windows(2) {
        let seg = w[0].distance(w[1]);
        if s <= acc + seg {
            if seg == 0.0 {
                return w[0];
            }
            return w[0].lerp(w[1], ((s - acc) / seg).clamp(0.0, 1.0));
        }
        acc += seg;
    }
    *pts.last().unwrap()
}

/// Sub-polyline between arc lengths `from` and `to`; reversed when `from > to`.
pub fn slice(pts: &[Point2], from: f64, to: f64) -> Vec<Point2> {
    if from > to {
        let mut v = slice(pts, to, from);
        v.reverse();
        return v;
    }
    let cum = cumulative(pts);
    let mut out = vec![point_at(pts, from)];
    for (i, &c) in cum.iter().enumerate() {
        if c > from && c < to {
            out.push(pts[i]);
        }
    }
    let end = point_at(pts, to);
    if to > from || out.is_empty() {
        out.push(end);
    }
    dedup(out)
}

/// Closest point on the polyline: `(arc length, distance)`.
pub fn project(pts: &[Point2], p: Point2) -> (f64, f64) {
    assert!(!pts.is_empty(), "empty polyline");
    if pts.len() == 1 {
        return (0.0, pts[0].distance(p));
    }
    let mut best = (0.0, f64::INFINITY);
    let mut acc = 0.0;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let seg2 = dx * dx + dy * dy;
        let t = if seg2 == 0.0 {
            0.0
        } else {
            (((p.x - a.x) * dx + (p.y - a.y) * dy) / seg2).clamp(0.0, 1.0)
        };
        let q = a.lerp(b, t);
        let d = q.distance(p);
        if d < best.1 {
            best = (acc + t * seg2.sqrt(), d);
        }
        acc += seg2.sqrt();
    }
    best
}

/// Drops consecutive duplicate vertices.
pub fn dedup(mut pts: Vec<Point2>) -> Vec<Point2> {
    pts.dedup_by(|a, b| a.distance(*b) < 1e-12);
    pts
}

/// Appends `tail`, skipping its first vertex when it repeats the last one.
pub fn extend(out: &mut Vec<Point2>, tail: &[Point2]) {
    for &p in tail {
        if out.last().is_some_and(|l| l.distance(p) < 1e-12) {
            continue;
        }
        out.push(p);
    }
}
