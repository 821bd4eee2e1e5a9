//! PPM snapshots: explored map, trajectory, start/end markers and, for PM
//! runs, the semantic areas colored by class.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::report::run_prefix;
use crate::explorer::Strategy;
use crate::semantic_topo::export::class_color;
use crate::semantic_topo::{segment, AreaClass, SemanticTopometricMap};
use crate::world::{parse_snapshot_pgm, CellState, OccupancyGrid, Point2, DEFAULT_RESOLUTION};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("missing run artifact {0}")]
    Missing(PathBuf),
    #[error("reading {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error("writing image: {0}")]
    Io(#[from] std::io::Error),
}

pub const TRAJECTORY: [u8; 3] = [128, 0, 128];
pub const MARKER: [u8; 3] = [220, 0, 0];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// Row-major RGB, top row first.
    pub rgb: Vec<u8>,
}

impl Image {
    fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            rgb: vec![0; width * height * 3],
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    fn put(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            let i = (y as usize * self.width + x as usize) * 3;
            self.rgb[i..i + 3].copy_from_slice(&c);
        }
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.rgb);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderInfo {
    pub width: usize,
    pub height: usize,
    /// Whether a semantic overlay was drawn.
    pub overlay: bool,
    /// Distinct area classes painted, in class order.
    pub classes: Vec<AreaClass>,
}

fn gray(state: CellState) -> [u8; 3] {
    match state {
        CellState::Free => [255, 255, 255],
        CellState::Occupied => [0, 0, 0],
        CellState::Unknown => [128, 128, 128],
    }
}

/// Draws the explored map at `scale` pixels per cell.
pub fn render_image(
    explored: &OccupancyGrid,
    trajectory: &[Point2],
    semantic: Option<&SemanticTopometricMap>,
    scale: usize,
) -> (Image, RenderInfo) {
    let scale = scale.max(1);
    let (w, h) = (explored.width(), explored.height());
    let mut img = Image::new(w * scale, h * scale);
    let mut colors: Vec<[u8; 3]> = explored.cells().iter().map(|&s| gray(s)).collect();
    let mut classes = BTreeSet::new();
    if let Some(map) = semantic {
        for a in &map.areas {
            let c = class_color(a.class);
            for &cell in &a.cells {
                colors[explored.index(cell)] = c;
            }
            if !a.cells.is_empty() {
                classes.insert(a.class);
            }
        }
    }
    for row in 0..h {
        for col in 0..w {
            let c = colors[row * w + col];
            let py = (h - 1 - row) * scale;
            for dy in 0..scale {
                for dx in 0..scale {
                    img.put((col * scale + dx) as i64, (py + dy) as i64, c);
                }
            }
        }
    }
    let res = explored.resolution();
    let o = explored.origin();
    let to_px = |p: Point2| -> (i64, i64) {
        let x = (p.x - o.x) / res * scale as f64;
        let y = (h * scale) as f64 - (p.y - o.y) / res * scale as f64;
        (x.floor() as i64, y.floor() as i64)
    };
    for pair in trajectory.windows(2) {
        line(&mut img, to_px(pair[0]), to_px(pair[1]), TRAJECTORY);
    }
    if let (Some(&first), Some(&last)) = (trajectory.first(), trajectory.last()) {
        let r = scale as i64;
        let (sx, sy) = to_px(first);
        for dy in -r..=r {
            for dx in -r..=r {
                img.put(sx + dx, sy + dy, MARKER);
            }
        }
        let (ex, ey) = to_px(last);
        for d in -2 * r..=2 * r {
            img.put(ex + d, ey, MARKER);
            img.put(ex, ey + d, MARKER);
            img.put(ex + d / 2, ey + d / 2, MARKER);
            img.put(ex + d / 2, ey - d / 2, MARKER);
        }
    }
    let info = RenderInfo {
        width: img.width,
        height: img.height,
        overlay: semantic.is_some(),
        classes: classes.into_iter().collect(),
    };
    (img, info)
}

fn line(img: &mut Image, (mut x0, mut y0): (i64, i64), (x1, y1): (i64, i64), c: [u8; 3]) {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        img.put(x0, y0, c);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, RenderError> {
    if !path.is_file() {
        return Err(RenderError::Missing(path.to_path_buf()));
    }
    Ok(fs::read(path)?)
}

fn read_trajectory(path: &Path) -> Result<Vec<Point2>, RenderError> {
    let text = String::from_utf8(read(path)?).map_err(|_| RenderError::Malformed {
        path: path.to_path_buf(),
        reason: "not UTF-8".into(),
    })?;
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let bad = || RenderError::Malformed {
                path: path.to_path_buf(),
                reason: format!("bad row '{l}'"),
            };
            if f.len() != 3 {
                return Err(bad());
            }
            Ok(Point2::new(f[1].parse().map_err(|_| bad())?, f[2].parse().map_err(|_| bad())?))
        })
        .collect()
}

/// Renders the artifacts of one attempt written under `dir/runs/`. For PM the
/// final explored map is segmented again to draw the overlay.
pub fn render_run(
    dir: &Path,
    strategy: Strategy,
    seed: u64,
    attempt: usize,
    out: &Path,
    scale: usize,
) -> Result<RenderInfo, RenderError> {
    let prefix = run_prefix(strategy, seed, attempt);
    let runs = dir.join("runs");
    let pgm_path = runs.join(format!("{prefix}_explored.pgm"));
    let explored = parse_snapshot_pgm(&read(&pgm_path)?, DEFAULT_RESOLUTION).map_err(|e| RenderError::Malformed {
        path: pgm_path.clone(),
        reason: e.to_string(),
    })?;
    let trajectory = read_trajectory(&runs.join(format!("{prefix}_trajectory.csv")))?;
    let semantic = match (strategy, trajectory.last()) {
        (Strategy::Pm, Some(&end)) => explored
            .point_to_cell(end)
            .and_then(|c| segment(&explored, c).ok()),
        _ => None,
    };
    let (img, info) = render_image(&explored, &trajectory, semantic.as_ref(), scale);
    if let Some(parent) = out.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(out, img.to_ppm())?;
    Ok(info)
}
