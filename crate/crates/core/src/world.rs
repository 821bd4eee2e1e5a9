//! Occupancy-grid data model, coordinate transforms and map file I/O.
//!
//! Cell `(0, 0)` is the bottom-left cell; its lower-left corner sits at the
//! grid origin. Rows grow with world `y`, columns with world `x`. Text and
//! image formats store rows top-to-bottom, so the first line of a file is the
//! highest row.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::Path;

use thiserror::Error;

/// Default map resolution in meters per cell.
pub const DEFAULT_RESOLUTION: f64 = 0.05;

/// Grayscale threshold for ground-truth PGM maps: darker pixels are walls.
pub const PGM_OCCUPIED_BELOW: u8 = 128;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("row {row} has {found} cells, expected {expected}")]
    InconsistentRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("unexpected character {ch:?} at line {line}, column {column}")]
    InvalidCharacter { ch: char, line: usize, column: usize },
    #[error("map is empty")]
    Empty,
    #[error("invalid grid geometry: {0}")]
    InvalidGeometry(String),
    #[error("unsupported map format for {0}")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellState {
    Free,
    Occupied,
    Unknown,
}

/// Column/row address of a grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex {
    pub col: usize,
    pub row: usize,
}

impl CellIndex {
    pub const fn new(col: usize, row: usize) -> Self {
        Self { col, row }
    }

    /// Offsets the cell, returning `None` when either coordinate would go negative.
    pub fn offset(self, dc: isize, dr: isize) -> Option<Self> {
        let col = self.col.checked_add_signed(dc)?;
        let row = self.row.checked_add_signed(dr)?;
        Some(Self { col, row })
    }

    pub fn chebyshev(self, other: Self) -> usize {
        self.col.abs_diff(other.col).max(self.row.abs_diff(other.row))
    }
}

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.col, self.row)
    }
}

/// 8-neighborhood offsets, 4-neighbors first.
pub const NEIGHBORS_8: [(isize, isize); 8] = [
    (1, 0),
    (0, 1),
    (-1, 0),
    (0, -1),
    (1, 1),
    (-1, 1),
    (-1, -1),
    (1, -1),
];

pub const NEIGHBORS_4: [(isize, isize); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Self) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn lerp(self, other: Self, t: f64) -> Self {
        Self::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut a = theta.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Planar robot pose; `theta` is kept in `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldPose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl WorldPose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// Ternary occupancy grid stored row-major, row 0 at the bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    origin: Point2,
    cells: Vec<CellState>,
}

impl OccupancyGrid {
    /// Creates a grid filled with `fill`.
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Point2,
        fill: CellState,
    ) -> Result<Self, MapError> {
        Self::from_cells(width, height, resolution, origin, vec![fill; width * height])
    }

    pub fn from_cells(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Point2,
        cells: Vec<CellState>,
    ) -> Result<Self, MapError> {
        if width == 0 || height == 0 {
            return Err(MapError::Empty);
        }
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(MapError::InvalidGeometry(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        if cells.len() != width * height {
            return Err(MapError::InvalidGeometry(format!(
                "expected {} cells, got {}",
                width * height,
                cells.len()
            )));
        }
        Ok(Self {
            width,
            height,
            resolution,
            origin,
            cells,
        })
    }

    /// An all-Unknown grid with the same geometry as `self`.
    pub fn unknown_like(&self) -> Self {
        Self {
            cells: vec![CellState::Unknown; self.cells.len()],
            ..self.clone()
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn same_geometry(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.resolution == other.resolution
            && self.origin == other.origin
    }

    #[inline]
    pub fn index(&self, cell: CellIndex) -> usize {
        cell.row * self.width + cell.col
    }

    #[inline]
    pub fn cell_at(&self, index: usize) -> CellIndex {
        CellIndex::new(index % self.width, index / self.width)
    }

    #[inline]
    pub fn contains(&self, cell: CellIndex) -> bool {
        cell.col < self.width && cell.row < self.height
    }

    #[inline]
    pub fn get(&self, cell: CellIndex) -> Option<CellState> {
        self.contains(cell).then(|| self.cells[self.index(cell)])
    }

    /// Panics when `cell` is outside the grid.
    #[inline]
    pub fn state(&self, cell: CellIndex) -> CellState {
        assert!(self.contains(cell), "cell {cell} outside grid");
        self.cells[self.index(cell)]
    }

    pub fn set(&mut self, cell: CellIndex, state: CellState) {
        assert!(self.contains(cell), "cell {cell} outside grid");
        let i = self.index(cell);
        self.cells[i] = state;
    }

    pub fn is_free(&self, cell: CellIndex) -> bool {
        self.get(cell) == Some(CellState::Free)
    }

    /// In-bounds neighbor of `cell` at the given offset.
    #[inline]
    pub fn neighbor(&self, cell: CellIndex, dc: isize, dr: isize) -> Option<CellIndex> {
        cell.offset(dc, dr).filter(|c| self.contains(*c))
    }

    pub fn neighbors8(&self, cell: CellIndex) -> impl Iterator<Item = CellIndex> + '_ {
        NEIGHBORS_8
            .iter()
            .filter_map(move |&(dc, dr)| self.neighbor(cell, dc, dr))
    }

    pub fn neighbors4(&self, cell: CellIndex) -> impl Iterator<Item = CellIndex> + '_ {
        NEIGHBORS_4
            .iter()
            .filter_map(move |&(dc, dr)| self.neighbor(cell, dc, dr))
    }

    pub fn iter_cells(&self) -> impl Iterator<Item = (CellIndex, CellState)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .map(move |(i, s)| (self.cell_at(i), *s))
    }

    /// Cell containing a world point, or `None` when it lies outside the grid.
    pub fn point_to_cell(&self, p: Point2) -> Option<CellIndex> {
        let u = ((p.x - self.origin.x) / self.resolution).floor();
        let v = ((p.y - self.origin.y) / self.resolution).floor();
        if !(u >= 0.0 && v >= 0.0) || u >= self.width as f64 || v >= self.height as f64 {
            return None;
        }
        Some(CellIndex::new(u as usize, v as usize))
    }

    pub fn world_to_cell(&self, pose: &WorldPose) -> Option<CellIndex> {
        self.point_to_cell(pose.position())
    }

    /// World coordinates of the center of `cell`.
    pub fn cell_to_world(&self, cell: CellIndex) -> Point2 {
        Point2::new(
            self.origin.x + (cell.col as f64 + 0.5) * self.resolution,
            self.origin.y + (cell.row as f64 + 0.5) * self.resolution,
        )
    }

    /// World coordinates of a fractional cell position (cell units, centers at `i + 0.5`).
    pub fn grid_to_world(&self, col: f64, row: f64) -> Point2 {
        Point2::new(
            self.origin.x + col * self.resolution,
            self.origin.y + row * self.resolution,
        )
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|&&s| s == state).count()
    }

    /// Area of Free space in square meters.
    pub fn free_area_m2(&self) -> f64 {
        self.count(CellState::Free) as f64 * self.resolution * self.resolution
    }

    /// Upsamples every cell into a `factor`×`factor` block, keeping the world extent.
    pub fn upsample(&self, factor: usize) -> Self {
        assert!(factor > 0);
        let width = self.width * factor;
        let height = self.height * factor;
        let mut cells = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                cells.push(self.state(CellIndex::new(col / factor, row / factor)));
            }
        }
        Self {
            width,
            height,
            resolution: self.resolution / factor as f64,
            origin: self.origin,
            cells,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapFormat {
    Ascii,
    Pgm,
}

impl MapFormat {
    pub fn from_path(path: &Path) -> Result<Self, MapError> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("pgm") => Ok(Self::Pgm),
            Some("txt") | Some("map") | Some("ascii") => Ok(Self::Ascii),
            _ => Err(MapError::UnknownFormat(path.display().to_string())),
        }
    }
}

/// Loads a ground-truth map. The result never contains Unknown cells.
pub fn load_ground_truth(path: &Path, format: MapFormat) -> Result<OccupancyGrid, MapError> {
    let bytes = fs::read(path)?;
    match format {
        MapFormat::Ascii => {
            let text = String::from_utf8(bytes)
                .map_err(|_| MapError::MalformedHeader("ASCII map is not UTF-8".into()))?;
            parse_ascii(&text, DEFAULT_RESOLUTION)
        }
        MapFormat::Pgm => parse_pgm_ground_truth(&bytes, DEFAULT_RESOLUTION),
    }
}

/// Parses `#`/`.` rows, top row first.
pub fn parse_ascii(text: &str, resolution: f64) -> Result<OccupancyGrid, MapError> {
    let lines: Vec<&str> = text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.is_empty())
        .collect();
    if lines.is_empty() {
        return Err(MapError::Empty);
    }
    let width = lines[0].chars().count();
    let height = lines.len();
    let mut cells = vec![CellState::Unknown; width * height];
    for (line_no, line) in lines.iter().enumerate() {
        let found = line.chars().count();
        if found != width {
            return Err(MapError::InconsistentRow {
                row: line_no,
                expected: width,
                found,
            });
        }
        let row = height - 1 - line_no;
        for (col, ch) in line.chars().enumerate() {
            cells[row * width + col] = match ch {
                '#' => CellState::Occupied,
                '.' => CellState::Free,
                _ => {
                    return Err(MapError::InvalidCharacter {
                        ch,
                        line: line_no + 1,
                        column: col + 1,
                    })
                }
            };
        }
    }
    OccupancyGrid::from_cells(width, height, resolution, Point2::default(), cells)
}

/// Serializes a ground-truth grid back to `#`/`.` text. Unknown cells become `?`.
pub fn to_ascii(grid: &OccupancyGrid) -> String {
    let mut out = String::with_capacity((grid.width() + 1) * grid.height());
    for row in (0..grid.height()).rev() {
        for col in 0..grid.width() {
            out.push(match grid.state(CellIndex::new(col, row)) {
                CellState::Free => '.',
                CellState::Occupied => '#',
                CellState::Unknown => '?',
            });
        }
        out.push('\n');
    }
    out
}

struct PgmImage<'a> {
    width: usize,
    height: usize,
    pixels: &'a [u8],
}

fn parse_pgm(bytes: &[u8]) -> Result<PgmImage<'_>, MapError> {
    let mut pos = 0usize;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(MapError::MalformedHeader("truncated PGM header".into()));
        }
        tokens.push(std::str::from_utf8(&bytes[start..pos]).unwrap_or(""));
    }
    if tokens[0] != "P5" {
        return Err(MapError::MalformedHeader(format!(
            "expected magic P5, found {:?}",
            tokens[0]
        )));
    }
    let parse = |t: &str, what: &str| {
        t.parse::<usize>()
            .map_err(|_| MapError::MalformedHeader(format!("bad {what}: {t:?}")))
    };
    let width = parse(tokens[1], "width")?;
    let height = parse(tokens[2], "height")?;
    let maxval = parse(tokens[3], "maxval")?;
    if maxval != 255 {
        return Err(MapError::MalformedHeader(format!(
            "only maxval 255 is supported, found {maxval}"
        )));
    }
    if width == 0 || height == 0 {
        return Err(MapError::Empty);
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let pixels = bytes
        .get(pos..pos + width * height)
        .ok_or_else(|| MapError::MalformedHeader("raster shorter than width*height".into()))?;
    Ok(PgmImage {
        width,
        height,
        pixels,
    })
}

/// Binary P5 ground truth: pixels below 128 are Occupied, the rest Free.
pub fn parse_pgm_ground_truth(bytes: &[u8], resolution: f64) -> Result<OccupancyGrid, MapError> {
    let img = parse_pgm(bytes)?;
    let cells = flip_rows(img.width, img.height, img.pixels, |p| {
        if p < PGM_OCCUPIED_BELOW {
            CellState::Occupied
        } else {
            CellState::Free
        }
    });
    OccupancyGrid::from_cells(img.width, img.height, resolution, Point2::default(), cells)
}

/// Reads an explored-map snapshot written by [`to_snapshot_pgm`].
pub fn parse_snapshot_pgm(bytes: &[u8], resolution: f64) -> Result<OccupancyGrid, MapError> {
    let img = parse_pgm(bytes)?;
    let cells = flip_rows(img.width, img.height, img.pixels, |p| match p {
        0..=63 => CellState::Occupied,
        64..=191 => CellState::Unknown,
        _ => CellState::Free,
    });
    OccupancyGrid::from_cells(img.width, img.height, resolution, Point2::default(), cells)
}

fn flip_rows(
    width: usize,
    height: usize,
    pixels: &[u8],
    map: impl Fn(u8) -> CellState,
) -> Vec<CellState> {
    let mut cells = vec![CellState::Unknown; width * height];
    for (i, &p) in pixels.iter().enumerate() {
        let (img_row, col) = (i / width, i % width);
        cells[(height - 1 - img_row) * width + col] = map(p);
    }
    cells
}

/// Explored-map snapshot as binary PGM: Unknown=128, Free=255, Occupied=0.
pub fn to_snapshot_pgm(grid: &OccupancyGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", grid.width(), grid.height()).into_bytes();
    for row in (0..grid.height()).rev() {
        for col in 0..grid.width() {
            out.push(match grid.state(CellIndex::new(col, row)) {
                CellState::Free => 255,
                CellState::Occupied => 0,
                CellState::Unknown => 128,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(w: usize, h: usize, fill: CellState) -> OccupancyGrid {
        OccupancyGrid::new(w, h, 0.05, Point2::default(), fill).unwrap()
    }

    #[test]
    fn ascii_all_free() {
        let g = parse_ascii("...\n...\n...\n", 0.05).unwrap();
        assert_eq!((g.width(), g.height()), (3, 3));
        assert_eq!(g.count(CellState::Free), 9);
    }

    #[test]
    fn ascii_bordered_room() {
        let g = parse_ascii("###\n#.#\n###\n", 0.05).unwrap();
        assert_eq!(g.count(CellState::Occupied), 8);
        assert_eq!(g.count(CellState::Free), 1);
        assert_eq!(g.state(CellIndex::new(1, 1)), CellState::Free);
    }

    #[test]
    fn ascii_top_line_is_highest_row() {
        let g = parse_ascii("#.\n..\n", 0.05).unwrap();
        assert_eq!(g.state(CellIndex::new(0, 1)), CellState::Occupied);
        assert_eq!(g.state(CellIndex::new(0, 0)), CellState::Free);
    }

    #[test]
    fn ascii_errors() {
        assert!(matches!(parse_ascii("", 0.05), Err(MapError::Empty)));
        assert!(matches!(
            parse_ascii("...\n..\n", 0.05),
            Err(MapError::InconsistentRow { row: 1, .. })
        ));
        assert!(matches!(
            parse_ascii("..x\n", 0.05),
            Err(MapError::InvalidCharacter { ch: 'x', .. })
        ));
    }

    #[test]
    fn pgm_threshold_two_pixels() {
        // hand-written P5 raster: one black pixel then one white pixel
        let bytes = b"P5\n2 1\n255\n\x00\xff";
        let g = parse_pgm_ground_truth(bytes, 0.05).unwrap();
        assert_eq!(g.state(CellIndex::new(0, 0)), CellState::Occupied);
        assert_eq!(g.state(CellIndex::new(1, 0)), CellState::Free);
    }

    #[test]
    fn pgm_threshold_boundary_and_comments() {
        let bytes = b"P5\n# made by hand\n3 1\n255\n\x7f\x80\xc8";
        let g = parse_pgm_ground_truth(bytes, 0.05).unwrap();
        let states: Vec<_> = g.cells().to_vec();
        assert_eq!(
            states,
            vec![CellState::Occupied, CellState::Free, CellState::Free]
        );
    }

    #[test]
    fn pgm_errors() {
        assert!(matches!(
            parse_pgm_ground_truth(b"P2\n1 1\n255\n0", 0.05),
            Err(MapError::MalformedHeader(_))
        ));
        assert!(matches!(
            parse_pgm_ground_truth(b"P5\n4 4\n255\n\x00", 0.05),
            Err(MapError::MalformedHeader(_))
        ));
        assert!(matches!(
            parse_pgm_ground_truth(b"P5\n0 4\n255\n", 0.05),
            Err(MapError::Empty)
        ));
    }

    #[test]
    fn load_from_disk_and_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("room.txt");
        fs::write(&p, "###\n#.#\n###\n").unwrap();
        let g = load_ground_truth(&p, MapFormat::from_path(&p).unwrap()).unwrap();
        assert_eq!(g.count(CellState::Unknown), 0);
        assert!(matches!(
            load_ground_truth(&dir.path().join("nope.txt"), MapFormat::Ascii),
            Err(MapError::Io(_))
        ));
    }

    #[test]
    fn snapshot_roundtrip() {
        let mut g = grid(3, 2, CellState::Unknown);
        g.set(CellIndex::new(0, 0), CellState::Free);
        g.set(CellIndex::new(2, 1), CellState::Occupied);
        let back = parse_snapshot_pgm(&to_snapshot_pgm(&g), 0.05).unwrap();
        assert_eq!(back.cells(), g.cells());
    }

    #[test]
    fn world_to_cell_examples() {
        let g = grid(10, 10, CellState::Free);
        assert_eq!(
            g.world_to_cell(&WorldPose::new(0.0, 0.0, 0.0)),
            Some(CellIndex::new(0, 0))
        );
        assert_eq!(
            g.world_to_cell(&WorldPose::new(0.26, 0.05, 0.0)),
            Some(CellIndex::new(5, 1))
        );
        assert_eq!(g.world_to_cell(&WorldPose::new(-0.01, 0.0, 0.0)), None);
        assert_eq!(g.world_to_cell(&WorldPose::new(0.5, 0.1, 0.0)), None);
    }

    #[test]
    fn free_area_examples() {
        assert_eq!(grid(4, 4, CellState::Unknown).free_area_m2(), 0.0);
        let mut g = grid(10, 1, CellState::Free);
        assert!((g.free_area_m2() - 0.025).abs() < 1e-15);
        g.set(CellIndex::new(0, 0), CellState::Occupied);
        assert!((g.free_area_m2() - 9.0 * 0.0025).abs() < 1e-15);
    }

    #[test]
    fn angle_normalization_range() {
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert!((normalize_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(normalize_angle(0.0), 0.0);
    }

    #[test]
    fn upsample_keeps_extent() {
        let g = parse_ascii("#.\n..\n", 0.05).unwrap();
        let u = g.upsample(2);
        assert_eq!((u.width(), u.height()), (4, 4));
        assert_eq!(u.resolution(), 0.025);
        assert_eq!(u.count(CellState::Occupied), 4);
        assert_eq!(u.state(CellIndex::new(1, 3)), CellState::Occupied);
    }

    fn cell_state() -> impl Strategy<Value = CellState> {
        prop_oneof![Just(CellState::Free), Just(CellState::Occupied)]
    }

    proptest! {
        #[test]
        fn cell_center_roundtrip(w in 1usize..40, h in 1usize..40, res in 0.01f64..0.5,
                                 ox in -5.0f64..5.0, oy in -5.0f64..5.0) {
            let g = OccupancyGrid::new(w, h, res, Point2::new(ox, oy), CellState::Free).unwrap();
            for row in 0..h {
                for col in 0..w {
                    let c = CellIndex::new(col, row);
                    prop_assert_eq!(g.point_to_cell(g.cell_to_world(c)), Some(c));
                }
            }
        }

        #[test]
        fn ascii_roundtrip(w in 1usize..12, h in 1usize..12,
                           states in proptest::collection::vec(cell_state(), 144)) {
            let cells = states[..w * h].to_vec();
            let g = OccupancyGrid::from_cells(w, h, 0.05, Point2::default(), cells).unwrap();
            let back = parse_ascii(&to_ascii(&g), 0.05).unwrap();
            prop_assert_eq!(back.cells(), g.cells());
        }

        #[test]
        fn flipping_unknown_to_free_adds_one_cell_area(n in 1usize..100, pick in 0usize..100) {
            let mut g = grid(n, 1, CellState::Unknown);
            let before = g.free_area_m2();
            g.set(CellIndex::new(pick % n, 0), CellState::Free);
            prop_assert!((g.free_area_m2() - before - 0.0025).abs() < 1e-15);
        }
    }
}
