//! Tiled arena: the black/white feature pattern and its problem difficulty.
//!
//! The arena is a 2 m x 2 m square of 10 cm tiles (20 x 20 = 400 cells).
//! The difficulty of the perception problem is the ratio of the rarer
//! feature fraction to the more frequent one, so 1.0 is the hardest
//! possible setting (an even split).

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Arena side length in meters.
pub const ARENA_SIZE_M: f64 = 2.0;
/// Tile side length in meters.
pub const TILE_SIZE_M: f64 = 0.10;
/// Tiles per arena side.
pub const GRID_WIDTH: usize = 20;
/// Tiles per arena side.
pub const GRID_HEIGHT: usize = 20;
/// Total cell count.
pub const CELL_COUNT: usize = GRID_WIDTH * GRID_HEIGHT;

/// Canonical difficulty labels and their minority cell counts out of 400.
const LABEL_TABLE: [(f64, usize); 4] = [(0.25, 80), (0.52, 136), (0.67, 160), (0.82, 180)];

/// One of the two environmental features.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Color {
    Black,
    White,
}

impl Color {
    /// Numeric sensor encoding: black reads 0, white reads 1.
    pub fn as_sensor_value(self) -> f64 {
        match self {
            Color::Black => 0.0,
            Color::White => 1.0,
        }
    }

    pub fn inverted(self) -> Color {
        match self {
            Color::Black => Color::White,
            Color::White => Color::Black,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Color::Black => 'B',
            Color::White => 'W',
        }
    }

    pub fn from_char(c: char) -> Result<Color> {
        match c {
            'B' => Ok(Color::Black),
            'W' => Ok(Color::White),
            other => Err(Error::Config(format!(
                "invalid cell character {other:?}, expected 'B' or 'W'"
            ))),
        }
    }
}

/// The arena's tile pattern, row-major with cell (0, 0) at the origin.
///
/// Grids always contain both colors so the problem difficulty is defined.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TileGrid {
    cells: Vec<Color>,
}

/// Problem difficulty from raw cell counts: the rarer fraction over the
/// more frequent one. Errors when a color is absent (the ratio would
/// degenerate toward 0/infinity).
pub fn difficulty_from_counts(black: usize, white: usize) -> Result<f64> {
    if black == 0 || white == 0 {
        return Err(Error::Domain(
            "problem difficulty undefined: grid contains a single color".into(),
        ));
    }
    let lo = black.min(white) as f64;
    let hi = black.max(white) as f64;
    Ok(lo / hi)
}

/// Minority cell count realizing a difficulty label on a 400-cell grid.
///
/// The benchmark labels 0.25/0.52/0.67/0.82 map to the canonical counts
/// 80/136/160/180; any other label must be exactly expressible as
/// k/(400-k) for an integer k.
pub fn minority_cells_for_label(label: f64) -> Result<usize> {
    if !(label > 0.0 && label <= 1.0) {
        return Err(Error::Config(format!(
            "difficulty label must lie in (0, 1], got {label}"
        )));
    }
    for &(canonical, cells) in &LABEL_TABLE {
        if (label - canonical).abs() < 1e-9 {
            return Ok(cells);
        }
    }
    let exact = label * CELL_COUNT as f64 / (1.0 + label);
    let k = exact.round();
    let realized = k / (CELL_COUNT as f64 - k);
    if k >= 1.0 && k <= (CELL_COUNT / 2) as f64 && (realized - label).abs() < 1e-12 {
        Ok(k as usize)
    } else {
        Err(Error::Config(format!(
            "difficulty label {label} is not expressible as k/({CELL_COUNT}-k) minority cells"
        )))
    }
}

impl TileGrid {
    /// Builds a grid from row-major cells; both colors must be present.
    pub fn from_cells(cells: Vec<Color>) -> Result<Self> {
        if cells.len() != CELL_COUNT {
            return Err(Error::Config(format!(
                "expected {CELL_COUNT} cells, got {}",
                cells.len()
            )));
        }
        let black = cells.iter().filter(|c| **c == Color::Black).count();
        if black == 0 || black == CELL_COUNT {
            return Err(Error::Domain(
                "grid must contain both colors (difficulty must be well defined)".into(),
            ));
        }
        Ok(TileGrid { cells })
    }

    /// Generates a pattern with exact cell counts for the difficulty label:
    /// minority tiles are placed uniformly at random by the seeded
    /// generator, so identical (label, majority, seed) yield identical grids.
    pub fn generate(difficulty_label: f64, majority: Color, seed: u64) -> Result<Self> {
        let minority_cells = minority_cells_for_label(difficulty_label)?;
        let minority = majority.inverted();
        let mut cells = vec![majority; CELL_COUNT];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for idx in index::sample(&mut rng, CELL_COUNT, minority_cells) {
            cells[idx] = minority;
        }
        TileGrid::from_cells(cells)
    }

    /// Every cell flipped; involution that preserves the difficulty and
    /// swaps the majority color.
    pub fn inverted(&self) -> Self {
        TileGrid {
            cells: self.cells.iter().map(|c| c.inverted()).collect(),
        }
    }

    /// Color of the tile containing the point. Cells are half-open along
    /// both axes; the outer arena edge belongs to the last cell.
    pub fn color_at(&self, x: f64, y: f64) -> Result<Color> {
        if !(0.0..=ARENA_SIZE_M).contains(&x) || !(0.0..=ARENA_SIZE_M).contains(&y) {
            return Err(Error::Domain(format!(
                "position ({x}, {y}) outside arena [0, {ARENA_SIZE_M}]^2"
            )));
        }
        let col = ((x / TILE_SIZE_M) as usize).min(GRID_WIDTH - 1);
        let row = ((y / TILE_SIZE_M) as usize).min(GRID_HEIGHT - 1);
        Ok(self.cells[row * GRID_WIDTH + col])
    }

    pub fn cell(&self, col: usize, row: usize) -> Color {
        self.cells[row * GRID_WIDTH + col]
    }

    /// (black, white) cell counts.
    pub fn counts(&self) -> (usize, usize) {
        let black = self.cells.iter().filter(|c| **c == Color::Black).count();
        (black, CELL_COUNT - black)
    }

    /// Problem difficulty: min of the two feature-fraction ratios.
    pub fn difficulty(&self) -> f64 {
        let (black, white) = self.counts();
        difficulty_from_counts(black, white).expect("grids always contain both colors")
    }

    /// The more frequent color, absent on an even split.
    pub fn majority(&self) -> Option<Color> {
        let (black, white) = self.counts();
        match black.cmp(&white) {
            std::cmp::Ordering::Greater => Some(Color::Black),
            std::cmp::Ordering::Less => Some(Color::White),
            std::cmp::Ordering::Equal => None,
        }
    }

    /// Text form: "width height" then one row of 'B'/'W' per line, row 0 first.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(CELL_COUNT + GRID_HEIGHT + 8);
        out.push_str(&format!("{GRID_WIDTH} {GRID_HEIGHT}\n"));
        for row in 0..GRID_HEIGHT {
            for col in 0..GRID_WIDTH {
                out.push(self.cell(col, row).as_char());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Config("empty grid file".into()))?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        if dims.len() != 2 || dims[0] != GRID_WIDTH.to_string() || dims[1] != GRID_HEIGHT.to_string()
        {
            return Err(Error::Config(format!(
                "grid header must be \"{GRID_WIDTH} {GRID_HEIGHT}\", got {header:?}"
            )));
        }
        let mut cells = Vec::with_capacity(CELL_COUNT);
        for _ in 0..GRID_HEIGHT {
            let row = lines
                .next()
                .ok_or_else(|| Error::Config("grid file truncated".into()))?;
            if row.chars().count() != GRID_WIDTH {
                return Err(Error::Config(format!(
                    "grid row must have {GRID_WIDTH} cells, got {row:?}"
                )));
            }
            for c in row.chars() {
                cells.push(Color::from_char(c)?);
            }
        }
        TileGrid::from_cells(cells)
    }
}
