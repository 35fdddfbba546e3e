//! Tile alphabet, grids, and the ASCII level format.
//!
//! Levels are plain ASCII, one row per line, using exactly the 13 symbols of
//! [`TileKind`]. Levels in the corpus are 14 rows tall; they are padded at the
//! top to [`SCENE_HEIGHT`] and sliced into scenes one column at a time.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Height of every scene, in tiles.
pub const SCENE_HEIGHT: usize = 16;
/// Default scene width, in tiles.
pub const SCENE_WIDTH: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TileError {
    #[error("unknown tile symbol {symbol:?} at row {row}, column {col}")]
    UnknownSymbol {
        row: usize,
        col: usize,
        symbol: char,
    },
    #[error("ragged rows: expected width {expected}, got {got} on row {row}")]
    RaggedRows {
        expected: usize,
        got: usize,
        row: usize,
    },
    #[error("level text is empty")]
    Empty,
    #[error("cannot pad {height} rows down to {target}")]
    TargetTooSmall { height: usize, target: usize },
    #[error("grid width {width} is smaller than window width {window}")]
    WidthTooSmall { width: usize, window: usize },
    #[error("expected grid height {expected}, got {got}")]
    BadHeight { expected: usize, got: usize },
    #[error("tile id {0} out of range")]
    BadId(u8),
}

/// One of the 13 tile kinds, with the one-hot identity as discriminant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
#[repr(u8)]
pub enum TileKind {
    #[default]
    Sky = 0,
    PipeTopLeft = 1,
    PipeTopRight = 2,
    QuestionBlock = 3,
    CannonTop = 4,
    Enemy = 5,
    UsedQuestionBlock = 6,
    Breakable = 7,
    Ground = 8,
    PipeLeft = 9,
    PipeRight = 10,
    CannonSupport = 11,
    Coin = 12,
}

impl TileKind {
    pub const ALL: [TileKind; 13] = [
        TileKind::Sky,
        TileKind::PipeTopLeft,
        TileKind::PipeTopRight,
        TileKind::QuestionBlock,
        TileKind::CannonTop,
        TileKind::Enemy,
        TileKind::UsedQuestionBlock,
        TileKind::Breakable,
        TileKind::Ground,
        TileKind::PipeLeft,
        TileKind::PipeRight,
        TileKind::CannonSupport,
        TileKind::Coin,
    ];

    pub fn symbol(self) -> char {
        match self {
            TileKind::Sky => '-',
            TileKind::PipeTopLeft => '<',
            TileKind::PipeTopRight => '>',
            TileKind::QuestionBlock => '?',
            TileKind::CannonTop => 'B',
            TileKind::Enemy => 'E',
            TileKind::UsedQuestionBlock => 'Q',
            TileKind::Breakable => 'S',
            TileKind::Ground => 'X',
            TileKind::PipeLeft => '[',
            TileKind::PipeRight => ']',
            TileKind::CannonSupport => 'b',
            TileKind::Coin => 'o',
        }
    }

    pub fn from_symbol(symbol: char) -> Option<TileKind> {
        Some(match symbol {
            '-' => TileKind::Sky,
            '<' => TileKind::PipeTopLeft,
            '>' => TileKind::PipeTopRight,
            '?' => TileKind::QuestionBlock,
            'B' => TileKind::CannonTop,
            'E' => TileKind::Enemy,
            'Q' => TileKind::UsedQuestionBlock,
            'S' => TileKind::Breakable,
            'X' => TileKind::Ground,
            '[' => TileKind::PipeLeft,
            ']' => TileKind::PipeRight,
            'b' => TileKind::CannonSupport,
            'o' => TileKind::Coin,
            _ => return None,
        })
    }

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<TileKind> {
        Self::ALL.get(id as usize).copied()
    }

    /// Sky, enemies and coins can be moved through; everything else blocks.
    pub fn is_passable(self) -> bool {
        matches!(self, TileKind::Sky | TileKind::Enemy | TileKind::Coin)
    }

    pub fn is_solid(self) -> bool {
        !self.is_passable()
    }

    pub fn is_pipe(self) -> bool {
        matches!(
            self,
            TileKind::PipeTopLeft
                | TileKind::PipeTopRight
                | TileKind::PipeLeft
                | TileKind::PipeRight
        )
    }

    pub fn is_cannon(self) -> bool {
        matches!(self, TileKind::CannonTop | TileKind::CannonSupport)
    }

    pub fn is_question(self) -> bool {
        matches!(self, TileKind::QuestionBlock | TileKind::UsedQuestionBlock)
    }

    /// Ground and breakable bricks: the only tiles that build towers,
    /// staircases and block clusters.
    pub fn is_structural(self) -> bool {
        matches!(self, TileKind::Ground | TileKind::Breakable)
    }

    /// Block-like solids that can form floors, ceilings and platforms.
    pub fn is_block(self) -> bool {
        self.is_structural() || self.is_question()
    }
}

impl fmt::Display for TileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// A rectangular, row-major grid of tiles. Row 0 is the top of the screen.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TileGrid {
    height: usize,
    width: usize,
    cells: Vec<TileKind>,
}

impl TileGrid {
    /// A grid of sky. Panics if either dimension is zero.
    pub fn new(height: usize, width: usize) -> Self {
        Self::filled(height, width, TileKind::Sky)
    }

    pub fn filled(height: usize, width: usize, tile: TileKind) -> Self {
        assert!(height > 0 && width > 0, "grid dimensions must be positive");
        TileGrid {
            height,
            width,
            cells: vec![tile; height * width],
        }
    }

    pub fn from_cells(
        height: usize,
        width: usize,
        cells: Vec<TileKind>,
    ) -> Result<Self, TileError> {
        if height == 0 || width == 0 {
            return Err(TileError::Empty);
        }
        if cells.len() != height * width {
            return Err(TileError::RaggedRows {
                expected: height * width,
                got: cells.len(),
                row: 0,
            });
        }
        Ok(TileGrid {
            height,
            width,
            cells,
        })
    }

    pub fn from_ids(height: usize, width: usize, ids: &[u8]) -> Result<Self, TileError> {
        let cells = ids
            .iter()
            .map(|&id| TileKind::from_id(id).ok_or(TileError::BadId(id)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_cells(height, width, cells)
    }

    /// Builds a grid from symbol rows. All rows must share one width.
    pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Result<Self, TileError> {
        let Some(first) = rows.first() else {
            return Err(TileError::Empty);
        };
        let width = first.as_ref().chars().count();
        if width == 0 {
            return Err(TileError::Empty);
        }
        let mut cells = Vec::with_capacity(rows.len() * width);
        for (row, line) in rows.iter().enumerate() {
            let line = line.as_ref();
            let mut n = 0;
            for (col, ch) in line.chars().enumerate() {
                let tile = TileKind::from_symbol(ch).ok_or(TileError::UnknownSymbol {
                    row,
                    col,
                    symbol: ch,
                })?;
                cells.push(tile);
                n += 1;
            }
            if n != width {
                return Err(TileError::RaggedRows {
                    expected: width,
                    got: n,
                    row,
                });
            }
        }
        Ok(TileGrid {
            height: rows.len(),
            width,
            cells,
        })
    }

    /// Parses newline-separated ASCII rows.
    pub fn parse(text: &str) -> Result<Self, TileError> {
        let rows = split_rows(text)?;
        Self::from_rows(&rows)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn cells(&self) -> &[TileKind] {
        &self.cells
    }

    pub fn ids(&self) -> Vec<u8> {
        self.cells.iter().map(|t| t.id()).collect()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> TileKind {
        self.cells[row * self.width + col]
    }

    /// Like [`get`](Self::get) but `None` outside the grid.
    #[inline]
    pub fn at(&self, row: isize, col: isize) -> Option<TileKind> {
        if row < 0 || col < 0 || row as usize >= self.height || col as usize >= self.width {
            None
        } else {
            Some(self.get(row as usize, col as usize))
        }
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, tile: TileKind) {
        self.cells[row * self.width + col] = tile;
    }

    pub fn row(&self, row: usize) -> &[TileKind] {
        &self.cells[row * self.width..(row + 1) * self.width]
    }

    pub fn row_string(&self, row: usize) -> String {
        self.row(row).iter().map(|t| t.symbol()).collect()
    }

    pub fn rows(&self) -> Vec<String> {
        (0..self.height).map(|r| self.row_string(r)).collect()
    }

    /// Newline-joined symbol rows, no trailing newline.
    pub fn serialize(&self) -> String {
        self.rows().join("\n")
    }

    pub fn count(&self, tile: TileKind) -> usize {
        self.cells.iter().filter(|&&t| t == tile).count()
    }

    /// Columns `[start, start + width)` as a new grid.
    pub fn columns(&self, start: usize, width: usize) -> TileGrid {
        assert!(
            width > 0 && start + width <= self.width,
            "column range out of bounds"
        );
        let mut cells = Vec::with_capacity(self.height * width);
        for r in 0..self.height {
            cells.extend_from_slice(&self.row(r)[start..start + width]);
        }
        TileGrid {
            height: self.height,
            width,
            cells,
        }
    }

    /// Prepends sky rows until the grid is `target` rows tall.
    pub fn pad_to_height(&self, target: usize) -> Result<TileGrid, TileError> {
        if target < self.height {
            return Err(TileError::TargetTooSmall {
                height: self.height,
                target,
            });
        }
        let extra = target - self.height;
        let mut cells = vec![TileKind::Sky; extra * self.width];
        cells.extend_from_slice(&self.cells);
        Ok(TileGrid {
            height: target,
            width: self.width,
            cells,
        })
    }

    /// Every `window_width`-wide scene, sliding one column at a time.
    pub fn slide_windows(&self, window_width: usize) -> Result<Vec<TileGrid>, TileError> {
        if self.height != SCENE_HEIGHT {
            return Err(TileError::BadHeight {
                expected: SCENE_HEIGHT,
                got: self.height,
            });
        }
        if window_width == 0 || self.width < window_width {
            return Err(TileError::WidthTooSmall {
                width: self.width,
                window: window_width,
            });
        }
        Ok((0..=self.width - window_width)
            .map(|k| self.columns(k, window_width))
            .collect())
    }

    /// Joins grids of equal height left to right.
    pub fn concat(parts: &[TileGrid]) -> Result<TileGrid, TileError> {
        let Some(first) = parts.first() else {
            return Err(TileError::Empty);
        };
        let height = first.height;
        if let Some(bad) = parts.iter().find(|g| g.height != height) {
            return Err(TileError::BadHeight {
                expected: height,
                got: bad.height,
            });
        }
        let width: usize = parts.iter().map(|g| g.width).sum();
        let mut cells = Vec::with_capacity(height * width);
        for r in 0..height {
            for g in parts {
                cells.extend_from_slice(g.row(r));
            }
        }
        Ok(TileGrid {
            height,
            width,
            cells,
        })
    }
}

impl fmt::Debug for TileGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "TileGrid {}x{}", self.height, self.width)?;
        for r in 0..self.height {
            writeln!(f, "  {}", self.row_string(r))?;
        }
        Ok(())
    }
}

impl fmt::Display for TileGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

impl Serialize for TileGrid {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TileGrid {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<String>::deserialize(deserializer)?;
        TileGrid::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// A level file as read from disk, before padding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSource {
    pub name: String,
    pub rows: Vec<String>,
    pub original_height: usize,
}

impl LevelSource {
    pub fn width(&self) -> usize {
        self.rows.first().map(|r| r.chars().count()).unwrap_or(0)
    }

    pub fn to_grid(&self) -> TileGrid {
        TileGrid::from_rows(&self.rows).expect("LevelSource rows are validated on parse")
    }

    pub fn pad_to_height(&self, target: usize) -> Result<TileGrid, TileError> {
        self.to_grid().pad_to_height(target)
    }

    pub fn serialize(&self) -> String {
        self.rows.join("\n")
    }
}

fn split_rows(text: &str) -> Result<Vec<&str>, TileError> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    let body = body.strip_suffix('\r').unwrap_or(body);
    if body.is_empty() {
        return Err(TileError::Empty);
    }
    Ok(body
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect())
}

/// Parses an ASCII level file. One trailing newline (LF or CRLF) is tolerated.
pub fn parse_level(name: &str, text: &str) -> Result<LevelSource, TileError> {
    let rows = split_rows(text)?;
    // validates alphabet and raggedness
    let grid = TileGrid::from_rows(&rows)?;
    Ok(LevelSource {
        name: name.to_string(),
        rows: rows.iter().map(|s| s.to_string()).collect(),
        original_height: grid.height(),
    })
}
