//! Structural scene analysis.
//!
//! [`detect`] scans a scene for every captionable concept. Detectors run in
//! a fixed order and structure detectors claim ("consume") the cells they
//! use, so later flood-fill based detectors only see what is left over.
//! Counting detectors (coins, question blocks, enemies) never consume.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tiles::{TileGrid, TileKind, SCENE_HEIGHT};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DetectError {
    #[error("scene must be {expected} rows tall, got {got}")]
    BadHeight { expected: usize, got: usize },
}

/// Every concept a caption can mention, in canonical caption order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConceptKind {
    Floor,
    Ceiling,
    Enemy,
    QuestionBlock,
    Cannon,
    Coin,
    CoinLine,
    Platform,
    AscendingStaircase,
    DescendingStaircase,
    Pipe,
    UpsideDownPipe,
    Tower,
    RectangularCluster,
    IrregularCluster,
    LooseBlock,
    BrokenPipe,
    BrokenCannon,
}

impl ConceptKind {
    /// All 18 concepts; this is the topic set used for scoring.
    pub const ALL: [ConceptKind; 18] = [
        ConceptKind::Floor,
        ConceptKind::Ceiling,
        ConceptKind::Enemy,
        ConceptKind::QuestionBlock,
        ConceptKind::Cannon,
        ConceptKind::Coin,
        ConceptKind::CoinLine,
        ConceptKind::Platform,
        ConceptKind::AscendingStaircase,
        ConceptKind::DescendingStaircase,
        ConceptKind::Pipe,
        ConceptKind::UpsideDownPipe,
        ConceptKind::Tower,
        ConceptKind::RectangularCluster,
        ConceptKind::IrregularCluster,
        ConceptKind::LooseBlock,
        ConceptKind::BrokenPipe,
        ConceptKind::BrokenCannon,
    ];

    /// The 16 concepts that occur in real level data.
    pub const TRAINING: [ConceptKind; 16] = [
        ConceptKind::Floor,
        ConceptKind::Ceiling,
        ConceptKind::Enemy,
        ConceptKind::QuestionBlock,
        ConceptKind::Cannon,
        ConceptKind::Coin,
        ConceptKind::CoinLine,
        ConceptKind::Platform,
        ConceptKind::AscendingStaircase,
        ConceptKind::DescendingStaircase,
        ConceptKind::Pipe,
        ConceptKind::UpsideDownPipe,
        ConceptKind::Tower,
        ConceptKind::RectangularCluster,
        ConceptKind::IrregularCluster,
        ConceptKind::LooseBlock,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_integrity_defect(self) -> bool {
        matches!(self, ConceptKind::BrokenPipe | ConceptKind::BrokenCannon)
    }

    /// Floor and ceiling use their own phrase forms instead of plain counts.
    pub fn is_surface(self) -> bool {
        matches!(self, ConceptKind::Floor | ConceptKind::Ceiling)
    }

    pub fn name(self) -> &'static str {
        match self {
            ConceptKind::Floor => "floor",
            ConceptKind::Ceiling => "ceiling",
            ConceptKind::Enemy => "enemy",
            ConceptKind::QuestionBlock => "question_block",
            ConceptKind::Cannon => "cannon",
            ConceptKind::Coin => "coin",
            ConceptKind::CoinLine => "coin_line",
            ConceptKind::Platform => "platform",
            ConceptKind::AscendingStaircase => "ascending_staircase",
            ConceptKind::DescendingStaircase => "descending_staircase",
            ConceptKind::Pipe => "pipe",
            ConceptKind::UpsideDownPipe => "upside_down_pipe",
            ConceptKind::Tower => "tower",
            ConceptKind::RectangularCluster => "rectangular_cluster",
            ConceptKind::IrregularCluster => "irregular_cluster",
            ConceptKind::LooseBlock => "loose_block",
            ConceptKind::BrokenPipe => "broken_pipe",
            ConceptKind::BrokenCannon => "broken_cannon",
        }
    }

    pub fn from_name(name: &str) -> Option<ConceptKind> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl fmt::Display for ConceptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "n", rename_all = "snake_case")]
pub enum FloorState {
    Full,
    Gaps(u32),
    /// More than half the bottom row is missing; `n` is the number of floor chunks.
    GiantGap(u32),
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "n", rename_all = "snake_case")]
pub enum CeilingState {
    Full,
    Gaps(u32),
    None,
}

/// A located structure and the cells it occupies, as `(row, col)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Structure {
    pub kind: ConceptKind,
    pub cells: Vec<(usize, usize)>,
}

/// Tunables for the row-based detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Row (from the top of the padded scene) examined for a ceiling.
    pub ceiling_row: usize,
    /// How many block rows, counted up from the bottom, belong to the floor.
    pub floor_depth: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            ceiling_row: 3,
            floor_depth: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptReport {
    pub height: usize,
    pub width: usize,
    /// Always holds all 18 concepts. Floor and ceiling are 0 or 1.
    pub counts: BTreeMap<ConceptKind, u32>,
    pub floor: FloorState,
    pub ceiling: CeilingState,
    pub structures: Vec<Structure>,
    /// Row-major mask of cells claimed by a consuming detector.
    #[serde(skip)]
    pub consumed: Vec<bool>,
}

impl ConceptReport {
    fn empty(height: usize, width: usize) -> Self {
        ConceptReport {
            height,
            width,
            counts: ConceptKind::ALL.iter().map(|&c| (c, 0)).collect(),
            floor: FloorState::None,
            ceiling: CeilingState::None,
            structures: Vec::new(),
            consumed: vec![false; height * width],
        }
    }

    pub fn count(&self, kind: ConceptKind) -> u32 {
        self.counts.get(&kind).copied().unwrap_or(0)
    }

    pub fn has(&self, kind: ConceptKind) -> bool {
        self.count(kind) > 0
    }

    pub fn structures_of(&self, kind: ConceptKind) -> impl Iterator<Item = &Structure> {
        self.structures.iter().filter(move |s| s.kind == kind)
    }

    pub fn is_consumed(&self, row: usize, col: usize) -> bool {
        self.consumed[row * self.width + col]
    }

    fn bump(&mut self, kind: ConceptKind, by: u32) {
        *self.counts.entry(kind).or_insert(0) += by;
    }
}

pub fn detect(scene: &TileGrid) -> Result<ConceptReport, DetectError> {
    detect_with(scene, &DetectorConfig::default())
}

pub fn detect_with(
    scene: &TileGrid,
    config: &DetectorConfig,
) -> Result<ConceptReport, DetectError> {
    if scene.height() != SCENE_HEIGHT {
        return Err(DetectError::BadHeight {
            expected: SCENE_HEIGHT,
            got: scene.height(),
        });
    }
    let mut scan = Scan {
        grid: scene,
        report: ConceptReport::empty(scene.height(), scene.width()),
    };
    scan.floor(config.floor_depth);
    scan.ceiling(config.ceiling_row);
    scan.pipes();
    scan.upside_down_pipes();
    scan.cannons();
    scan.coin_lines();
    scan.tally(ConceptKind::Coin, |t| t == TileKind::Coin);
    scan.tally(ConceptKind::QuestionBlock, TileKind::is_question);
    scan.tally(ConceptKind::Enemy, |t| t == TileKind::Enemy);
    scan.platforms();
    scan.towers();
    scan.staircases(true);
    scan.staircases(false);
    scan.clusters();
    scan.broken_pipes();
    Ok(scan.report)
}

struct Scan<'a> {
    grid: &'a TileGrid,
    report: ConceptReport,
}

impl Scan<'_> {
    fn h(&self) -> usize {
        self.grid.height()
    }

    fn w(&self) -> usize {
        self.grid.width()
    }

    fn free(&self, r: usize, c: usize) -> bool {
        !self.report.consumed[r * self.w() + c]
    }

    /// Out-of-bounds cells count as passable.
    fn passable_at(&self, r: isize, c: isize) -> bool {
        self.grid.at(r, c).is_none_or(TileKind::is_passable)
    }

    fn solid_at(&self, r: isize, c: isize) -> bool {
        self.grid.at(r, c).is_some_and(TileKind::is_solid)
    }

    fn free_structural(&self, r: usize, c: usize) -> bool {
        self.free(r, c) && self.grid.get(r, c).is_structural()
    }

    fn claim(&mut self, kind: ConceptKind, cells: Vec<(usize, usize)>) {
        let w = self.w();
        for &(r, c) in &cells {
            debug_assert!(!self.report.consumed[r * w + c], "cell claimed twice");
            self.report.consumed[r * w + c] = true;
        }
        self.report.structures.push(Structure { kind, cells });
    }

    fn floor(&mut self, depth: usize) {
        let (h, w) = (self.h(), self.w());
        let bottom = h - 1;
        let solid: Vec<bool> = self.grid.row(bottom).iter().map(|t| t.is_solid()).collect();
        let solids = solid.iter().filter(|&&s| s).count();
        if solids == 0 {
            self.report.floor = FloorState::None;
            return;
        }
        let gaps = count_runs(&solid, false);
        let missing = w - solids;
        self.report.floor = if gaps == 0 {
            FloorState::Full
        } else if 2 * missing > w {
            FloorState::GiantGap(count_runs(&solid, true))
        } else {
            FloorState::Gaps(gaps)
        };
        self.report.bump(ConceptKind::Floor, 1);

        let mut cells = Vec::new();
        for c in 0..w {
            if !self.grid.get(bottom, c).is_block() {
                continue;
            }
            cells.push((bottom, c));
            let mut r = bottom;
            while bottom - r + 1 < depth && r > 0 && self.grid.get(r - 1, c).is_structural() {
                r -= 1;
                cells.push((r, c));
            }
        }
        cells.sort_unstable();
        self.claim(ConceptKind::Floor, cells);
    }

    fn ceiling(&mut self, row: usize) {
        let w = self.w();
        if row >= self.h() {
            return;
        }
        let solid: Vec<bool> = self.grid.row(row).iter().map(|t| t.is_solid()).collect();
        let solids = solid.iter().filter(|&&s| s).count();
        if 2 * solids < w {
            return;
        }
        self.report.ceiling = if solids == w {
            CeilingState::Full
        } else {
            CeilingState::Gaps(count_runs(&solid, false))
        };
        self.report.bump(ConceptKind::Ceiling, 1);
        let cells: Vec<_> = (0..w)
            .filter(|&c| self.free(row, c) && self.grid.get(row, c).is_block())
            .map(|c| (row, c))
            .collect();
        self.claim(ConceptKind::Ceiling, cells);
    }

    /// Whether the column pair starting at `c` shows `left`/`right` on row `r`.
    /// A half of the pair that falls outside the scene matches anything, so
    /// pipes cut by the scene's left or right edge stay whole.
    fn pair_is(&self, r: usize, c: isize, left: TileKind, right: TileKind) -> bool {
        let w = self.w() as isize;
        let half = |col: isize, want: TileKind| -> bool {
            if col < 0 || col >= w {
                true
            } else {
                let (r, col) = (r, col as usize);
                self.free(r, col) && self.grid.get(r, col) == want
            }
        };
        (c >= 0 || c + 1 < w) && half(c, left) && half(c + 1, right)
    }

    /// Both in-bounds cells of the pair are solid.
    fn pair_solid(&self, r: isize, c: isize) -> bool {
        let w = self.w() as isize;
        [c, c + 1]
            .into_iter()
            .filter(|&col| col >= 0 && col < w)
            .all(|col| self.solid_at(r, col))
    }

    fn pair_cells(&self, r: usize, c: isize) -> impl Iterator<Item = (usize, usize)> {
        let w = self.w() as isize;
        [c, c + 1]
            .into_iter()
            .filter(move |&col| col >= 0 && col < w)
            .map(move |col| (r, col as usize))
    }

    fn pipe_pass(&mut self, upside_down: bool) {
        let h = self.h() as isize;
        let w = self.w() as isize;
        for r in 0..h as usize {
            for c in -1..w {
                if !self.pair_is(r, c, TileKind::PipeTopLeft, TileKind::PipeTopRight) {
                    continue;
                }
                let step: isize = if upside_down { -1 } else { 1 };
                let mut rr = r as isize + step;
                let mut neck = 0;
                while rr >= 0
                    && rr < h
                    && self.pair_is(rr as usize, c, TileKind::PipeLeft, TileKind::PipeRight)
                {
                    neck += 1;
                    rr += step;
                }
                let anchored = rr < 0 || rr >= h || self.pair_solid(rr, c);
                if neck == 0 || !anchored {
                    continue;
                }
                let mut cells: Vec<_> = self.pair_cells(r, c).collect();
                for k in 1..=neck {
                    let row = (r as isize + step * k) as usize;
                    cells.extend(self.pair_cells(row, c));
                }
                cells.sort_unstable();
                let kind = if upside_down {
                    ConceptKind::UpsideDownPipe
                } else {
                    ConceptKind::Pipe
                };
                self.report.bump(kind, 1);
                self.claim(kind, cells);
            }
        }
    }

    fn pipes(&mut self) {
        self.pipe_pass(false);
    }

    fn upside_down_pipes(&mut self) {
        self.pipe_pass(true);
    }

    fn cannons(&mut self) {
        let (h, w) = (self.h(), self.w());
        for c in 0..w {
            for r in 0..h {
                if self.grid.get(r, c) != TileKind::CannonTop || !self.free(r, c) {
                    continue;
                }
                let mut cells = vec![(r, c)];
                let mut rr = r + 1;
                while rr < h && self.grid.get(rr, c) == TileKind::CannonSupport && self.free(rr, c)
                {
                    cells.push((rr, c));
                    rr += 1;
                }
                self.report.bump(ConceptKind::Cannon, 1);
                self.claim(ConceptKind::Cannon, cells);
            }
        }
        // supports with no cannon on top
        for c in 0..w {
            let mut r = 0;
            while r < h {
                if self.grid.get(r, c) == TileKind::CannonSupport && self.free(r, c) {
                    let mut cells = Vec::new();
                    while r < h && self.grid.get(r, c) == TileKind::CannonSupport && self.free(r, c)
                    {
                        cells.push((r, c));
                        r += 1;
                    }
                    self.report.bump(ConceptKind::BrokenCannon, 1);
                    self.claim(ConceptKind::BrokenCannon, cells);
                } else {
                    r += 1;
                }
            }
        }
    }

    fn coin_lines(&mut self) {
        let (h, w) = (self.h(), self.w());
        for r in 0..h {
            let mut c = 0;
            while c < w {
                if self.grid.get(r, c) != TileKind::Coin {
                    c += 1;
                    continue;
                }
                let start = c;
                while c < w && self.grid.get(r, c) == TileKind::Coin {
                    c += 1;
                }
                if c - start >= 2 {
                    self.report.bump(ConceptKind::CoinLine, 1);
                    // coins are not consumed, but the line is still located
                    self.report.structures.push(Structure {
                        kind: ConceptKind::CoinLine,
                        cells: (start..c).map(|cc| (r, cc)).collect(),
                    });
                }
            }
        }
    }

    fn tally(&mut self, kind: ConceptKind, pred: impl Fn(TileKind) -> bool) {
        let n = self.grid.cells().iter().filter(|&&t| pred(t)).count() as u32;
        self.report.bump(kind, n);
    }

    fn platforms(&mut self) {
        let (h, w) = (self.h(), self.w());
        for r in 0..h {
            let mut c = 0;
            while c < w {
                if !(self.free(r, c) && self.grid.get(r, c).is_block()) {
                    c += 1;
                    continue;
                }
                let start = c;
                while c < w && self.free(r, c) && self.grid.get(r, c).is_block() {
                    c += 1;
                }
                if c - start < 2 {
                    continue;
                }
                let ri = r as isize;
                let open = (start..c).all(|cc| {
                    self.passable_at(ri - 1, cc as isize) && self.passable_at(ri + 1, cc as isize)
                });
                if open {
                    self.report.bump(ConceptKind::Platform, 1);
                    self.claim(
                        ConceptKind::Platform,
                        (start..c).map(|cc| (r, cc)).collect(),
                    );
                }
            }
        }
    }

    fn components(&self) -> Vec<Vec<(usize, usize)>> {
        let (h, w) = (self.h(), self.w());
        let mut seen = vec![false; h * w];
        let mut out = Vec::new();
        for r in 0..h {
            for c in 0..w {
                if seen[r * w + c] || !self.free_structural(r, c) {
                    continue;
                }
                let mut comp = Vec::new();
                let mut stack = vec![(r, c)];
                seen[r * w + c] = true;
                while let Some((cr, cc)) = stack.pop() {
                    comp.push((cr, cc));
                    let neighbours = [
                        (cr.wrapping_sub(1), cc),
                        (cr + 1, cc),
                        (cr, cc.wrapping_sub(1)),
                        (cr, cc + 1),
                    ];
                    for (nr, nc) in neighbours {
                        if nr < h && nc < w && !seen[nr * w + nc] && self.free_structural(nr, nc) {
                            seen[nr * w + nc] = true;
                            stack.push((nr, nc));
                        }
                    }
                }
                comp.sort_unstable();
                out.push(comp);
            }
        }
        out
    }

    fn towers(&mut self) {
        for comp in self.components() {
            let b = BoundingBox::of(&comp);
            if b.width() < 3 && b.height() >= 3 {
                self.report.bump(ConceptKind::Tower, 1);
                self.claim(ConceptKind::Tower, comp);
            }
        }
    }

    /// The lowest supported column of free structural cells in `c`, with
    /// open space above it, as `(top_row, bottom_row)`.
    fn column_stack(&self, c: usize) -> Option<(usize, usize)> {
        let h = self.h();
        let bottom = (0..h).rev().find(|&r| {
            self.free_structural(r, c) && (r == h - 1 || self.solid_at(r as isize + 1, c as isize))
        })?;
        let mut top = bottom;
        while top > 0 && self.free_structural(top - 1, c) {
            top -= 1;
        }
        if self.passable_at(top as isize - 1, c as isize) {
            Some((top, bottom))
        } else {
            None
        }
    }

    fn staircases(&mut self, ascending: bool) {
        let (h, w) = (self.h(), self.w());
        let stacks: Vec<Option<(usize, usize)>> = (0..w).map(|c| self.column_stack(c)).collect();
        let height = |c: usize| stacks[c].map(|(top, _)| (h - top) as isize);
        let step: isize = if ascending { 1 } else { -1 };
        let kind = if ascending {
            ConceptKind::AscendingStaircase
        } else {
            ConceptKind::DescendingStaircase
        };
        let mut i = 0;
        while i < w {
            let Some(mut prev) = height(i) else {
                i += 1;
                continue;
            };
            let mut j = i;
            while j + 1 < w {
                match height(j + 1) {
                    Some(next) if next == prev + step => {
                        prev = next;
                        j += 1;
                    }
                    _ => break,
                }
            }
            if j - i + 1 >= 3 {
                let mut cells = Vec::new();
                for (c, stack) in stacks.iter().enumerate().take(j + 1).skip(i) {
                    let (top, bottom) = stack.expect("run columns have stacks");
                    cells.extend((top..=bottom).map(|r| (r, c)));
                }
                cells.sort_unstable();
                self.report.bump(kind, 1);
                self.claim(kind, cells);
                i = j + 1;
            } else {
                i += 1;
            }
        }
    }

    fn clusters(&mut self) {
        for comp in self.components() {
            let b = BoundingBox::of(&comp);
            if b.width() >= 2 && b.height() >= 2 && comp.len() == b.area() {
                self.report.bump(ConceptKind::RectangularCluster, 1);
                self.claim(ConceptKind::RectangularCluster, comp);
            } else if comp.len() >= 3 {
                self.report.bump(ConceptKind::IrregularCluster, 1);
                self.claim(ConceptKind::IrregularCluster, comp);
            } else {
                for cell in comp {
                    self.report.bump(ConceptKind::LooseBlock, 1);
                    self.claim(ConceptKind::LooseBlock, vec![cell]);
                }
            }
        }
    }

    /// Pipe tiles that no valid pipe claimed, grouped 4-connectedly.
    fn broken_pipes(&mut self) {
        let (h, w) = (self.h(), self.w());
        let loose = |s: &Self, r: usize, c: usize| s.free(r, c) && s.grid.get(r, c).is_pipe();
        let mut seen = vec![false; h * w];
        for r in 0..h {
            for c in 0..w {
                if seen[r * w + c] || !loose(self, r, c) {
                    continue;
                }
                let mut comp = Vec::new();
                let mut stack = vec![(r, c)];
                seen[r * w + c] = true;
                while let Some((cr, cc)) = stack.pop() {
                    comp.push((cr, cc));
                    for (nr, nc) in [
                        (cr.wrapping_sub(1), cc),
                        (cr + 1, cc),
                        (cr, cc.wrapping_sub(1)),
                        (cr, cc + 1),
                    ] {
                        if nr < h && nc < w && !seen[nr * w + nc] && loose(self, nr, nc) {
                            seen[nr * w + nc] = true;
                            stack.push((nr, nc));
                        }
                    }
                }
                comp.sort_unstable();
                self.report.bump(ConceptKind::BrokenPipe, 1);
                self.claim(ConceptKind::BrokenPipe, comp);
            }
        }
    }
}

struct BoundingBox {
    top: usize,
    bottom: usize,
    left: usize,
    right: usize,
}

impl BoundingBox {
    fn of(cells: &[(usize, usize)]) -> Self {
        let mut b = BoundingBox {
            top: usize::MAX,
            bottom: 0,
            left: usize::MAX,
            right: 0,
        };
        for &(r, c) in cells {
            b.top = b.top.min(r);
            b.bottom = b.bottom.max(r);
            b.left = b.left.min(c);
            b.right = b.right.max(c);
        }
        b
    }

    fn width(&self) -> usize {
        self.right - self.left + 1
    }

    fn height(&self) -> usize {
        self.bottom - self.top + 1
    }

    fn area(&self) -> usize {
        self.width() * self.height()
    }
}

/// Number of maximal runs of `value` in `cells`.
fn count_runs(cells: &[bool], value: bool) -> u32 {
    let mut runs = 0;
    let mut inside = false;
    for &v in cells {
        if v == value && !inside {
            runs += 1;
        }
        inside = v == value;
    }
    runs
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Builds a 16-row scene from the bottom-most rows given; rows above are sky.
    pub(crate) fn scene(bottom_rows: &[&str]) -> TileGrid {
        let w = bottom_rows[0].len();
        let mut rows = vec!["-".repeat(w); SCENE_HEIGHT - bottom_rows.len()];
        rows.extend(bottom_rows.iter().map(|s| s.to_string()));
        TileGrid::from_rows(&rows).unwrap()
    }

    fn nonzero(r: &ConceptReport) -> Vec<(ConceptKind, u32)> {
        r.counts
            .iter()
            .filter(|(_, &n)| n > 0)
            .map(|(&k, &n)| (k, n))
            .collect()
    }

    #[test]
    fn empty_scene() {
        let r = detect(&TileGrid::new(16, 16)).unwrap();
        assert!(nonzero(&r).is_empty());
        assert_eq!(r.floor, FloorState::None);
        assert_eq!(r.ceiling, CeilingState::None);
    }

    #[test]
    fn bad_height() {
        assert_eq!(
            detect(&TileGrid::new(14, 16)).unwrap_err(),
            DetectError::BadHeight {
                expected: 16,
                got: 14
            }
        );
    }

    #[test]
    fn floor_with_enemy() {
        let s = scene(&["-----E----------", "XXXXXXXXXXXXXXXX"]);
        let r = detect(&s).unwrap();
        assert_eq!(r.floor, FloorState::Full);
        assert_eq!(
            nonzero(&r),
            vec![(ConceptKind::Floor, 1), (ConceptKind::Enemy, 1)]
        );
    }

    #[test]
    fn two_row_ground_is_all_floor() {
        let s = scene(&["XXXXXXXXXXXXXXXX", "XXXXXXXXXXXXXXXX"]);
        let r = detect(&s).unwrap();
        assert_eq!(nonzero(&r), vec![(ConceptKind::Floor, 1)]);
    }

    #[test]
    fn floor_gaps_and_giant_gap() {
        let r = detect(&scene(&["XXX--XXXXX-XXXXX"])).unwrap();
        assert_eq!(r.floor, FloorState::Gaps(2));
        // 8 missing of 16 is exactly half: still gaps
        let r = detect(&scene(&["XXXX--------XXXX"])).unwrap();
        assert_eq!(r.floor, FloorState::Gaps(1));
        let r = detect(&scene(&["XX---X-------XX-"])).unwrap();
        assert_eq!(r.floor, FloorState::GiantGap(3));
    }

    #[test]
    fn ceiling_needs_half_a_row() {
        let mut rows = vec!["-".repeat(16); 16];
        rows[3] = "XXXXXXXX--------".into();
        let r = detect(&TileGrid::from_rows(&rows).unwrap()).unwrap();
        assert_eq!(r.ceiling, CeilingState::Gaps(1));
        rows[3] = "XXXXXXX---------".into();
        let r = detect(&TileGrid::from_rows(&rows).unwrap()).unwrap();
        assert_eq!(r.ceiling, CeilingState::None);
        // a 7-wide row under no ceiling is a platform
        assert_eq!(r.count(ConceptKind::Platform), 1);
        rows[3] = "X".repeat(16);
        let r = detect(&TileGrid::from_rows(&rows).unwrap()).unwrap();
        assert_eq!(r.ceiling, CeilingState::Full);
        assert_eq!(r.count(ConceptKind::Platform), 0);
    }

    #[test]
    fn pipe_on_floor() {
        let s = scene(&[
            "-----<>---------",
            "-----[]---------",
            "-----[]---------",
            "XXXXXXXXXXXXXXXX",
            "XXXXXXXXXXXXXXXX",
        ]);
        let r = detect(&s).unwrap();
        assert_eq!(
            nonzero(&r),
            vec![(ConceptKind::Floor, 1), (ConceptKind::Pipe, 1)]
        );
    }

    #[test]
    fn pipe_to_bottom_of_screen_over_gap() {
        let s = scene(&["XX--<>--XX", "XX--[]--XX", "XX--[]--XX"]);
        let r = detect(&s).unwrap();
        assert_eq!(r.count(ConceptKind::Pipe), 1);
        assert_eq!(r.count(ConceptKind::BrokenPipe), 0);
    }

    #[test]
    fn pipe_cut_by_scene_edge_is_not_broken() {
        let s = scene(&[">--------------<", "]--------------[", "XXXXXXXXXXXXXXXX"]);
        let r = detect(&s).unwrap();
        assert_eq!(r.count(ConceptKind::Pipe), 2);
        assert_eq!(r.count(ConceptKind::BrokenPipe), 0);
    }

    #[test]
    fn floating_pipe_is_broken() {
        let s = scene(&[
            "------<>--------",
            "------[]--------",
            "----------------",
            "XXXXXXXXXXXXXXXX",
        ]);
        let r = detect(&s).unwrap();
        assert_eq!(r.count(ConceptKind::Pipe), 0);
        assert_eq!(r.count(ConceptKind::BrokenPipe), 1);
    }

    #[test]
    fn lone_cap_is_broken() {
        let mut g = TileGrid::new(16, 16);
        g.set(8, 8, TileKind::PipeTopLeft);
        let r = detect(&g).unwrap();
        assert_eq!(r.count(ConceptKind::BrokenPipe), 1);
    }

    #[test]
    fn upside_down_pipe_from_top() {
        let mut rows = vec!["-".repeat(16); 16];
        for row in rows.iter_mut().take(5) {
            *row = "------[]--------".into();
        }
        rows[5] = "------<>--------".into();
        let r = detect(&TileGrid::from_rows(&rows).unwrap()).unwrap();
        assert_eq!(r.count(ConceptKind::UpsideDownPipe), 1);
        assert_eq!(r.count(ConceptKind::Pipe), 0);
        assert_eq!(r.count(ConceptKind::BrokenPipe), 0);
    }

    #[test]
    fn cannons_and_broken_cannons() {
        let s = scene(&[
            "--B-------------",
            "--b--------b----",
            "--b--------b----",
            "XXXXXXXXXXXXXXXX",
        ]);
        let r = detect(&s).unwrap();
        assert_eq!(r.count(ConceptKind::Cannon), 1);
        assert_eq!(r.count(ConceptKind::BrokenCannon), 1);
        // a bare cannon top with no support is still a cannon
        let r = detect(&scene(&["-B-B------------", "XXXXXXXXXXXXXXXX"])).unwrap();
        assert_eq!(r.count(ConceptKind::Cannon), 2);
        assert_eq!(r.count(ConceptKind::BrokenCannon), 0);
    }

    #[test]
    fn coins_and_lines() {
        let s = scene(&["-oo--ooo---o----", "----------------"]);
        let r = detect(&s).unwrap();
        assert_eq!(r.count(ConceptKind::Coin), 6);
        assert_eq!(r.count(ConceptKind::CoinLine), 2);
    }

    #[test]
    fn platform_with_question_blocks() {
        let s = scene(&[
            "-------?--------",
            "----------------",
            "----------------",
            "----------------",
            "----S?S?S-------",
            "----------------",
            "----------------",
            "----------------",
            "XXXXXXXXXXXXXXXX",
            "XXXXXXXXXXXXXXXX",
        ]);
        let r = detect(&s).unwrap();
        assert_eq!(r.count(ConceptKind::Platform), 1);
        assert_eq!(r.count(ConceptKind::QuestionBlock), 3);
        assert_eq!(r.count(ConceptKind::LooseBlock), 0);
    }

    #[test]
    fn blocked_run_is_not_a_platform() {
        let s = scene(&[
            "-----X----------",
            "----XXX---------",
            "----------------",
            "XXXXXXXXXXXXXXXX",
        ]);
        let r = detect(&s).unwrap();
        assert_eq!(r.count(ConceptKind::Platform), 0);
        assert_eq!(r.count(ConceptKind::IrregularCluster), 1);
    }

    #[test]
    fn tower() {
        let s = scene(&[
            "--XX------------",
            "--XX------------",
            "--XX------------",
            "XXXXXXXXXXXXXXXX",
            "XXXXXXXXXXXXXXXX",
        ]);
        let r = detect(&s).unwrap();
        assert_eq!(r.count(ConceptKind::Tower), 1);
        assert_eq!(r.count(ConceptKind::RectangularCluster), 0);
    }

    #[test]
    fn staircases() {
        let s = scene(&[
            "---X-------X----",
            "--XX-------XX---",
            "-XXX-------XXX--",
            "XXXXXXXXXXXXXXXX",
            "XXXXXXXXXXXXXXXX",
        ]);
        let r = detect(&s).unwrap();
        assert_eq!(r.count(ConceptKind::AscendingStaircase), 1);
        assert_eq!(r.count(ConceptKind::DescendingStaircase), 1);
        assert_eq!(r.count(ConceptKind::Tower), 0);
        assert_eq!(r.count(ConceptKind::IrregularCluster), 0);
    }

    #[test]
    fn pyramid_splits_into_one_staircase_each_way() {
        let s = scene(&[
            "----XX----------",
            "---XXXX---------",
            "--XXXXXX--------",
            "XXXXXXXXXXXXXXXX",
            "XXXXXXXXXXXXXXXX",
        ]);
        let r = detect(&s).unwrap();
        assert_eq!(r.count(ConceptKind::AscendingStaircase), 1);
        assert_eq!(r.count(ConceptKind::DescendingStaircase), 1);
    }

    #[test]
    fn short_rise_is_not_a_staircase() {
        let s = scene(&[
            "--X-------------",
            "-XX-------------",
            "XXXXXXXXXXXXXXXX",
            "XXXXXXXXXXXXXXXX",
        ]);
        let r = detect(&s).unwrap();
        assert_eq!(r.count(ConceptKind::AscendingStaircase), 0);
        assert_eq!(r.count(ConceptKind::IrregularCluster), 1);
    }

    #[test]
    fn clusters_and_loose_blocks() {
        let s = scene(&[
            "----------------",
            "-XX----X--------",
            "-XX--------S--S-",
            "----------------",
            "-----XX---------",
            "-----X----------",
            "----------------",
        ]);
        let r = detect(&s).unwrap();
        assert_eq!(r.count(ConceptKind::RectangularCluster), 1);
        assert_eq!(r.count(ConceptKind::IrregularCluster), 1);
        assert_eq!(r.count(ConceptKind::LooseBlock), 3);
    }

    #[test]
    fn structures_are_disjoint_and_consistent() {
        let s = scene(&[
            "--------<>--ooo-",
            "--B--XX-[]------",
            "--b-----[]--E---",
            "XXXXXXXXXXXX--XX",
            "XXXXXXXXXXXX--XX",
        ]);
        let r = detect(&s).unwrap();
        let mut seen = std::collections::HashSet::new();
        for st in &r.structures {
            for &cell in &st.cells {
                assert!(seen.insert(cell), "{cell:?} claimed twice");
            }
        }
        assert_eq!(r.count(ConceptKind::Coin), 3);
        assert_eq!(r.floor, FloorState::Gaps(1));
    }
}
