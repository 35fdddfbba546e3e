//! Constructive scene generator.
//!
//! Builds a scene directly from a prompt by stamping whole-structure
//! templates (never half pipes or unsupported cannon bases) onto a canvas,
//! keeping a one-cell halo around every solid structure so the detector sees
//! each one separately. A repair loop then re-captions the scene and edits
//! the worst-matching concept until the caption matches or the iteration
//! budget runs out; the best scene seen is returned.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::caption::{render, Caption, CaptionStyle, PhraseForm, Quantity};
use crate::concepts::{detect, ConceptKind, ConceptReport, DetectError};
use crate::score::{c_score, ScoreBreakdown};
use crate::tiles::{TileGrid, TileKind, SCENE_HEIGHT, SCENE_WIDTH};

pub const MAX_REPAIR_ITERATIONS: usize = 25;
const MAX_EDITS_PER_CONCEPT: usize = 5;
/// Floor layouts sampled when stairs or pipes need room.
const LAYOUT_SAMPLES: usize = 32;
/// Fresh layouts tried when repair gets stuck.
const MAX_ATTEMPTS: u64 = 6;
const PLACEMENT_TRIES: usize = 400;

const CEILING_ROW: usize = 3;
const STAND_ROW: usize = 13;
const FLOOR_TOP: usize = 14;
const AIR_TOP: usize = 5;
const AIR_BOTTOM: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("scene width {0} is below the minimum of {SCENE_WIDTH}")]
    WidthTooSmall(usize),
    #[error(transparent)]
    Detect(#[from] DetectError),
}

/// Output of the constructive generator. `exact` is false when the prompt
/// could not be met in full (too many structures for the width, a floorless
/// prompt asking for floor-standing structures, ...); the scene is then the
/// best-scoring attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generated {
    pub scene: TileGrid,
    pub caption: String,
    pub breakdown: ScoreBreakdown,
    pub iterations: usize,
    pub exact: bool,
}

/// Caption of a scene and its adherence to a prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub caption: String,
    pub breakdown: ScoreBreakdown,
}

pub fn annotate(scene: &TileGrid, prompt: &Caption) -> Result<Annotation, DetectError> {
    let actual = render(&detect(scene)?, CaptionStyle::Regular);
    Ok(Annotation {
        caption: actual.text(),
        breakdown: c_score(prompt, &actual),
    })
}

/// Concrete number of instances to build for a quantity word.
fn pick_count(q: Quantity, rng: &mut ChaCha8Rng) -> u32 {
    match q {
        Quantity::One => 1,
        Quantity::Two => 2,
        Quantity::AFew => rng.random_range(3..=4),
        Quantity::Several => rng.random_range(5..=6),
        Quantity::Many => rng.random_range(10..=12),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Surface {
    Full,
    Gaps(u32),
    GiantGap(u32),
    Absent,
}

#[derive(Debug, Clone)]
struct Targets {
    floor: Surface,
    ceiling: Surface,
    /// Instance counts for everything but floor, ceiling and broken kinds.
    counts: BTreeMap<ConceptKind, u32>,
    forms: BTreeMap<ConceptKind, PhraseForm>,
}

impl Targets {
    fn from_prompt(prompt: &Caption, rng: &mut ChaCha8Rng) -> Targets {
        let forms: BTreeMap<ConceptKind, PhraseForm> = prompt
            .phrases
            .iter()
            .filter(|p| p.form != PhraseForm::Absent)
            .map(|p| (p.concept, p.form))
            .collect();
        let surface = |kind: ConceptKind, rng: &mut ChaCha8Rng| match forms.get(&kind) {
            Some(PhraseForm::Full) => Surface::Full,
            Some(PhraseForm::Gapped(q)) => Surface::Gaps(pick_count(*q, rng)),
            Some(PhraseForm::GiantGap(q)) => Surface::GiantGap(pick_count(*q, rng)),
            _ => Surface::Absent,
        };
        let floor = surface(ConceptKind::Floor, rng);
        let ceiling = surface(ConceptKind::Ceiling, rng);
        let mut counts = BTreeMap::new();
        for kind in ConceptKind::TRAINING
            .into_iter()
            .filter(|k| !k.is_surface())
        {
            let n = match forms.get(&kind) {
                Some(PhraseForm::Present(q)) => pick_count(*q, rng),
                _ => 0,
            };
            counts.insert(kind, n);
        }
        // every coin line is made of coins, so coins must cover the lines
        let lines = counts[&ConceptKind::CoinLine];
        let coins = counts.get_mut(&ConceptKind::Coin).expect("coin target");
        *coins = (*coins).max(2 * lines);
        Targets {
            floor,
            ceiling,
            counts,
            forms,
        }
    }

    fn count(&self, kind: ConceptKind) -> u32 {
        self.counts.get(&kind).copied().unwrap_or(0)
    }

    /// Acceptable range of detected instances for `kind`.
    fn range(&self, kind: ConceptKind) -> (u32, Option<u32>) {
        match self.forms.get(&kind).and_then(|f| f.quantity()) {
            Some(q) => q.range(),
            None => (0, Some(0)),
        }
    }
}

type Shape = Vec<(usize, usize, TileKind)>;

fn shape_dims(shape: &Shape) -> (usize, usize) {
    let h = shape.iter().map(|c| c.0).max().unwrap_or(0) + 1;
    let w = shape.iter().map(|c| c.1).max().unwrap_or(0) + 1;
    (h, w)
}

#[derive(Debug, Clone)]
struct Placement {
    concept: ConceptKind,
    shape: Shape,
    cells: Vec<(usize, usize)>,
    halo: Vec<(usize, usize)>,
    on_floor: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Site {
    Floor,
    Air,
    /// Upside-down pipes hang from the ceiling row or the top edge.
    Hanging,
}

struct Canvas {
    grid: TileGrid,
    reserved: Vec<u16>,
    owner: Vec<Option<usize>>,
    placements: Vec<Option<Placement>>,
    floor: Vec<bool>,
    ceiling: Vec<bool>,
}

impl Canvas {
    fn new(width: usize) -> Self {
        let cells = SCENE_HEIGHT * width;
        Canvas {
            grid: TileGrid::new(SCENE_HEIGHT, width),
            reserved: vec![0; cells],
            owner: vec![None; cells],
            placements: Vec::new(),
            floor: vec![false; width],
            ceiling: vec![false; width],
        }
    }

    fn width(&self) -> usize {
        self.grid.width()
    }

    fn idx(&self, r: usize, c: usize) -> usize {
        r * self.width() + c
    }

    fn is_empty(&self, r: usize, c: usize) -> bool {
        self.grid.get(r, c) == TileKind::Sky && self.owner[self.idx(r, c)].is_none()
    }

    fn set_floor(&mut self, solid: &[bool]) {
        for (c, &s) in solid.iter().enumerate() {
            self.floor[c] = s;
            let tile = if s { TileKind::Ground } else { TileKind::Sky };
            for r in FLOOR_TOP..SCENE_HEIGHT {
                self.grid.set(r, c, tile);
            }
        }
    }

    fn set_ceiling(&mut self, solid: &[bool]) {
        for (c, &s) in solid.iter().enumerate() {
            self.ceiling[c] = s;
            self.grid.set(
                CEILING_ROW,
                c,
                if s { TileKind::Ground } else { TileKind::Sky },
            );
        }
    }

    fn fits(&self, shape: &Shape, top: usize, left: usize, halo: bool) -> bool {
        shape.iter().all(|&(dr, dc, _)| {
            let (r, c) = (top + dr, left + dc);
            r < SCENE_HEIGHT
                && c < self.width()
                && self.is_empty(r, c)
                && (!halo || self.reserved[self.idx(r, c)] == 0)
        })
    }

    fn stamp(
        &mut self,
        concept: ConceptKind,
        shape: Shape,
        top: usize,
        left: usize,
        halo: bool,
        on_floor: bool,
    ) -> usize {
        let id = self.placements.len();
        let mut cells = Vec::with_capacity(shape.len());
        for &(dr, dc, tile) in &shape {
            let (r, c) = (top + dr, left + dc);
            self.grid.set(r, c, tile);
            let i = self.idx(r, c);
            self.owner[i] = Some(id);
            cells.push((r, c));
        }
        let mut ring = Vec::new();
        if halo {
            for &(r, c) in &cells {
                for dr in -1isize..=1 {
                    for dc in -1isize..=1 {
                        let (nr, nc) = (r as isize + dr, c as isize + dc);
                        if nr < 0
                            || nc < 0
                            || nr as usize >= SCENE_HEIGHT
                            || nc as usize >= self.width()
                        {
                            continue;
                        }
                        let cell = (nr as usize, nc as usize);
                        if !cells.contains(&cell) && !ring.contains(&cell) {
                            ring.push(cell);
                        }
                    }
                }
            }
            for &(r, c) in cells.iter().chain(ring.iter()) {
                let i = self.idx(r, c);
                self.reserved[i] += 1;
            }
        }
        self.placements.push(Some(Placement {
            concept,
            shape,
            cells,
            halo: ring,
            on_floor,
        }));
        id
    }

    fn remove(&mut self, id: usize) -> Option<Placement> {
        let p = self.placements.get_mut(id)?.take()?;
        let haloed = !p.halo.is_empty();
        for &(r, c) in &p.cells {
            let i = self.idx(r, c);
            if self.owner[i] == Some(id) {
                self.owner[i] = None;
                self.grid.set(r, c, TileKind::Sky);
            }
            if haloed {
                self.reserved[i] -= 1;
            }
        }
        for &(r, c) in &p.halo {
            let i = self.idx(r, c);
            self.reserved[i] -= 1;
        }
        Some(p)
    }

    fn live(&self, concept: ConceptKind) -> Vec<usize> {
        self.placements
            .iter()
            .enumerate()
            .filter(|(_, p)| p.as_ref().is_some_and(|p| p.concept == concept))
            .map(|(i, _)| i)
            .collect()
    }

    fn has_floor(&self, left: usize, width: usize) -> bool {
        (left..left + width).all(|c| self.floor[c])
    }
}

/// Lays out `n` runs of `gap` cells in a row of `width`, keeping at least
/// `min_solid_share` of the row solid unless `giant` (then strictly less than
/// half is solid). Returns the solid mask; `n` is clamped to what fits.
/// How many of `items` (widths, largest first) pack into the solid runs of
/// `solid`, with one free column between neighbours.
fn floor_fit(solid: &[bool], items: &[usize]) -> usize {
    let mut runs: Vec<usize> = solid
        .chunk_by(|a, b| a == b)
        .filter(|run| run[0])
        .map(<[bool]>::len)
        .collect();
    let mut fit = 0;
    for &item in items {
        if let Some(run) = runs.iter_mut().find(|r| **r >= item) {
            *run = run.saturating_sub(item + 1);
            fit += 1;
        }
    }
    fit
}

/// `demand` is how many solid columns floor-standing structures would like;
/// giant-gap chunks grow toward it.
fn surface_layout(
    width: usize,
    n: u32,
    giant: bool,
    demand: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<bool> {
    let n = n.max(1) as usize;
    if giant {
        // n solid chunks with more than half the row missing
        let max_chunks = (width - 1) / 2;
        let n = n.min(max_chunks.max(1));
        let solid_budget = (width - 1) / 2;
        let mut chunks = vec![1usize; n];
        let mut spare = solid_budget.saturating_sub(n);
        for chunk in chunks.iter_mut() {
            let grow = rng.random_range(0..=spare.min(2));
            *chunk += grow;
            spare -= grow;
        }
        // widen the biggest chunk so stairs and pipes have somewhere to stand
        while spare > 0 && chunks.iter().sum::<usize>() < demand {
            let k = (0..n).max_by_key(|&k| chunks[k]).expect("n >= 1");
            chunks[k] += 1;
            spare -= 1;
        }
        let missing = width - chunks.iter().sum::<usize>();
        // separators between chunks get one cell each, the rest spread out
        let mut slots = vec![0usize; n + 1];
        for s in slots.iter_mut().take(n).skip(1) {
            *s = 1;
        }
        let mut left_over = missing - (n - 1);
        while left_over > 0 {
            let k = rng.random_range(1..=n);
            slots[k] += 1;
            left_over -= 1;
        }
        let mut row = Vec::with_capacity(width);
        for (i, chunk) in chunks.iter().enumerate() {
            row.extend(std::iter::repeat_n(false, slots[i]));
            row.extend(std::iter::repeat_n(true, *chunk));
        }
        row.extend(std::iter::repeat_n(false, slots[n]));
        row
    } else {
        // n gaps, at most half the row missing, solid first column
        let n = n.min(width / 2);
        let gap_budget = width / 2;
        let mut gaps = vec![1usize; n];
        let mut spare = gap_budget - n;
        for g in gaps.iter_mut() {
            let grow = rng.random_range(0..=spare.min(2));
            *g += grow;
            spare -= grow;
        }
        let solid = width - gaps.iter().sum::<usize>();
        let mut slots = vec![1usize; n + 1];
        slots[n] = 0;
        let mut left_over = solid - n;
        while left_over > 0 {
            let k = rng.random_range(0..=n);
            slots[k] += 1;
            left_over -= 1;
        }
        let mut row = Vec::with_capacity(width);
        for (i, gap) in gaps.iter().enumerate() {
            row.extend(std::iter::repeat_n(true, slots[i]));
            row.extend(std::iter::repeat_n(false, *gap));
        }
        row.extend(std::iter::repeat_n(true, slots[n]));
        row
    }
}

struct Builder {
    rng: ChaCha8Rng,
    targets: Targets,
    canvas: Canvas,
}

impl Builder {
    fn build(&mut self) {
        self.canvas = Canvas::new(self.canvas.width());
        self.build_floor();
        self.build_ceiling();
        for kind in [
            ConceptKind::AscendingStaircase,
            ConceptKind::DescendingStaircase,
            ConceptKind::Pipe,
            ConceptKind::UpsideDownPipe,
            ConceptKind::Tower,
            ConceptKind::Cannon,
            ConceptKind::RectangularCluster,
            ConceptKind::IrregularCluster,
            ConceptKind::Platform,
            ConceptKind::LooseBlock,
            ConceptKind::QuestionBlock,
        ] {
            for _ in 0..self.targets.count(kind) {
                self.place(kind);
            }
        }
        self.place_coins();
        for _ in 0..self.targets.count(ConceptKind::Enemy) {
            self.place(ConceptKind::Enemy);
        }
    }

    fn build_floor(&mut self) {
        let w = self.canvas.width();
        let solid = match self.targets.floor {
            Surface::Full => vec![true; w],
            Surface::Gaps(n) => self.roomiest_layout(w, n, false),
            Surface::GiantGap(n) => self.roomiest_layout(w, n, true),
            Surface::Absent => vec![false; w],
        };
        self.canvas.set_floor(&solid);
    }

    /// Samples a few gapped floors and keeps the first one with room for the
    /// most floor-standing structures.
    fn roomiest_layout(&mut self, w: usize, n: u32, giant: bool) -> Vec<bool> {
        let stairs = self.targets.count(ConceptKind::AscendingStaircase)
            + self.targets.count(ConceptKind::DescendingStaircase);
        let mut items = vec![3; stairs as usize];
        items.extend(std::iter::repeat_n(
            2,
            self.targets.count(ConceptKind::Pipe) as usize,
        ));
        let demand = if giant { self.floor_demand() } else { 0 };
        let mut best = surface_layout(w, n, giant, demand, &mut self.rng);
        if items.is_empty() {
            return best;
        }
        let mut best_fit = floor_fit(&best, &items);
        // fewer chunks or gaps, within the same quantity word, leave wider runs
        let lo = Quantity::from_count(n).map_or(n, |q| q.range().0);
        for _ in 0..LAYOUT_SAMPLES {
            if best_fit == items.len() {
                break;
            }
            let n = self.rng.random_range(lo..=n);
            let row = surface_layout(w, n, giant, demand, &mut self.rng);
            let fit = floor_fit(&row, &items);
            if fit > best_fit {
                best = row;
                best_fit = fit;
            }
        }
        best
    }

    fn build_ceiling(&mut self) {
        let w = self.canvas.width();
        let solid = match self.targets.ceiling {
            Surface::Full => vec![true; w],
            Surface::Gaps(n) => {
                // ceilings may be gapped at either edge
                let mut row = surface_layout(w, n, false, 0, &mut self.rng);
                if self.rng.random_bool(0.5) {
                    row.reverse();
                }
                row
            }
            _ => vec![false; w],
        };
        self.canvas.set_ceiling(&solid);
    }

    fn shape_for(&mut self, kind: ConceptKind) -> Option<(Shape, Vec<Site>)> {
        use TileKind::*;
        let rng = &mut self.rng;
        let floor_first = |rng: &mut ChaCha8Rng| {
            if rng.random_bool(0.5) {
                vec![Site::Floor, Site::Air]
            } else {
                vec![Site::Air, Site::Floor]
            }
        };
        Some(match kind {
            ConceptKind::AscendingStaircase | ConceptKind::DescendingStaircase => {
                let len = if rng.random_bool(0.7) { 3 } else { 4 };
                let mut shape = Vec::new();
                for i in 0..len {
                    let col = if kind == ConceptKind::AscendingStaircase {
                        i
                    } else {
                        len - 1 - i
                    };
                    for r in (len - 1 - i)..len {
                        shape.push((r, col, Ground));
                    }
                }
                (shape, vec![Site::Floor])
            }
            ConceptKind::Pipe => {
                let h = rng.random_range(2..=4);
                let mut shape = vec![(0, 0, PipeTopLeft), (0, 1, PipeTopRight)];
                for r in 1..h {
                    shape.push((r, 0, PipeLeft));
                    shape.push((r, 1, PipeRight));
                }
                (shape, vec![Site::Floor])
            }
            ConceptKind::UpsideDownPipe => {
                let neck = rng.random_range(1..=2);
                let mut shape = Vec::new();
                for r in 0..neck {
                    shape.push((r, 0, PipeLeft));
                    shape.push((r, 1, PipeRight));
                }
                shape.push((neck, 0, PipeTopLeft));
                shape.push((neck, 1, PipeTopRight));
                (shape, vec![Site::Hanging])
            }
            ConceptKind::Tower => {
                let h = rng.random_range(3..=4);
                let tile = if rng.random_bool(0.5) {
                    Ground
                } else {
                    Breakable
                };
                ((0..h).map(|r| (r, 0, tile)).collect(), floor_first(rng))
            }
            ConceptKind::Cannon => {
                let support = rng.random_range(0..=2);
                let mut shape = vec![(0, 0, CannonTop)];
                shape.extend((1..=support).map(|r| (r, 0, CannonSupport)));
                (shape, floor_first(rng))
            }
            ConceptKind::RectangularCluster => {
                let w = rng.random_range(2..=3);
                let tile = if rng.random_bool(0.5) {
                    Ground
                } else {
                    Breakable
                };
                let shape = (0..2)
                    .flat_map(|r| (0..w).map(move |c| (r, c, tile)))
                    .collect();
                (shape, floor_first(rng))
            }
            ConceptKind::IrregularCluster => {
                let tile = if rng.random_bool(0.5) {
                    Ground
                } else {
                    Breakable
                };
                let missing = rng.random_range(0..4);
                let shape: Shape = [(0, 0), (0, 1), (1, 0), (1, 1)]
                    .into_iter()
                    .enumerate()
                    .filter(|&(i, _)| i != missing)
                    .map(|(_, (r, c))| (r, c, tile))
                    .collect();
                // only shapes with a full bottom row can rest on the floor
                let sites = if missing < 2 {
                    floor_first(rng)
                } else {
                    vec![Site::Air]
                };
                (shape, sites)
            }
            ConceptKind::Platform => {
                let len = rng.random_range(2..=4);
                let tile = if rng.random_bool(0.7) {
                    Breakable
                } else {
                    Ground
                };
                ((0..len).map(|c| (0, c, tile)).collect(), vec![Site::Air])
            }
            ConceptKind::LooseBlock => {
                let tile = if rng.random_bool(0.5) {
                    Ground
                } else {
                    Breakable
                };
                (vec![(0, 0, tile)], floor_first(rng))
            }
            ConceptKind::QuestionBlock => {
                let tile = if rng.random_bool(0.8) {
                    QuestionBlock
                } else {
                    UsedQuestionBlock
                };
                (vec![(0, 0, tile)], vec![Site::Air])
            }
            _ => return None,
        })
    }

    fn candidates(&mut self, shape: &Shape, site: Site) -> Vec<(usize, usize)> {
        let (h, w) = shape_dims(shape);
        let width = self.canvas.width();
        if w > width {
            return Vec::new();
        }
        let lefts = 0..=width - w;
        let mut out: Vec<(usize, usize)> = match site {
            Site::Floor => {
                let top = STAND_ROW + 1 - h;
                lefts
                    .filter(|&l| self.canvas.has_floor(l, w))
                    .map(|l| (top, l))
                    .collect()
            }
            Site::Air => {
                let mut v = Vec::new();
                if h <= AIR_BOTTOM + 1 - AIR_TOP {
                    for top in AIR_TOP..=AIR_BOTTOM + 1 - h {
                        for l in lefts.clone() {
                            v.push((top, l));
                        }
                    }
                }
                v
            }
            Site::Hanging => {
                let ceiling = self.targets.ceiling != Surface::Absent;
                let top = if ceiling { CEILING_ROW + 1 } else { 0 };
                lefts
                    .filter(|&l| !ceiling || (self.canvas.ceiling[l] && self.canvas.ceiling[l + 1]))
                    .map(|l| (top, l))
                    .collect()
            }
        };
        out.shuffle(&mut self.rng);
        if site == Site::Floor && self.floor_crowded() {
            // pack left to right so crowded floors fit as many as possible
            out.sort_by_key(|&(top, left)| {
                left > 0 && self.canvas.reserved[self.canvas.idx(top + h - 1, left - 1)] == 0
            });
        }
        out
    }

    /// Floor columns wanted by floor-only structures, halos included.
    fn floor_demand(&self) -> usize {
        let stairs = self.targets.count(ConceptKind::AscendingStaircase)
            + self.targets.count(ConceptKind::DescendingStaircase);
        (5 * stairs + 3 * self.targets.count(ConceptKind::Pipe)) as usize
    }

    /// Whether floor-only structures need more than half the floor.
    fn floor_crowded(&self) -> bool {
        2 * self.floor_demand() > self.canvas.width()
    }

    /// Places one more instance of `kind`; false when nothing fits.
    fn place(&mut self, kind: ConceptKind) -> bool {
        match kind {
            ConceptKind::Enemy => return self.place_enemy(),
            ConceptKind::Coin => return self.place_coin_run(1),
            ConceptKind::CoinLine => {
                let len = self.rng.random_range(2..=4);
                return self.place_coin_run(len);
            }
            _ => {}
        }
        if kind == ConceptKind::UpsideDownPipe && self.targets.ceiling == Surface::Absent {
            // each hanging pipe puts two solids on the ceiling row; stay
            // clear of the half-row threshold
            let hanging = self.canvas.live(kind).len();
            if 2 * (hanging + 1) * 2 >= self.canvas.width() {
                return false;
            }
        }
        for _ in 0..3 {
            let Some((shape, sites)) = self.shape_for(kind) else {
                return false;
            };
            for site in sites {
                for (top, left) in self
                    .candidates(&shape, site)
                    .into_iter()
                    .take(PLACEMENT_TRIES)
                {
                    if self.canvas.fits(&shape, top, left, true) {
                        self.canvas
                            .stamp(kind, shape, top, left, true, site == Site::Floor);
                        return true;
                    }
                }
            }
        }
        false
    }

    fn place_enemy(&mut self) -> bool {
        let mut spots = Vec::new();
        for r in 1..=STAND_ROW {
            for c in 0..self.canvas.width() {
                if self.canvas.is_empty(r, c) && self.canvas.grid.get(r + 1, c).is_solid() {
                    spots.push((r, c));
                }
            }
        }
        // prefer the floor, where enemies usually walk
        spots.shuffle(&mut self.rng);
        spots.sort_by_key(|&(r, _)| r != STAND_ROW);
        if spots.is_empty() {
            // nothing to stand on; enemies may fly
            for r in AIR_TOP..=STAND_ROW {
                for c in 0..self.canvas.width() {
                    if self.canvas.is_empty(r, c) {
                        spots.push((r, c));
                    }
                }
            }
            spots.shuffle(&mut self.rng);
        }
        let Some(&(r, c)) = spots.first() else {
            return false;
        };
        self.canvas.stamp(
            ConceptKind::Enemy,
            vec![(0, 0, TileKind::Enemy)],
            r,
            c,
            false,
            false,
        );
        true
    }

    fn coin_at(&self, r: usize, c: isize) -> bool {
        c >= 0
            && (c as usize) < self.canvas.width()
            && self.canvas.grid.get(r, c as usize) == TileKind::Coin
    }

    fn place_coin_run(&mut self, len: usize) -> bool {
        let width = self.canvas.width();
        if len > width {
            return false;
        }
        let mut spots = Vec::new();
        for r in CEILING_ROW + 1..=STAND_ROW {
            for left in 0..=width - len {
                let free = (left..left + len).all(|c| self.canvas.is_empty(r, c));
                let apart =
                    !self.coin_at(r, left as isize - 1) && !self.coin_at(r, (left + len) as isize);
                if free && apart {
                    spots.push((r, left));
                }
            }
        }
        let Some(&(r, left)) = spots.choose(&mut self.rng) else {
            return false;
        };
        let concept = if len >= 2 {
            ConceptKind::CoinLine
        } else {
            ConceptKind::Coin
        };
        let shape = (0..len).map(|c| (0, c, TileKind::Coin)).collect();
        self.canvas.stamp(concept, shape, r, left, false, false);
        true
    }

    fn place_coins(&mut self) {
        let lines = self.targets.count(ConceptKind::CoinLine) as usize;
        let total = self.targets.count(ConceptKind::Coin) as usize;
        let mut lengths = vec![2usize; lines];
        let mut extra = total.saturating_sub(2 * lines);
        // grow lines first, up to five coins each
        for len in lengths.iter_mut() {
            let grow = self.rng.random_range(0..=extra.min(3));
            *len += grow;
            extra -= grow;
        }
        for len in lengths {
            self.place_coin_run(len);
        }
        for _ in 0..extra {
            self.place_coin_run(1);
        }
    }

    fn coins_on_canvas(&self) -> usize {
        self.canvas.grid.count(TileKind::Coin)
    }

    /// One targeted edit for a mismatching concept. Returns false when no
    /// edit applies.
    fn repair(&mut self, kind: ConceptKind, report: &ConceptReport) -> bool {
        if kind.is_surface() {
            self.build();
            return true;
        }
        if kind.is_integrity_defect() {
            let cells: Vec<(usize, usize)> = report
                .structures_of(kind)
                .flat_map(|s| s.cells.clone())
                .collect();
            return self.relocate_owners(kind, &cells);
        }
        let actual = report.count(kind);
        let (lo, hi) = self.targets.range(kind);
        let want = self.targets.count(kind).clamp(lo, hi.unwrap_or(u32::MAX));
        let want = if kind == ConceptKind::Coin {
            want.max(lo)
        } else {
            want
        };
        if actual < lo {
            let mut placed = false;
            for _ in actual..want.max(lo) {
                placed |= self.place(kind);
            }
            if !placed {
                placed = self.evict_for(kind, report);
            }
            if !placed {
                // make room by moving what is already there
                let ids = self.canvas.live(kind);
                if let Some(&id) = ids.choose(&mut self.rng) {
                    self.respawn(id);
                    return true;
                }
            }
            return placed;
        }
        if hi.is_some_and(|hi| actual > hi) {
            let excess = (actual - want) as usize;
            if kind == ConceptKind::Coin {
                return self.trim_coins(excess);
            }
            let mut ids = self.canvas.live(kind);
            let mut removed = 0;
            while removed < excess {
                let Some(id) = ids.pop() else { break };
                self.canvas.remove(id);
                removed += 1;
            }
            if removed > 0 {
                return true;
            }
            // nothing of ours to remove: the extra instances emerged from
            // neighbouring structures, so move those
            let cells: Vec<(usize, usize)> = report
                .structures_of(kind)
                .flat_map(|s| s.cells.clone())
                .collect();
            return self.relocate_owners(kind, &cells);
        }
        // count is in range, so the form differs; rebuild this concept
        let ids = self.canvas.live(kind);
        if ids.is_empty() {
            return false;
        }
        for id in ids {
            self.respawn(id);
        }
        true
    }

    /// Places `kind` by displacing another placement: first one whose concept
    /// has instances to spare, then (for floor-only structures) anything
    /// standing on the floor that could stand elsewhere. The displaced piece is
    /// placed again if possible, and restored if `kind` still does not fit.
    fn evict_for(&mut self, kind: ConceptKind, report: &ConceptReport) -> bool {
        let floor_only = |k: ConceptKind| {
            matches!(
                k,
                ConceptKind::AscendingStaircase
                    | ConceptKind::DescendingStaircase
                    | ConceptKind::Pipe
            )
        };
        let mut spare = Vec::new();
        let mut on_floor = Vec::new();
        for (id, p) in self.canvas.placements.iter().enumerate() {
            let Some(p) = p else { continue };
            if p.concept == kind || matches!(p.concept, ConceptKind::Coin | ConceptKind::CoinLine) {
                continue;
            }
            if report.count(p.concept) > self.targets.range(p.concept).0 {
                spare.push(id);
            } else if floor_only(kind) && p.on_floor && !floor_only(p.concept) {
                on_floor.push(id);
            }
        }
        spare.shuffle(&mut self.rng);
        on_floor.shuffle(&mut self.rng);
        for id in spare.into_iter().chain(on_floor) {
            let Some(old) = self.canvas.remove(id) else {
                continue;
            };
            if self.place(kind) {
                if !self.place(old.concept) {
                    log::debug!("displaced {} could not be placed again", old.concept.name());
                }
                return true;
            }
            let (top, left) = old
                .cells
                .iter()
                .fold((usize::MAX, usize::MAX), |(t, l), &(r, c)| {
                    (t.min(r), l.min(c))
                });
            let halo = !old.halo.is_empty();
            self.canvas
                .stamp(old.concept, old.shape, top, left, halo, old.on_floor);
        }
        false
    }

    fn trim_coins(&mut self, mut excess: usize) -> bool {
        let mut changed = false;
        for id in self.canvas.live(ConceptKind::Coin).into_iter().rev() {
            if excess == 0 {
                break;
            }
            self.canvas.remove(id);
            excess -= 1;
            changed = true;
        }
        // shorten long lines
        for id in self.canvas.live(ConceptKind::CoinLine) {
            if excess == 0 {
                break;
            }
            let p = self.canvas.placements[id].clone().expect("live placement");
            if p.cells.len() > 2 {
                let keep = (p.cells.len() - excess).max(2);
                excess -= p.cells.len() - keep;
                let (top, left) = p.cells[0];
                self.canvas.remove(id);
                let shape = (0..keep).map(|c| (0, c, TileKind::Coin)).collect();
                self.canvas
                    .stamp(ConceptKind::CoinLine, shape, top, left, false, false);
                changed = true;
            }
        }
        changed || self.coins_on_canvas() == 0
    }

    /// Moves every placement owning one of `cells`, or clears unowned cells.
    fn relocate_owners(&mut self, kind: ConceptKind, cells: &[(usize, usize)]) -> bool {
        let mut owners: Vec<usize> = cells
            .iter()
            .filter_map(|&(r, c)| self.canvas.owner[self.canvas.idx(r, c)])
            .collect();
        owners.sort_unstable();
        owners.dedup();
        if owners.is_empty() {
            let mut changed = false;
            for &(r, c) in cells {
                if r < FLOOR_TOP && r != CEILING_ROW {
                    self.canvas.grid.set(r, c, TileKind::Sky);
                    changed = true;
                }
            }
            return changed;
        }
        for id in owners {
            let concept = self.canvas.placements[id].as_ref().map(|p| p.concept);
            if concept == Some(kind) {
                self.canvas.remove(id);
            } else {
                self.respawn(id);
            }
        }
        true
    }

    /// Removes a placement and puts a fresh instance of its concept elsewhere.
    fn respawn(&mut self, id: usize) {
        if let Some(p) = self.canvas.remove(id) {
            if p.concept == ConceptKind::CoinLine || p.concept == ConceptKind::Coin {
                self.place_coin_run(p.shape.len());
            } else if !self.place(p.concept) {
                // fall back to the old spot
                let (top, left) = p
                    .cells
                    .iter()
                    .fold((usize::MAX, usize::MAX), |(t, l), &(r, c)| {
                        (t.min(r), l.min(c))
                    });
                let halo = !p.halo.is_empty();
                if self.canvas.fits(&p.shape, top, left, halo) {
                    self.canvas
                        .stamp(p.concept, p.shape, top, left, halo, p.on_floor);
                }
            }
        }
    }
}

fn score_scene(prompt: &Caption, grid: &TileGrid) -> (ConceptReport, Caption, ScoreBreakdown) {
    let report = detect(grid).expect("canvas has scene height");
    let actual = render(&report, CaptionStyle::Regular);
    let breakdown = c_score(prompt, &actual);
    (report, actual, breakdown)
}

/// Independent streams per attempt, so neighbouring seeds do not share
/// their retries. Attempt 0 keeps the base seed.
fn attempt_seed(base: u64, attempt: u64) -> u64 {
    if attempt == 0 {
        return base;
    }
    // splitmix64 finaliser
    let mut z = base ^ attempt.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix_seed(seed: u64, width: usize) -> u64 {
    seed ^ (width as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// One build followed by the repair loop. Returns the best scene seen and
/// the number of repair iterations used.
fn build_and_repair(
    prompt: &Caption,
    mut rng: ChaCha8Rng,
    width: usize,
) -> ((TileGrid, Caption, ScoreBreakdown), usize) {
    let targets = Targets::from_prompt(prompt, &mut rng);
    let mut builder = Builder {
        rng,
        targets,
        canvas: Canvas::new(width),
    };
    builder.build();

    let mut edits: BTreeMap<ConceptKind, usize> = BTreeMap::new();
    let (_, caption, breakdown) = score_scene(prompt, &builder.canvas.grid);
    let mut best = (builder.canvas.grid.clone(), caption, breakdown);
    let mut iterations = 0;
    while iterations < MAX_REPAIR_ITERATIONS {
        let (report, caption, breakdown) = score_scene(prompt, &builder.canvas.grid);
        if breakdown.c_score > best.2.c_score {
            best = (builder.canvas.grid.clone(), caption, breakdown.clone());
        }
        if breakdown.c_score >= 1.0 {
            break;
        }
        let target = breakdown
            .diff
            .iter()
            .filter(|d| {
                d.score < 1.0 && edits.get(&d.concept).copied().unwrap_or(0) < MAX_EDITS_PER_CONCEPT
            })
            .min_by(|a, b| a.score.total_cmp(&b.score))
            .map(|d| d.concept);
        let Some(kind) = target else { break };
        iterations += 1;
        *edits.entry(kind).or_insert(0) += 1;
        if !builder.repair(kind, &report) {
            edits.insert(kind, MAX_EDITS_PER_CONCEPT);
        }
    }
    (best, iterations)
}

/// Builds a scene for `prompt`. Deterministic per (prompt meaning, seed,
/// width): phrase order does not matter. Negative-style phrases and broken
/// structures in the prompt are ignored.
pub fn generate_constructive(
    prompt: &Caption,
    seed: u64,
    width: usize,
) -> Result<Generated, GenerateError> {
    if width < SCENE_WIDTH {
        return Err(GenerateError::WidthTooSmall(width));
    }
    let prompt = prompt.canonical();
    let mut best: Option<(TileGrid, Caption, ScoreBreakdown)> = None;
    let mut iterations = 0;
    for attempt in 0..MAX_ATTEMPTS {
        let rng = ChaCha8Rng::seed_from_u64(attempt_seed(mix_seed(seed, width), attempt));
        let (found, used) = build_and_repair(&prompt, rng, width);
        iterations += used;
        let better = best.as_ref().is_none_or(|b| found.2.c_score > b.2.c_score);
        if better {
            best = Some(found);
        }
        if best.as_ref().is_some_and(|b| b.2.c_score >= 1.0) {
            break;
        }
    }
    let (scene, caption, breakdown) = best.expect("at least one attempt");
    Ok(Generated {
        exact: breakdown.c_score >= 1.0,
        caption: caption.text(),
        scene,
        breakdown,
        iterations,
    })
}
