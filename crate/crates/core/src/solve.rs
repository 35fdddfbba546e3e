//! Tile-quantized movement model and A* search deciding whether a scene or a
//! composed level can be crossed from the left edge to the right edge.
//!
//! The agent occupies one cell. It stands on any passable cell with a solid
//! cell directly below; the bottom row never counts as standing because
//! anything that drops there falls out of the level. A jump is a short
//! search over airborne cells: it may rise up to `max_jump_height` rows
//! (straight or diagonally), drift sideways, then fall. The total sideways
//! drift of one jump is capped at `max_gap_clear` columns. Enemies are
//! ignored.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet, VecDeque};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::tiles::{TileGrid, TileKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MoveModel {
    pub max_jump_height: usize,
    pub max_gap_clear: usize,
    /// Bricks ('S') can be passed through mid-air, but still support.
    pub can_break_blocks: bool,
}

impl Default for MoveModel {
    fn default() -> Self {
        MoveModel {
            max_jump_height: 4,
            max_gap_clear: 6,
            can_break_blocks: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SearchState {
    pub column: usize,
    pub row: usize,
}

impl SearchState {
    pub fn new(row: usize, column: usize) -> Self {
        SearchState { column, row }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    /// Nothing to stand on in the leftmost column.
    NoStartPosition,
    /// The search ran out of reachable positions.
    Unreachable,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureReason::NoStartPosition => "no standing position in the leftmost column",
            FailureReason::Unreachable => "right edge is unreachable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveResult {
    pub beatable: bool,
    /// Standing positions visited, ending with the cell where the right edge
    /// was reached (which may be airborne).
    pub path: Option<Vec<SearchState>>,
    /// Every cell the agent passes through along `path`.
    pub route: Option<Vec<SearchState>>,
    /// Number of positions popped from the open set.
    pub expanded: usize,
    pub reason: Option<FailureReason>,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct AirKey {
    row: usize,
    col: usize,
    rise: usize,
    drift: usize,
    falling: bool,
}

struct Hop {
    to: SearchState,
    trail: Vec<SearchState>,
}

struct Reach {
    landings: Vec<Hop>,
    exits: Vec<Hop>,
}

struct Solver<'a> {
    grid: &'a TileGrid,
    model: MoveModel,
}

impl<'a> Solver<'a> {
    fn open(&self, row: isize, col: isize) -> bool {
        match self.grid.at(row, col) {
            Some(t) => t.is_passable() || (self.model.can_break_blocks && t == TileKind::Breakable),
            None => false,
        }
    }

    fn standing(&self, row: usize, col: usize) -> bool {
        row + 1 < self.grid.height()
            && self.grid.get(row, col).is_passable()
            && self.grid.get(row + 1, col).is_solid()
    }

    fn starts(&self) -> Vec<SearchState> {
        (0..self.grid.height())
            .filter(|&r| self.standing(r, 0))
            .map(|r| SearchState::new(r, 0))
            .collect()
    }

    /// Everything reachable from `from` in one ground-or-air move sequence.
    fn reach(&self, from: SearchState) -> Reach {
        let width = self.grid.width();
        let last = width - 1;
        let start = AirKey {
            row: from.row,
            col: from.column,
            rise: 0,
            drift: 0,
            falling: false,
        };
        let mut nodes: Vec<(AirKey, usize)> = vec![(start, usize::MAX)];
        let mut seen = HashSet::from([start]);
        let mut queue = VecDeque::from([0usize]);
        let mut landed = HashSet::new();
        let mut exited = HashSet::new();
        let mut landings = Vec::new();
        let mut exits = Vec::new();

        let trail = |nodes: &Vec<(AirKey, usize)>, mut i: usize| {
            let mut cells = Vec::new();
            while i != usize::MAX {
                let (k, parent) = nodes[i];
                cells.push(SearchState::new(k.row, k.col));
                i = parent;
            }
            cells.reverse();
            cells
        };

        while let Some(i) = queue.pop_front() {
            let k = nodes[i].0;
            let here = (k.row, k.col);
            let moved = here != (from.row, from.column);
            if moved && k.col == last && exited.insert(here) {
                exits.push(Hop {
                    to: SearchState::new(k.row, k.col),
                    trail: trail(&nodes, i),
                });
            }
            let supported = self.standing(k.row, k.col);
            if moved && supported && landed.insert(here) {
                landings.push(Hop {
                    to: SearchState::new(k.row, k.col),
                    trail: trail(&nodes, i),
                });
            }
            if moved && supported && k.falling {
                continue;
            }
            for (dr, dc) in [
                (-1, 0),
                (-1, -1),
                (-1, 1),
                (0, -1),
                (0, 1),
                (1, 0),
                (1, -1),
                (1, 1),
            ] {
                let rising = dr < 0;
                if rising && (k.falling || k.rise >= self.model.max_jump_height) {
                    continue;
                }
                if dc != 0 && k.drift >= self.model.max_gap_clear {
                    continue;
                }
                let (r, c) = (k.row as isize + dr, k.col as isize + dc);
                if !self.open(r, c) {
                    continue;
                }
                if dr != 0
                    && dc != 0
                    && !self.open(k.row as isize + dr, k.col as isize)
                    && !self.open(k.row as isize, c)
                {
                    continue;
                }
                let next = AirKey {
                    row: r as usize,
                    col: c as usize,
                    rise: k.rise + usize::from(rising),
                    drift: k.drift + usize::from(dc != 0),
                    falling: k.falling || dr > 0,
                };
                if seen.insert(next) {
                    nodes.push((next, i));
                    queue.push_back(nodes.len() - 1);
                }
            }
        }
        Reach { landings, exits }
    }
}

fn step_cost(a: SearchState, b: SearchState) -> usize {
    a.column.abs_diff(b.column).max(1)
}

/// Searches for a left-to-right crossing of `grid`.
pub fn solve(grid: &TileGrid, model: &MoveModel) -> SolveResult {
    let solver = Solver {
        grid,
        model: *model,
    };
    let width = grid.width();
    let last = width - 1;
    let starts = solver.starts();
    if starts.is_empty() {
        return SolveResult {
            beatable: false,
            path: None,
            route: None,
            expanded: 0,
            reason: Some(FailureReason::NoStartPosition),
        };
    }

    // node ids: standing cells are row * width + col; the exit is one past
    let cells = grid.height() * width;
    let exit = cells;
    let id = |s: SearchState| s.row * width + s.column;
    let mut best: Vec<usize> = vec![usize::MAX; cells + 1];
    let mut parent: Vec<Option<(usize, Vec<SearchState>)>> = vec![None; cells + 1];
    let mut closed = vec![false; cells + 1];
    let mut exit_at = None;
    let mut open = BinaryHeap::new();
    for s in &starts {
        best[id(*s)] = 0;
        open.push(Reverse((last - s.column, Reverse(s.column), s.row, id(*s))));
    }

    let mut expanded = 0;
    let mut reached = None;
    while let Some(Reverse((_, _, _, node))) = open.pop() {
        if closed[node] {
            continue;
        }
        closed[node] = true;
        expanded += 1;
        if node == exit || node % width == last {
            reached = Some(node);
            break;
        }
        let here = SearchState::new(node / width, node % width);
        let reach = solver.reach(here);
        let g = best[node];
        let hops = reach
            .landings
            .into_iter()
            .map(|hop| (id(hop.to), hop))
            .chain(reach.exits.into_iter().take(1).map(|hop| (exit, hop)));
        for (target, hop) in hops {
            let cost = g + step_cost(here, hop.to);
            if cost < best[target] {
                best[target] = cost;
                if target == exit {
                    exit_at = Some(hop.to);
                }
                parent[target] = Some((node, hop.trail));
                let h = last - hop.to.column;
                open.push(Reverse((
                    cost + h,
                    Reverse(hop.to.column),
                    hop.to.row,
                    target,
                )));
            }
        }
    }

    let Some(goal) = reached else {
        return SolveResult {
            beatable: false,
            path: None,
            route: None,
            expanded,
            reason: Some(FailureReason::Unreachable),
        };
    };

    let mut path = Vec::new();
    let mut trails = Vec::new();
    let mut node = goal;
    loop {
        path.push(if node == exit {
            exit_at.expect("exit reached without a cell")
        } else {
            SearchState::new(node / width, node % width)
        });
        let Some((prev, trail)) = parent[node].take() else {
            break;
        };
        trails.push(trail);
        node = prev;
    }
    path.reverse();
    let mut route = vec![path[0]];
    for trail in trails.into_iter().rev() {
        route.extend(trail.into_iter().skip(1));
    }
    SolveResult {
        beatable: true,
        path: Some(path),
        route: Some(route),
        expanded,
        reason: None,
    }
}

/// Checks that `path` is a valid crossing: starts standing in the leftmost
/// column, every step is a legal move, and it ends in the rightmost column.
pub fn verify_path(grid: &TileGrid, model: &MoveModel, path: &[SearchState]) -> bool {
    let solver = Solver {
        grid,
        model: *model,
    };
    let last = grid.width() - 1;
    let (Some(first), Some(end)) = (path.first(), path.last()) else {
        return false;
    };
    if first.column != 0
        || first.row >= grid.height()
        || !solver.standing(first.row, 0)
        || end.column != last
    {
        return false;
    }
    path.windows(2).all(|pair| {
        let reach = solver.reach(pair[0]);
        reach
            .landings
            .iter()
            .chain(reach.exits.iter())
            .any(|h| h.to == pair[1])
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneVerdict {
    pub beatable: bool,
    pub reason: Option<FailureReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub pct_beatable: f64,
    pub beatable: usize,
    pub total: usize,
    pub per_scene: Vec<SceneVerdict>,
}

/// Solves every scene; `per_scene` keeps input order.
pub fn batch_solvability(scenes: &[TileGrid], model: &MoveModel) -> BatchReport {
    let per_scene: Vec<SceneVerdict> = scenes
        .par_iter()
        .map(|s| {
            let r = solve(s, model);
            SceneVerdict {
                beatable: r.beatable,
                reason: r.reason,
            }
        })
        .collect();
    let beatable = per_scene.iter().filter(|v| v.beatable).count();
    let total = per_scene.len();
    BatchReport {
        pct_beatable: if total == 0 {
            0.0
        } else {
            100.0 * beatable as f64 / total as f64
        },
        beatable,
        total,
        per_scene,
    }
}
