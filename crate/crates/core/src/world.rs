//! Two-bridge terrain, spawn regions and grid pathfinding.
//!
//! The map is a 64×64 cell grid; one cell is one world unit and continuous
//! positions live inside it. A two-cell-wide cliff splits the map at the
//! horizontal center. It is crossable only at two three-cell bridges placed at
//! one third and two thirds of the map height. Six 10×10 spawn rectangles sit
//! on the two halves: R1–R3 on the left (top to bottom) and R4–R6 on the right.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::ops::Range;
use std::sync::{Arc, OnceLock};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Side length of the square map, in cells and world units.
pub const MAP_SIZE: usize = 64;
/// Columns occupied by the cliff band.
pub const CLIFF_COLUMNS: Range<usize> = 31..33;
/// Rows where the cliff is bridged, top bridge first.
pub const BRIDGE_ROWS: [Range<usize>; 2] = [20..23, 41..44];

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// A continuous point in world units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Cell containing this point, or `None` when outside the map.
    pub fn cell(&self) -> Option<Cell> {
        let in_range = |v: f64| v.is_finite() && v >= 0.0 && v < MAP_SIZE as f64;
        if in_range(self.x) && in_range(self.y) {
            Some(Cell::new(self.x.floor() as usize, self.y.floor() as usize))
        } else {
            None
        }
    }

    /// Mean of a set of points; `None` for an empty set.
    pub fn centroid<I: IntoIterator<Item = Position>>(points: I) -> Option<Position> {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        for p in points {
            sx += p.x;
            sy += p.y;
            n += 1;
        }
        (n > 0).then(|| Position::new(sx / n as f64, sy / n as f64))
    }

    /// Moves at most `max_step` toward `target`, never overshooting it.
    pub fn step_toward(&self, target: Position, max_step: f64) -> Position {
        let d = self.distance(&target);
        if d <= max_step {
            target
        } else {
            let k = max_step / d;
            Position::new(self.x + (target.x - self.x) * k, self.y + (target.y - self.y) * k)
        }
    }
}

/// Integer cell coordinate; `x` is the column, `y` the row (row 0 is the top / north edge).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub fn center(&self) -> Position {
        Position::new(self.x as f64 + 0.5, self.y as f64 + 0.5)
    }

    fn index(&self) -> usize {
        self.y * MAP_SIZE + self.x
    }

    fn from_index(idx: usize) -> Self {
        Cell::new(idx % MAP_SIZE, idx / MAP_SIZE)
    }

    fn offset(&self, dx: isize, dy: isize) -> Option<Cell> {
        let x = self.x.checked_add_signed(dx)?;
        let y = self.y.checked_add_signed(dy)?;
        (x < MAP_SIZE && y < MAP_SIZE).then_some(Cell::new(x, y))
    }
}

/// The eight compass directions, indexed 0..8 clockwise from north.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Direction {
    N,
    NE,
    E,
    SE,
    S,
    SW,
    W,
    NW,
}

impl Direction {
    pub const ALL: [Direction; 8] = [
        Direction::N,
        Direction::NE,
        Direction::E,
        Direction::SE,
        Direction::S,
        Direction::SW,
        Direction::W,
        Direction::NW,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(idx: usize) -> Option<Direction> {
        Self::ALL.get(idx).copied()
    }

    /// Integer cell offset; north is -y.
    pub fn offset(self) -> (isize, isize) {
        match self {
            Direction::N => (0, -1),
            Direction::NE => (1, -1),
            Direction::E => (1, 0),
            Direction::SE => (1, 1),
            Direction::S => (0, 1),
            Direction::SW => (-1, 1),
            Direction::W => (-1, 0),
            Direction::NW => (-1, -1),
        }
    }

    /// Unit-length world vector.
    pub fn unit_vector(self) -> (f64, f64) {
        let (dx, dy) = self.offset();
        let norm = if dx != 0 && dy != 0 { SQRT_2 } else { 1.0 };
        (dx as f64 / norm, dy as f64 / norm)
    }

    /// Direction whose unit vector has the largest dot product with `(dx, dy)`;
    /// ties go to the lower index.
    pub fn best_aligned(dx: f64, dy: f64) -> Direction {
        let mut best = Direction::N;
        let mut best_dot = f64::NEG_INFINITY;
        for dir in Self::ALL {
            let (ux, uy) = dir.unit_vector();
            let dot = ux * dx + uy * dy;
            if dot > best_dot {
                best_dot = dot;
                best = dir;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// Spawn region identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RegionId {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
}

impl RegionId {
    pub const ALL: [RegionId; 6] = [
        RegionId::R1,
        RegionId::R2,
        RegionId::R3,
        RegionId::R4,
        RegionId::R5,
        RegionId::R6,
    ];
    pub const LEFT: [RegionId; 3] = [RegionId::R1, RegionId::R2, RegionId::R3];
    pub const RIGHT: [RegionId; 3] = [RegionId::R4, RegionId::R5, RegionId::R6];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn side(self) -> Side {
        if self.index() < 3 {
            Side::Left
        } else {
            Side::Right
        }
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}", self.index() + 1)
    }
}

/// Inclusive axis-aligned rectangle of cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl CellRect {
    pub fn contains_cell(&self, c: Cell) -> bool {
        (self.x0..=self.x1).contains(&c.x) && (self.y0..=self.y1).contains(&c.y)
    }

    pub fn contains(&self, p: Position) -> bool {
        p.cell().is_some_and(|c| self.contains_cell(c))
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (self.y0..=self.y1).flat_map(move |y| (self.x0..=self.x1).map(move |x| Cell::new(x, y)))
    }

    pub fn cell_count(&self) -> usize {
        (self.x1 - self.x0 + 1) * (self.y1 - self.y0 + 1)
    }

    /// Length of the diagonal of the covered world-space area.
    pub fn diagonal(&self) -> f64 {
        ((self.x1 - self.x0 + 1) as f64).hypot((self.y1 - self.y0 + 1) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: RegionId,
    pub bounds: CellRect,
    pub side: Side,
}

/// Passability field of the map plus the bookkeeping needed to reason about the bridges.
#[derive(Debug, Clone, PartialEq)]
pub struct TerrainGrid {
    width: usize,
    height: usize,
    passable: Vec<bool>,
    bridges: [Vec<Cell>; 2],
    cliff_columns: Range<usize>,
    fields: DistanceFields,
}

/// Per-goal shortest-path distance fields, built on first request.
/// Derived data only: clones start empty and equality ignores it.
struct DistanceFields(Box<[OnceLock<Box<[f32]>>]>);

impl DistanceFields {
    fn new(n: usize) -> Self {
        Self((0..n).map(|_| OnceLock::new()).collect())
    }
}

impl Clone for DistanceFields {
    fn clone(&self) -> Self {
        Self::new(self.0.len())
    }
}

impl PartialEq for DistanceFields {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl fmt::Debug for DistanceFields {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let built = self.0.iter().filter(|c| c.get().is_some()).count();
        write!(f, "DistanceFields({built} built)")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("path start {0:?} is not on a passable cell")]
    ImpassableStart(Position),
}

impl TerrainGrid {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cliff_columns(&self) -> Range<usize> {
        self.cliff_columns.clone()
    }

    /// The two bridge cell sets, top bridge first.
    pub fn bridges(&self) -> &[Vec<Cell>; 2] {
        &self.bridges
    }

    pub fn is_bridge(&self, c: Cell) -> bool {
        self.bridges.iter().any(|b| b.contains(&c))
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x < self.width && c.y < self.height
    }

    pub fn is_passable(&self, c: Cell) -> bool {
        self.in_bounds(c) && self.passable[c.index()]
    }

    /// True when `p` lies inside the map on a passable cell.
    pub fn is_passable_pos(&self, p: Position) -> bool {
        p.cell().is_some_and(|c| self.is_passable(c))
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> {
        (0..MAP_SIZE * MAP_SIZE).map(Cell::from_index)
    }

    /// True when every cell touched by the segment `a`–`b` is passable.
    /// Segments that pass exactly through a cell corner must clear both
    /// side cells.
    pub fn segment_clear(&self, a: Position, b: Position) -> bool {
        let (Some(start), Some(_)) = (a.cell(), b.cell()) else {
            return false;
        };
        if !self.is_passable(start) {
            return false;
        }
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let (mut x, mut y) = (start.x as isize, start.y as isize);
        let step_x: isize = if dx > 0.0 { 1 } else { -1 };
        let step_y: isize = if dy > 0.0 { 1 } else { -1 };
        let mut t_max_x = if dx > 0.0 {
            ((x + 1) as f64 - a.x) / dx
        } else if dx < 0.0 {
            (a.x - x as f64) / -dx
        } else {
            f64::INFINITY
        };
        let mut t_max_y = if dy > 0.0 {
            ((y + 1) as f64 - a.y) / dy
        } else if dy < 0.0 {
            (a.y - y as f64) / -dy
        } else {
            f64::INFINITY
        };
        let t_delta_x = if dx != 0.0 { 1.0 / dx.abs() } else { f64::INFINITY };
        let t_delta_y = if dy != 0.0 { 1.0 / dy.abs() } else { f64::INFINITY };
        let open = |x: isize, y: isize| {
            x >= 0 && y >= 0 && self.is_passable(Cell::new(x as usize, y as usize))
        };

        while t_max_x.min(t_max_y) <= 1.0 {
            match t_max_x.partial_cmp(&t_max_y) {
                Some(Ordering::Less) => {
                    x += step_x;
                    t_max_x += t_delta_x;
                }
                Some(Ordering::Greater) => {
                    y += step_y;
                    t_max_y += t_delta_y;
                }
                _ => {
                    if !open(x + step_x, y) || !open(x, y + step_y) {
                        return false;
                    }
                    x += step_x;
                    y += step_y;
                    t_max_x += t_delta_x;
                    t_max_y += t_delta_y;
                }
            }
            if !open(x, y) {
                return false;
            }
        }
        true
    }

    /// A* over 8-connected passable cells. Cardinal steps cost 1, diagonal
    /// steps √2; diagonals may not cut a blocked corner. Frontier ties are
    /// broken by (f, h, cell index).
    pub fn find_cell_path(&self, from: Cell, to: Cell) -> Option<Vec<Cell>> {
        if !self.is_passable(from) || !self.is_passable(to) {
            return None;
        }
        if from == to {
            return Some(vec![from]);
        }
        let n = self.width * self.height;
        let mut g = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        let mut closed = vec![false; n];
        let mut open = BinaryHeap::new();
        let goal = to.index();
        g[from.index()] = 0.0;
        let h0 = octile(from, to);
        open.push(Frontier { f: h0, h: h0, idx: from.index() });

        while let Some(Frontier { idx, .. }) = open.pop() {
            if closed[idx] {
                continue;
            }
            closed[idx] = true;
            if idx == goal {
                let mut path = vec![to];
                let mut cur = idx;
                while parent[cur] != usize::MAX {
                    cur = parent[cur];
                    path.push(Cell::from_index(cur));
                }
                path.reverse();
                return Some(path);
            }
            for (next, step) in self.neighbors(Cell::from_index(idx)) {
                let nidx = next.index();
                if closed[nidx] {
                    continue;
                }
                let cost = g[idx] + step;
                if cost < g[nidx] {
                    g[nidx] = cost;
                    parent[nidx] = idx;
                    let h = octile(next, to);
                    open.push(Frontier { f: cost + h, h, idx: nidx });
                }
            }
        }
        None
    }

    /// Moves from `cell` allowed on the grid graph, with their costs.
    fn neighbors(&self, cell: Cell) -> impl Iterator<Item = (Cell, f64)> + '_ {
        Direction::ALL.into_iter().filter_map(move |dir| {
            let (dx, dy) = dir.offset();
            let next = cell.offset(dx, dy)?;
            if !self.is_passable(next) {
                return None;
            }
            let diagonal = dx != 0 && dy != 0;
            if diagonal
                && !(self.is_passable(Cell::new(next.x, cell.y))
                    && self.is_passable(Cell::new(cell.x, next.y)))
            {
                return None;
            }
            Some((next, if diagonal { SQRT_2 } else { 1.0 }))
        })
    }

    /// Shortest-path cost from every cell to `goal` under the same move rules
    /// as [`find_cell_path`](Self::find_cell_path); infinite where unreachable.
    pub fn distance_field(&self, goal: Cell) -> &[f32] {
        self.fields.0[goal.index()].get_or_init(|| {
            let n = self.width * self.height;
            let mut dist = vec![f64::INFINITY; n];
            let mut open = BinaryHeap::new();
            if self.is_passable(goal) {
                dist[goal.index()] = 0.0;
                open.push(Frontier { f: 0.0, h: 0.0, idx: goal.index() });
            }
            while let Some(Frontier { f, idx, .. }) = open.pop() {
                if f > dist[idx] {
                    continue;
                }
                for (next, cost) in self.neighbors(Cell::from_index(idx)) {
                    let d = f + cost;
                    if d < dist[next.index()] {
                        dist[next.index()] = d;
                        open.push(Frontier { f: d, h: 0.0, idx: next.index() });
                    }
                }
            }
            dist.into_iter().map(|d| d as f32).collect()
        })
    }

    /// First cell after `from` on a shortest path to `to`. `None` when the
    /// two coincide or no path exists. Ties go to the earlier compass
    /// direction.
    pub fn next_cell_toward(&self, from: Cell, to: Cell) -> Option<Cell> {
        if from == to || !self.is_passable(from) {
            return None;
        }
        let field = self.distance_field(to);
        if !field[from.index()].is_finite() {
            return None;
        }
        let mut best: Option<(f64, Cell)> = None;
        for (next, cost) in self.neighbors(from) {
            let total = cost + field[next.index()] as f64;
            if best.is_none_or(|(b, _)| total < b) {
                best = Some((total, next));
            }
        }
        best.map(|(_, c)| c)
    }

    /// Renders the map as text, one character per cell: `#` impassable,
    /// `.` passable, `B` bridge, `1`–`6` spawn region.
    pub fn dump(&self, regions: &[Region]) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                let c = Cell::new(x, y);
                let ch = if let Some(r) = regions.iter().find(|r| r.bounds.contains_cell(c)) {
                    char::from(b'1' + r.id.index() as u8)
                } else if self.is_bridge(c) {
                    'B'
                } else if self.is_passable(c) {
                    '.'
                } else {
                    '#'
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }
}

fn octile(a: Cell, b: Cell) -> f64 {
    let dx = a.x.abs_diff(b.x) as f64;
    let dy = a.y.abs_diff(b.y) as f64;
    dx.max(dy) - dx.min(dy) + SQRT_2 * dx.min(dy)
}

#[derive(Debug, Clone, Copy)]
struct Frontier {
    f: f64,
    h: f64,
    idx: usize,
}

impl Frontier {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.f
            .total_cmp(&other.f)
            .then(self.h.total_cmp(&other.h))
            .then(self.idx.cmp(&other.idx))
    }
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}

impl Eq for Frontier {}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frontier {
    // BinaryHeap is a max-heap; invert so the smallest key pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key_cmp(self)
    }
}

/// Builds the terrain and the six spawn regions (in id order).
pub fn build_two_bridge_map() -> (TerrainGrid, [Region; 6]) {
    let mut passable = vec![true; MAP_SIZE * MAP_SIZE];
    let mut bridges: [Vec<Cell>; 2] = [Vec::new(), Vec::new()];
    for y in 0..MAP_SIZE {
        for x in CLIFF_COLUMNS {
            match BRIDGE_ROWS.iter().position(|rows| rows.contains(&y)) {
                Some(b) => bridges[b].push(Cell::new(x, y)),
                None => passable[Cell::new(x, y).index()] = false,
            }
        }
    }
    let grid = TerrainGrid {
        width: MAP_SIZE,
        height: MAP_SIZE,
        passable,
        bridges,
        cliff_columns: CLIFF_COLUMNS,
        fields: DistanceFields::new(MAP_SIZE * MAP_SIZE),
    };

    const COLUMNS: [(usize, usize); 2] = [(8, 17), (46, 55)];
    const ROWS: [(usize, usize); 3] = [(5, 14), (27, 36), (49, 58)];
    let regions = RegionId::ALL.map(|id| {
        let (x0, x1) = COLUMNS[id.index() / 3];
        let (y0, y1) = ROWS[id.index() % 3];
        Region { id, bounds: CellRect { x0, y0, x1, y1 }, side: id.side() }
    });
    (grid, regions)
}

/// Immutable map shared by every environment instance.
#[derive(Debug)]
pub struct TwoBridgeMap {
    pub grid: Arc<TerrainGrid>,
    pub regions: [Region; 6],
}

impl TwoBridgeMap {
    pub fn region(&self, id: RegionId) -> &Region {
        &self.regions[id.index()]
    }
}

/// The process-wide two-bridge map, built on first use.
pub fn two_bridge_map() -> &'static TwoBridgeMap {
    static MAP: OnceLock<TwoBridgeMap> = OnceLock::new();
    MAP.get_or_init(|| {
        let (grid, regions) = build_two_bridge_map();
        TwoBridgeMap { grid: Arc::new(grid), regions }
    })
}

/// Grid path between two points as waypoints: `from` itself followed by
/// the centers of the remaining cells. `Ok(None)` when `to` cannot be reached.
pub fn find_path(
    grid: &TerrainGrid,
    from: Position,
    to: Position,
) -> Result<Option<Vec<Position>>, PathError> {
    let start = from
        .cell()
        .filter(|c| grid.is_passable(*c))
        .ok_or(PathError::ImpassableStart(from))?;
    let Some(goal) = to.cell() else {
        return Ok(None);
    };
    Ok(grid.find_cell_path(start, goal).map(|cells| {
        std::iter::once(from)
            .chain(cells.iter().skip(1).map(Cell::center))
            .collect()
    }))
}

/// Uniform point inside the region's bounds.
pub fn sample_point_in_region<R: Rng + ?Sized>(region: &Region, rng: &mut R) -> Position {
    let b = region.bounds;
    let x = rng.gen_range(b.x0 as f64..(b.x1 + 1) as f64);
    let y = rng.gen_range(b.y0 as f64..(b.y1 + 1) as f64);
    Position::new(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::{HashSet, VecDeque};

    /// Cells reachable from `start` by 4-connected moves over passable cells
    /// not listed in `blocked`.
    fn flood(grid: &TerrainGrid, start: Cell, blocked: &HashSet<Cell>) -> HashSet<Cell> {
        let mut seen = HashSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for (dx, dy) in [(0, -1), (1, 0), (0, 1), (-1, 0)] {
                if let Some(n) = c.offset(dx, dy) {
                    if grid.is_passable(n) && !blocked.contains(&n) && seen.insert(n) {
                        queue.push_back(n);
                    }
                }
            }
        }
        seen
    }

    #[test]
    fn mid_cliff_cell_is_impassable() {
        let (grid, _) = build_two_bridge_map();
        assert!(!grid.is_passable(Cell::new(31, 31)));
        assert!(!grid.is_passable(Cell::new(32, 0)));
        assert!(!grid.is_passable(Cell::new(32, 63)));
        assert!(grid.is_passable(Cell::new(30, 31)));
        assert!(grid.is_passable(Cell::new(33, 31)));
    }

    #[test]
    fn bridges_are_passable_end_to_end() {
        let (grid, _) = build_two_bridge_map();
        for bridge in grid.bridges() {
            assert_eq!(bridge.len(), 6);
            assert!(bridge.iter().all(|c| grid.is_passable(*c)));
            let reach = flood(&grid, bridge[0], &HashSet::new());
            assert!(bridge.iter().all(|c| reach.contains(c)));
            // each bridge row links the column left of the cliff to the column right of it
            let row = bridge[0].y;
            assert!(reach.contains(&Cell::new(30, row)) && reach.contains(&Cell::new(33, row)));
        }
    }

    #[test]
    fn exactly_two_gaps_cross_the_cliff() {
        let (grid, _) = build_two_bridge_map();
        let mut gaps = 0;
        let mut in_gap = false;
        for y in 0..MAP_SIZE {
            let open = CLIFF_COLUMNS.clone().all(|x| grid.is_passable(Cell::new(x, y)));
            if open && !in_gap {
                gaps += 1;
            }
            in_gap = open;
        }
        assert_eq!(gaps, 2);
    }

    #[test]
    fn halves_are_connected_and_bridges_separate_them() {
        let (grid, _) = build_two_bridge_map();
        let left = flood(&grid, Cell::new(0, 0), &HashSet::new());
        assert!(left.contains(&Cell::new(63, 63)));
        assert_eq!(left.len(), grid.cells().filter(|c| grid.is_passable(*c)).count());

        let blocked: HashSet<Cell> = grid.bridges().iter().flatten().copied().collect();
        let left = flood(&grid, Cell::new(0, 0), &blocked);
        let right = flood(&grid, Cell::new(63, 0), &blocked);
        assert!(left.iter().all(|c| c.x < 31));
        assert!(right.iter().all(|c| c.x > 32));
        assert!(left.is_disjoint(&right));
        assert_eq!(left.len(), 31 * 64);
        assert_eq!(right.len(), 31 * 64);
    }

    #[test]
    fn regions_are_sided_passable_and_disjoint() {
        let (grid, regions) = build_two_bridge_map();
        assert_eq!(regions[0].side, Side::Left);
        assert_eq!(regions[3].side, Side::Right);
        for (i, r) in regions.iter().enumerate() {
            assert_eq!(r.id.index(), i);
            for c in r.bounds.cells() {
                assert!(grid.is_passable(c));
                match r.side {
                    Side::Left => assert!(c.x < 31),
                    Side::Right => assert!(c.x > 32),
                }
                for other in &regions[i + 1..] {
                    assert!(!other.bounds.contains_cell(c));
                }
            }
        }
    }

    #[test]
    fn path_to_self_is_single_point() {
        let (grid, _) = build_two_bridge_map();
        let p = Position::new(10.5, 10.5);
        assert_eq!(find_path(&grid, p, p).unwrap(), Some(vec![p]));
    }

    #[test]
    fn cross_cliff_path_uses_a_bridge() {
        let (grid, _) = build_two_bridge_map();
        let from = Position::new(10.2, 31.7);
        let to = Position::new(50.5, 31.5);
        let path = find_path(&grid, from, to).unwrap().expect("reachable");
        assert_eq!(path[0], from);
        assert!(path.last().unwrap().distance(&to) <= SQRT_2);
        assert!(path.iter().any(|p| grid.is_bridge(p.cell().unwrap())));
        for w in path.windows(2) {
            let (a, b) = (w[0].cell().unwrap(), w[1].cell().unwrap());
            assert!(grid.is_passable(b));
            assert!(a.x.abs_diff(b.x) <= 1 && a.y.abs_diff(b.y) <= 1 && a != b);
        }
    }

    #[test]
    fn path_into_cliff_is_absent() {
        let (grid, _) = build_two_bridge_map();
        let to = Position::new(31.5, 5.5);
        let reach = flood(&grid, Cell::new(10, 10), &HashSet::new());
        assert!(!reach.contains(&to.cell().unwrap()));
        assert_eq!(find_path(&grid, Position::new(10.5, 10.5), to).unwrap(), None);
        assert_eq!(find_path(&grid, Position::new(10.5, 10.5), Position::new(70.0, 1.0)).unwrap(), None);
    }

    #[test]
    fn path_from_cliff_is_an_error() {
        let (grid, _) = build_two_bridge_map();
        let from = Position::new(31.5, 5.5);
        assert!(matches!(
            find_path(&grid, from, Position::new(1.0, 1.0)),
            Err(PathError::ImpassableStart(_))
        ));
    }

    #[test]
    fn segment_clear_detects_cliff() {
        let (grid, _) = build_two_bridge_map();
        assert!(grid.segment_clear(Position::new(5.0, 5.0), Position::new(25.0, 60.0)));
        assert!(!grid.segment_clear(Position::new(25.0, 5.0), Position::new(40.0, 5.0)));
        assert!(grid.segment_clear(Position::new(25.0, 21.5), Position::new(40.0, 21.5)));
        // grazes the bridge corner at (31, 20): the cliff cell (31, 19) is touched
        assert!(!grid.segment_clear(Position::new(30.0, 19.0), Position::new(32.0, 21.0)));
    }

    #[test]
    fn sampling_is_deterministic_and_in_bounds() {
        let (_, regions) = build_two_bridge_map();
        let mut a = ChaCha8Rng::seed_from_u64(42);
        let mut b = ChaCha8Rng::seed_from_u64(42);
        assert_eq!(
            sample_point_in_region(&regions[1], &mut a),
            sample_point_in_region(&regions[1], &mut b)
        );
        for r in &regions {
            for _ in 0..10_000 {
                assert!(r.bounds.contains(sample_point_in_region(r, &mut a)));
            }
        }
    }

    #[test]
    fn sampling_covers_region() {
        let (_, regions) = build_two_bridge_map();
        let r2 = &regions[1];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let hit: HashSet<Cell> =
            (0..10_000).map(|_| sample_point_in_region(r2, &mut rng).cell().unwrap()).collect();
        assert!(hit.len() as f64 >= 0.9 * r2.bounds.cell_count() as f64);
    }

    #[test]
    fn best_aligned_direction() {
        assert_eq!(Direction::best_aligned(1.0, 0.0), Direction::E);
        assert_eq!(Direction::best_aligned(0.0, -3.0), Direction::N);
        assert_eq!(Direction::best_aligned(-1.0, 1.0), Direction::SW);
    }

    fn path_cost(path: &[Cell]) -> f64 {
        path.windows(2)
            .map(|w| if w[0].x != w[1].x && w[0].y != w[1].y { SQRT_2 } else { 1.0 })
            .sum()
    }

    #[test]
    fn distance_field_agrees_with_astar() {
        let (grid, _) = build_two_bridge_map();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let passable: Vec<Cell> = grid.cells().filter(|c| grid.is_passable(*c)).collect();
        for _ in 0..60 {
            let a = passable[rng.gen_range(0..passable.len())];
            let b = passable[rng.gen_range(0..passable.len())];
            let astar = path_cost(&grid.find_cell_path(a, b).unwrap());
            let field = grid.distance_field(b)[a.index()] as f64;
            assert!((astar - field).abs() < 1e-3, "{a:?}->{b:?}: {astar} vs {field}");

            // greedy descent on the field walks a shortest path
            let mut walk = vec![a];
            while let Some(next) = grid.next_cell_toward(*walk.last().unwrap(), b) {
                walk.push(next);
                assert!(walk.len() <= 200);
            }
            assert_eq!(*walk.last().unwrap(), b);
            assert!((path_cost(&walk) - astar).abs() < 1e-6);
        }
        assert_eq!(grid.next_cell_toward(Cell::new(31, 5), Cell::new(5, 5)), None);
        assert!(grid.distance_field(Cell::new(31, 5)).iter().all(|d| d.is_infinite()));
    }
}
