//! Occupancy grids and per-goal shortest-path distance fields.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use crate::error::CostmapError;
use crate::geometry::{ConvexPolygon, Vec2};

pub const DEFAULT_RESOLUTION: f64 = 0.05;
pub const CLEARANCE_SLACK: f64 = 1e-9;

/// Rasterized workspace. Cell `(ix, iy)` covers
/// `origin + [ix, ix+1) × [iy, iy+1) · resolution`.
#[derive(Debug, Clone)]
pub struct GridMap {
    origin: Vec2,
    resolution: f64,
    width: usize,
    height: usize,
    inflation: f64,
    occupied: Vec<bool>,
    obstacles: Vec<ConvexPolygon>,
    bounds: (Vec2, Vec2),
}

impl GridMap {
    /// Rasterizes `obstacles` inside the rectangle `[min, max]`. A cell is
    /// occupied when its centre lies inside an obstacle, or within
    /// `inflation` of an obstacle or of the map boundary.
    pub fn new(
        min: Vec2,
        max: Vec2,
        resolution: f64,
        obstacles: Vec<ConvexPolygon>,
        inflation: f64,
    ) -> Result<Self, CostmapError> {
        if !resolution.is_finite() || resolution <= 0.0 {
            return Err(CostmapError::InvalidMap(format!("resolution {resolution}")));
        }
        if !(max.x > min.x && max.y > min.y) {
            return Err(CostmapError::InvalidMap("empty bounds".into()));
        }
        if inflation.is_nan() || inflation < 0.0 {
            return Err(CostmapError::InvalidMap(format!("inflation {inflation}")));
        }
        let width = ((max.x - min.x) / resolution).ceil() as usize;
        let height = ((max.y - min.y) / resolution).ceil() as usize;
        let mut map = Self {
            origin: min,
            resolution,
            width,
            height,
            inflation,
            occupied: vec![false; width * height],
            obstacles,
            bounds: (min, max),
        };
        for iy in 0..height {
            for ix in 0..width {
                let c = map.cell_center(ix, iy);
                let wall = (c.x - min.x)
                    .min(max.x - c.x)
                    .min(c.y - min.y)
                    .min(max.y - c.y);
                if wall < inflation {
                    map.occupied[iy * width + ix] = true;
                }
            }
        }
        for poly in &map.obstacles {
            let (lo, hi) = poly.aabb();
            let (x0, y0) = map.clamped_cell(lo - Vec2::new(inflation, inflation));
            let (x1, y1) = map.clamped_cell(hi + Vec2::new(inflation, inflation));
            for iy in y0..=y1 {
                for ix in x0..=x1 {
                    let c = map.cell_center(ix, iy);
                    if poly.contains(c) || poly.distance_to_point(c) < inflation {
                        map.occupied[iy * width + ix] = true;
                    }
                }
            }
        }
        Ok(map)
    }

    pub fn empty(min: Vec2, max: Vec2, resolution: f64, inflation: f64) -> Result<Self, CostmapError> {
        Self::new(min, max, resolution, Vec::new(), inflation)
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn inflation(&self) -> f64 {
        self.inflation
    }

    pub fn origin(&self) -> Vec2 {
        self.origin
    }

    pub fn bounds(&self) -> (Vec2, Vec2) {
        self.bounds
    }

    pub fn obstacles(&self) -> &[ConvexPolygon] {
        &self.obstacles
    }

    pub fn diameter(&self) -> f64 {
        (self.bounds.1 - self.bounds.0).norm()
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Vec2 {
        self.origin
            + Vec2::new(
                (ix as f64 + 0.5) * self.resolution,
                (iy as f64 + 0.5) * self.resolution,
            )
    }

    fn clamped_cell(&self, p: Vec2) -> (usize, usize) {
        let fx = ((p.x - self.origin.x) / self.resolution).floor();
        let fy = ((p.y - self.origin.y) / self.resolution).floor();
        (
            fx.clamp(0.0, (self.width - 1) as f64) as usize,
            fy.clamp(0.0, (self.height - 1) as f64) as usize,
        )
    }

    pub fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let fx = ((p.x - self.origin.x) / self.resolution).floor();
        let fy = ((p.y - self.origin.y) / self.resolution).floor();
        if !(fx >= 0.0 && fy >= 0.0) || fx >= self.width as f64 || fy >= self.height as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    pub fn is_cell_occupied(&self, ix: usize, iy: usize) -> bool {
        self.occupied[iy * self.width + ix]
    }

    /// Out-of-bounds positions count as occupied.
    pub fn is_occupied(&self, p: Vec2) -> bool {
        self.cell_of(p).is_none_or(|(ix, iy)| self.is_cell_occupied(ix, iy))
    }

    pub fn occupied_cells(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    /// True iff a disk of radius `r` swept along `[a, b]` stays inside the
    /// bounds and clear of every obstacle. Tangency is allowed, with
    /// `CLEARANCE_SLACK` of tolerance for positions that were projected onto
    /// a contact surface.
    pub fn segment_clear(&self, a: Vec2, b: Vec2, r: f64) -> bool {
        let r = r - CLEARANCE_SLACK;
        let (lo, hi) = self.bounds;
        let inside = |p: Vec2| {
            p.x - lo.x >= r && hi.x - p.x >= r && p.y - lo.y >= r && hi.y - p.y >= r
        };
        if !inside(a) || !inside(b) {
            return false;
        }
        self.obstacles.iter().all(|poly| {
            let (plo, phi) = poly.aabb();
            let (slo, shi) = (
                Vec2::new(a.x.min(b.x) - r, a.y.min(b.y) - r),
                Vec2::new(a.x.max(b.x) + r, a.y.max(b.y) + r),
            );
            if shi.x < plo.x || slo.x > phi.x || shi.y < plo.y || slo.y > phi.y {
                return true;
            }
            poly.distance_to_segment(a, b) >= r
        })
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    idx: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Cost-to-goal lookup. Immutable once built; cheap to clone.
#[derive(Debug, Clone)]
pub enum DistanceField {
    Grid {
        map: Arc<GridMap>,
        goal: Vec2,
        goal_cell: (usize, usize),
        costs: Arc<Vec<f64>>,
    },
    /// Straight-line distance; exact on obstacle-free maps.
    Euclidean { goal: Vec2 },
}

impl DistanceField {
    pub fn goal(&self) -> Vec2 {
        match self {
            DistanceField::Grid { goal, .. } | DistanceField::Euclidean { goal } => *goal,
        }
    }

    pub fn euclidean(goal: Vec2) -> Self {
        DistanceField::Euclidean { goal }
    }
}

/// 8-connected Dijkstra from `goal`. Straight steps cost one resolution,
/// diagonal steps √2 resolutions; diagonals may not cut occupied corners.
pub fn build_distance_field(map: Arc<GridMap>, goal: Vec2) -> Result<DistanceField, CostmapError> {
    let goal_cell = map
        .cell_of(goal)
        .ok_or(CostmapError::OutOfBounds { x: goal.x, y: goal.y })?;
    if map.is_cell_occupied(goal_cell.0, goal_cell.1) {
        return Err(CostmapError::GoalOccupied { x: goal.x, y: goal.y });
    }
    let (w, h) = (map.width, map.height);
    let res = map.resolution;
    let diag = res * std::f64::consts::SQRT_2;
    let mut costs = vec![f64::INFINITY; w * h];
    let start = goal_cell.1 * w + goal_cell.0;
    costs[start] = goal.distance(map.cell_center(goal_cell.0, goal_cell.1));
    let mut heap = BinaryHeap::new();
    heap.push(Entry { cost: costs[start], idx: start });
    while let Some(Entry { cost, idx }) = heap.pop() {
        if cost > costs[idx] {
            continue;
        }
        let (x, y) = ((idx % w) as isize, (idx / w) as isize);
        for (dx, dy) in [
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ] {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                continue;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            if map.is_cell_occupied(nx, ny) {
                continue;
            }
            let step = if dx != 0 && dy != 0 {
                if map.is_cell_occupied(nx, y as usize) || map.is_cell_occupied(x as usize, ny) {
                    continue;
                }
                diag
            } else {
                res
            };
            let nidx = ny * w + nx;
            let nc = cost + step;
            if nc < costs[nidx] {
                costs[nidx] = nc;
                heap.push(Entry { cost: nc, idx: nidx });
            }
        }
    }
    Ok(DistanceField::Grid {
        map,
        goal,
        goal_cell,
        costs: Arc::new(costs),
    })
}

/// Heuristic cost from `pos` to the field's goal. Inside the goal cell this
/// is the straight-line distance; elsewhere the cheapest of the containing
/// cell and its free neighbours, each plus the straight-line remainder to
/// that cell's centre. Occupied containing cells are unreachable (∞).
pub fn dist(field: &DistanceField, pos: Vec2) -> Result<f64, CostmapError> {
    match field {
        DistanceField::Euclidean { goal } => Ok(pos.distance(*goal)),
        DistanceField::Grid {
            map,
            goal,
            goal_cell,
            costs,
        } => {
            let (ix, iy) = map
                .cell_of(pos)
                .ok_or(CostmapError::OutOfBounds { x: pos.x, y: pos.y })?;
            if map.is_cell_occupied(ix, iy) {
                return Ok(f64::INFINITY);
            }
            if (ix, iy) == *goal_cell {
                return Ok(pos.distance(*goal));
            }
            let mut best = f64::INFINITY;
            for ny in iy.saturating_sub(1)..=(iy + 1).min(map.height - 1) {
                for nx in ix.saturating_sub(1)..=(ix + 1).min(map.width - 1) {
                    let c = costs[ny * map.width + nx];
                    if !c.is_finite() {
                        continue;
                    }
                    let via = if (nx, ny) == *goal_cell {
                        pos.distance(*goal)
                    } else {
                        c + pos.distance(map.cell_center(nx, ny))
                    };
                    best = best.min(via);
                }
            }
            Ok(best)
        }
    }
}

/// Cost stored for a cell (∞ when unreachable). Grid fields only.
pub fn cell_cost(field: &DistanceField, ix: usize, iy: usize) -> Option<f64> {
    match field {
        DistanceField::Grid { map, costs, .. } => Some(costs[iy * map.width + ix]),
        DistanceField::Euclidean { .. } => None,
    }
}
