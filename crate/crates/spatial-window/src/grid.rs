//! Uniform grid index: range and kNN queries plus the scan executor that
//! walks points in a spatially coherent order and maintains window
//! aggregates from entering/leaving deltas.

use std::collections::BinaryHeap;

use thiserror::Error;

use crate::aggregates::{AggregateError, AggregateState, BoundAggregate};
use crate::data::{Dataset, Point, WorkCounters};
use crate::geometry::{classify_rect_planar, planar_distance, CircleRelation, Rect};

/// Hard cap on total cells relative to the point count, so a tiny
/// `cell_side` cannot blow up memory.
const CELLS_PER_POINT_CAP: usize = 16;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep delta bug at point `{id}`: {source}")]
    Delta { id: String, source: AggregateError },
}

/// Uniform partition of the dataset bounding box into square cells, each
/// listing the indices of the points it contains. Planar metric only.
#[derive(Debug, Clone)]
pub struct GridIndex {
    origin_x: f64,
    origin_y: f64,
    cell_side: f64,
    n_cols: usize,
    n_rows: usize,
    /// Row-major cell lists; `cells[row * n_cols + col]`.
    cells: Vec<Vec<usize>>,
}

impl GridIndex {
    /// Builds the index. `cell_side` defaults to a size that targets about
    /// four points per cell under a uniform distribution; an explicit side
    /// is still capped so the cell count stays proportional to n.
    pub fn build(ds: &Dataset, cell_side: Option<f64>) -> Self {
        let n = ds.len();
        if n == 0 {
            return GridIndex {
                origin_x: 0.0,
                origin_y: 0.0,
                cell_side: 1.0,
                n_cols: 0,
                n_rows: 0,
                cells: Vec::new(),
            };
        }
        let bbox = ds.bbox();
        let (w, h) = (bbox.width(), bbox.height());
        let mut side = cell_side.unwrap_or_else(|| {
            let area = w * h;
            if area > 0.0 {
                (4.0 * area / n as f64).sqrt()
            } else if w.max(h) > 0.0 {
                // Degenerate bbox: a single row or column of cells.
                w.max(h) * 4.0 / n as f64
            } else {
                1.0
            }
        });
        assert!(
            side.is_finite() && side > 0.0,
            "cell_side must be positive and finite"
        );
        let cap = n.saturating_mul(CELLS_PER_POINT_CAP).max(1);
        let dims = |side: f64| {
            let cols = ((w / side).ceil() as usize).max(1);
            let rows = ((h / side).ceil() as usize).max(1);
            (cols, rows)
        };
        let (mut n_cols, mut n_rows) = dims(side);
        while n_cols.saturating_mul(n_rows) > cap {
            side *= 2.0;
            (n_cols, n_rows) = dims(side);
        }

        let mut cells = vec![Vec::new(); n_cols * n_rows];
        let clampi = |v: f64, hi: usize| (v.floor() as i64).clamp(0, hi as i64 - 1) as usize;
        for (i, p) in ds.points().iter().enumerate() {
            let col = clampi((p.x - bbox.min_x) / side, n_cols);
            let row = clampi((p.y - bbox.min_y) / side, n_rows);
            cells[row * n_cols + col].push(i);
        }
        GridIndex {
            origin_x: bbox.min_x,
            origin_y: bbox.min_y,
            cell_side: side,
            n_cols,
            n_rows,
            cells,
        }
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn cell_side(&self) -> f64 {
        self.cell_side
    }

    pub fn is_empty(&self) -> bool {
        self.n_cols == 0
    }

    fn cell_points(&self, col: usize, row: usize) -> &[usize] {
        &self.cells[row * self.n_cols + col]
    }

    fn cell_rect(&self, col: usize, row: usize) -> Rect {
        Rect::new(
            self.origin_x + col as f64 * self.cell_side,
            self.origin_y + row as f64 * self.cell_side,
            self.origin_x + (col + 1) as f64 * self.cell_side,
            self.origin_y + (row + 1) as f64 * self.cell_side,
        )
    }

    fn col_of(&self, x: f64) -> usize {
        (((x - self.origin_x) / self.cell_side).floor() as i64).clamp(0, self.n_cols as i64 - 1)
            as usize
    }

    fn row_of(&self, y: f64) -> usize {
        (((y - self.origin_y) / self.cell_side).floor() as i64).clamp(0, self.n_rows as i64 - 1)
            as usize
    }

    /// Cells whose rect can intersect the axis range [lo, hi].
    fn col_span(&self, lo: f64, hi: f64) -> (usize, usize) {
        (self.col_of(lo), self.col_of(hi))
    }

    fn row_span(&self, lo: f64, hi: f64) -> (usize, usize) {
        (self.row_of(lo), self.row_of(hi))
    }

    /// All point indices within the closed disk of radius `r`, ascending.
    /// Disjoint cells are never scanned; points in fully contained cells
    /// are included without a distance computation.
    pub fn range_query(
        &self,
        ds: &Dataset,
        center: &Point,
        r: f64,
        counters: &mut WorkCounters,
    ) -> Vec<usize> {
        let mut out = Vec::new();
        if self.is_empty() {
            return out;
        }
        let (c0, c1) = self.col_span(center.x - r, center.x + r);
        let (r0, r1) = self.row_span(center.y - r, center.y + r);
        for row in r0..=r1 {
            for col in c0..=c1 {
                counters.cells_visited += 1;
                let rect = self.cell_rect(col, row);
                match classify_rect_planar(&rect, center.x, center.y, r) {
                    CircleRelation::Disjoint => {}
                    CircleRelation::Contained => {
                        out.extend_from_slice(self.cell_points(col, row));
                    }
                    CircleRelation::Partial => {
                        for &i in self.cell_points(col, row) {
                            counters.points_scanned += 1;
                            counters.distance_computations += 1;
                            let p = ds.point(i);
                            if planar_distance(center.x, center.y, p.x, p.y) <= r {
                                out.push(i);
                            }
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// The `k` nearest points to `center` ordered by (distance, id),
    /// searching cell rings outward until the next ring cannot hold a
    /// better candidate. `exclude` drops the window's own point.
    pub fn knn_query(
        &self,
        ds: &Dataset,
        center: &Point,
        k: usize,
        exclude: Option<usize>,
        counters: &mut WorkCounters,
    ) -> Vec<usize> {
        if self.is_empty() || k == 0 {
            return Vec::new();
        }
        let ccol = self.col_of(center.x);
        let crow = self.row_of(center.y);
        let center_rect = self.cell_rect(ccol, crow);
        let max_span = ccol
            .max(self.n_cols - 1 - ccol)
            .max(crow)
            .max(self.n_rows - 1 - crow);

        // Max-heap: the worst of the best k so far sits on top.
        let mut best: BinaryHeap<Cand> = BinaryHeap::with_capacity(k + 1);
        for ring in 0..=max_span {
            if best.len() == k {
                // Minimum possible distance to any cell in this ring or
                // beyond: the nearest face cell edge in each direction.
                let d = ring as f64;
                let mut lb = f64::INFINITY;
                if ccol + ring < self.n_cols {
                    lb = lb.min(center_rect.min_x + d * self.cell_side - center.x);
                }
                if ring <= ccol {
                    lb = lb.min(center.x - (center_rect.max_x - d * self.cell_side));
                }
                if crow + ring < self.n_rows {
                    lb = lb.min(center_rect.min_y + d * self.cell_side - center.y);
                }
                if ring <= crow {
                    lb = lb.min(center.y - (center_rect.max_y - d * self.cell_side));
                }
                let lb = lb.max(0.0);
                if lb > best.peek().unwrap().dist {
                    break;
                }
            }
            for (col, row) in ring_cells(ccol, crow, ring, self.n_cols, self.n_rows) {
                counters.cells_visited += 1;
                if best.len() == k {
                    let rect = self.cell_rect(col, row);
                    if rect.min_distance(center.x, center.y) > best.peek().unwrap().dist {
                        continue;
                    }
                }
                for &i in self.cell_points(col, row) {
                    if Some(i) == exclude {
                        continue;
                    }
                    counters.points_scanned += 1;
                    counters.distance_computations += 1;
                    let p = ds.point(i);
                    let cand = Cand {
                        dist: planar_distance(center.x, center.y, p.x, p.y),
                        rank: ds.id_rank(i),
                        idx: i,
                    };
                    if best.len() < k {
                        best.push(cand);
                    } else if cand < *best.peek().unwrap() {
                        best.pop();
                        best.push(cand);
                    }
                }
            }
        }

        let mut result: Vec<Cand> = best.into_vec();
        result.sort_unstable();
        result.into_iter().map(|c| c.idx).collect()
    }

    /// Deterministic serpentine visit order: cells row-major from the
    /// minimum row, alternating column direction per row; points within a
    /// cell ordered by (x, y, id). Consecutive points stay spatially close
    /// so consecutive windows overlap heavily.
    pub fn sweep_order(&self, ds: &Dataset) -> Vec<usize> {
        let mut order = Vec::with_capacity(ds.len());
        for row in 0..self.n_rows {
            let cols: Box<dyn Iterator<Item = usize>> = if row.is_multiple_of(2) {
                Box::new(0..self.n_cols)
            } else {
                Box::new((0..self.n_cols).rev())
            };
            for col in cols {
                let mut pts = self.cell_points(col, row).to_vec();
                pts.sort_by(|&a, &b| {
                    let (pa, pb) = (ds.point(a), ds.point(b));
                    pa.x.total_cmp(&pb.x)
                        .then(pa.y.total_cmp(&pb.y))
                        .then(ds.id_rank(a).cmp(&ds.id_rank(b)))
                });
                order.extend(pts);
            }
        }
        order
    }
}

/// One step of a sweep execution, exposed so tests can verify the deltas
/// against an independent window computation.
#[derive(Debug)]
pub struct SweepStep<'a> {
    /// Point whose window is now current.
    pub current: usize,
    pub entering: &'a [usize],
    pub leaving: &'a [usize],
}

/// Radius-window sweep: evaluates every point's aggregate by sliding the
/// window along the serpentine order, touching only entering and leaving
/// points. Returns one row per point in dataset input order, `row[agg]`
/// per aggregate.
pub fn sweep_execute(
    grid: &GridIndex,
    ds: &Dataset,
    r: f64,
    aggs: &[BoundAggregate],
    counters: &mut WorkCounters,
) -> Result<Vec<Vec<Option<f64>>>, SweepError> {
    sweep_execute_with(grid, ds, r, aggs, counters, |_| {})
}

pub fn sweep_execute_with(
    grid: &GridIndex,
    ds: &Dataset,
    r: f64,
    aggs: &[BoundAggregate],
    counters: &mut WorkCounters,
    mut on_step: impl FnMut(SweepStep<'_>),
) -> Result<Vec<Vec<Option<f64>>>, SweepError> {
    let mut out = vec![Vec::new(); ds.len()];
    let order = grid.sweep_order(ds);
    debug_assert_eq!(order.len(), ds.len());
    if order.is_empty() {
        return Ok(out);
    }

    let mut states: Vec<AggregateState> = aggs.iter().map(|a| a.new_state()).collect();
    let first = order[0];
    let initial = grid.range_query(ds, ds.point(first), r, counters);
    counters.windows_materialized += 1;
    for &q in &initial {
        for (state, agg) in states.iter_mut().zip(aggs) {
            state.add(agg.input(ds, q));
        }
    }
    on_step(SweepStep {
        current: first,
        entering: &initial,
        leaving: &[],
    });
    out[first] = states.iter().map(|s| s.finalize()).collect();

    let mut entering: Vec<usize> = Vec::new();
    let mut leaving: Vec<usize> = Vec::new();
    for pair in order.windows(2) {
        let (prev, curr) = (ds.point(pair[0]), ds.point(pair[1]));
        entering.clear();
        leaving.clear();

        // Candidate cells: everything touching either disk, minus cells
        // contained in both (their points stay members throughout).
        let (c0, c1) = grid.col_span(prev.x.min(curr.x) - r, prev.x.max(curr.x) + r);
        let (r0, r1) = grid.row_span(prev.y.min(curr.y) - r, prev.y.max(curr.y) + r);
        for row in r0..=r1 {
            for col in c0..=c1 {
                counters.cells_visited += 1;
                let rect = grid.cell_rect(col, row);
                let rel_old = classify_rect_planar(&rect, prev.x, prev.y, r);
                let rel_new = classify_rect_planar(&rect, curr.x, curr.y, r);
                if rel_old == CircleRelation::Contained && rel_new == CircleRelation::Contained {
                    continue;
                }
                if rel_old == CircleRelation::Disjoint && rel_new == CircleRelation::Disjoint {
                    continue;
                }
                for &q in grid.cell_points(col, row) {
                    debug_assert!(
                        !(rel_old == CircleRelation::Contained
                            && rel_new == CircleRelation::Contained),
                        "point in a both-contained cell reached the delta scan"
                    );
                    counters.points_scanned += 1;
                    let p = ds.point(q);
                    let mut in_disk = |rel: CircleRelation, cx: f64, cy: f64| match rel {
                        CircleRelation::Contained => true,
                        CircleRelation::Disjoint => false,
                        CircleRelation::Partial => {
                            counters.distance_computations += 1;
                            planar_distance(cx, cy, p.x, p.y) <= r
                        }
                    };
                    let in_old = in_disk(rel_old, prev.x, prev.y);
                    let in_new = in_disk(rel_new, curr.x, curr.y);
                    if in_new && !in_old {
                        entering.push(q);
                    } else if in_old && !in_new {
                        leaving.push(q);
                    }
                }
            }
        }

        for &q in &leaving {
            for (state, agg) in states.iter_mut().zip(aggs) {
                state
                    .remove(agg.input(ds, q))
                    .map_err(|source| SweepError::Delta {
                        id: ds.point(q).id.clone(),
                        source,
                    })?;
            }
        }
        for &q in &entering {
            for (state, agg) in states.iter_mut().zip(aggs) {
                state.add(agg.input(ds, q));
            }
        }
        on_step(SweepStep {
            current: pair[1],
            entering: &entering,
            leaving: &leaving,
        });
        out[pair[1]] = states.iter().map(|s| s.finalize()).collect();
    }
    Ok(out)
}

#[derive(Debug, PartialEq)]
struct Cand {
    dist: f64,
    rank: usize,
    idx: usize,
}

impl Eq for Cand {}

impl Ord for Cand {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.rank.cmp(&other.rank))
    }
}

impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// In-grid cells at Chebyshev distance exactly `ring` from (ccol, crow).
fn ring_cells(
    ccol: usize,
    crow: usize,
    ring: usize,
    n_cols: usize,
    n_rows: usize,
) -> Vec<(usize, usize)> {
    let mut cells = Vec::new();
    let (ccol, crow, ring) = (ccol as i64, crow as i64, ring as i64);
    let mut push = |col: i64, row: i64| {
        if col >= 0 && row >= 0 && col < n_cols as i64 && row < n_rows as i64 {
            cells.push((col as usize, row as usize));
        }
    };
    if ring == 0 {
        push(ccol, crow);
        return cells;
    }
    for col in (ccol - ring)..=(ccol + ring) {
        push(col, crow - ring);
        push(col, crow + ring);
    }
    for row in (crow - ring + 1)..=(crow + ring - 1) {
        push(ccol - ring, row);
        push(ccol + ring, row);
    }
    cells
}
