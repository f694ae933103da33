//! Query execution: turns a plan plus a dataset into a result table.
//!
//! Every executor agrees on window semantics: a radius window is the
//! closed disk around the point (always containing it), a kNN window is
//! the point plus its k nearest other points by (distance, id). Executors
//! differ only in how much work they spend finding members.

use crate::aggregates::BoundAggregate;
use crate::csvio::fmt_f64;
use crate::data::{Dataset, Point, ResultTable, Value, WindowFrame, WorkCounters};
use crate::geometry::Metric;
use crate::grid::{self, GridIndex};
use crate::quadtree::QuadtreeIndex;

use super::plan::{ColumnSource, ExecutorKind, IndexPref, PlanGroup, QueryPlan};
use super::QueryError;

/// A built index matching a plan's index preference.
#[derive(Debug)]
pub enum PreparedIndex {
    None,
    Grid(GridIndex),
    Quadtree(QuadtreeIndex),
}

/// Builds whatever index the plan calls for.
pub fn build_index(ds: &Dataset, plan: &QueryPlan) -> PreparedIndex {
    match plan.index {
        IndexPref::None => PreparedIndex::None,
        IndexPref::Grid => PreparedIndex::Grid(GridIndex::build(ds, plan.params.cell_side)),
        IndexPref::Quadtree => PreparedIndex::Quadtree(QuadtreeIndex::build(
            ds,
            plan.params.leaf_capacity,
            plan.params.max_depth,
        )),
    }
}

/// Runs the plan. Results come out one row per input point, in input
/// order, regardless of executor.
pub fn execute(
    plan: &QueryPlan,
    ds: &Dataset,
    index: &PreparedIndex,
) -> Result<(ResultTable, WorkCounters), QueryError> {
    let mut counters = WorkCounters::default();
    let n = ds.len();

    // Values per select slot, filled by the group executions.
    let mut analytic: Vec<Option<Vec<Option<f64>>>> = vec![None; plan.columns.len()];
    for group in &plan.groups {
        let columns = run_group(plan, group, ds, index, &mut counters)?;
        for (call, col) in group.calls.iter().zip(columns) {
            analytic[call.select_slot] = Some(col);
        }
    }

    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let p = ds.point(i);
        let row: Vec<Value> = plan
            .columns
            .iter()
            .enumerate()
            .map(|(slot, (_, source))| match source {
                ColumnSource::Id => Value::Str(p.id.clone()),
                ColumnSource::X => Value::Float(p.x),
                ColumnSource::Y => Value::Float(p.y),
                ColumnSource::Location => {
                    Value::Str(format!("POINT({} {})", fmt_f64(p.x), fmt_f64(p.y)))
                }
                ColumnSource::Attr(a) => match ds.attr_value(*a, i) {
                    Some(v) => Value::Float(v),
                    None => Value::Null,
                },
                ColumnSource::Analytic => {
                    let col = analytic[slot]
                        .as_ref()
                        .expect("analytic slot filled by its group");
                    match col[i] {
                        Some(v) => Value::Float(v),
                        None => Value::Null,
                    }
                }
            })
            .collect();
        rows.push(row);
    }
    let columns = plan
        .columns
        .iter()
        .map(|(label, _)| label.clone())
        .collect();
    Ok((ResultTable::new(columns, rows), counters))
}

/// Runs one window group; returns one value column per call.
fn run_group(
    plan: &QueryPlan,
    group: &PlanGroup,
    ds: &Dataset,
    index: &PreparedIndex,
    counters: &mut WorkCounters,
) -> Result<Vec<Vec<Option<f64>>>, QueryError> {
    let aggs: Vec<&BoundAggregate> = group.calls.iter().map(|c| &c.agg).collect();
    match group.executor {
        ExecutorKind::NaivePerPoint => {
            naive_per_point(plan.metric, &group.window, ds, &aggs, counters)
        }
        ExecutorKind::GridPerPoint => {
            let PreparedIndex::Grid(grid) = index else {
                return Err(QueryError::Internal("plan expects a grid index".into()));
            };
            per_point_with(ds, &aggs, counters, |i, c| {
                materialize_window(
                    &group.window,
                    ds,
                    i,
                    c,
                    |center, r, c| grid.range_query(ds, center, r, c),
                    |center, k, exclude, c| grid.knn_query(ds, center, k, exclude, c),
                )
            })
        }
        ExecutorKind::QtPerPoint => {
            let PreparedIndex::Quadtree(qt) = index else {
                return Err(QueryError::Internal("plan expects a quadtree index".into()));
            };
            per_point_with(ds, &aggs, counters, |i, c| {
                materialize_window(
                    &group.window,
                    ds,
                    i,
                    c,
                    |center, r, c| qt.range_query(ds, center, r, c),
                    |center, k, exclude, c| qt.knn_query(ds, center, k, exclude, c),
                )
            })
        }
        ExecutorKind::GridSweep => {
            let PreparedIndex::Grid(grid) = index else {
                return Err(QueryError::Internal("plan expects a grid index".into()));
            };
            let WindowFrame::Radius { r } = group.window.frame else {
                return Err(QueryError::Internal(
                    "sweep planned for a kNN window".into(),
                ));
            };
            let owned: Vec<BoundAggregate> = aggs.iter().map(|a| (*a).clone()).collect();
            let rows = grid::sweep_execute(grid, ds, r, &owned, counters)
                .map_err(|e| QueryError::Internal(e.to_string()))?;
            // rows[point][agg] -> column-major.
            let mut cols = vec![vec![None; ds.len()]; aggs.len()];
            for (i, row) in rows.into_iter().enumerate() {
                for (col, v) in cols.iter_mut().zip(row) {
                    col[i] = v;
                }
            }
            Ok(cols)
        }
        ExecutorKind::QtAnnotated => {
            let PreparedIndex::Quadtree(qt) = index else {
                return Err(QueryError::Internal("plan expects a quadtree index".into()));
            };
            let WindowFrame::Radius { r } = group.window.frame else {
                return Err(QueryError::Internal(
                    "annotated path planned for a kNN window".into(),
                ));
            };
            let mut cols = vec![vec![None; ds.len()]; aggs.len()];
            for i in 0..ds.len() {
                let center = ds.point(i);
                for (col, agg) in cols.iter_mut().zip(&aggs) {
                    col[i] = qt
                        .aggregate_range(ds, center, r, agg, counters)
                        .map_err(QueryError::Aggregate)?;
                }
            }
            Ok(cols)
        }
    }
}

/// Brute force: every window found by scanning all points. The only
/// executor that supports the haversine metric.
fn naive_per_point(
    metric: Metric,
    window: &crate::data::WindowSpec,
    ds: &Dataset,
    aggs: &[&BoundAggregate],
    counters: &mut WorkCounters,
) -> Result<Vec<Vec<Option<f64>>>, QueryError> {
    if metric == Metric::Haversine {
        for p in ds.points() {
            if !(-90.0..=90.0).contains(&p.y) {
                return Err(QueryError::Geometry(
                    crate::geometry::GeometryError::LatitudeOutOfRange { id: p.id.clone() },
                ));
            }
        }
    }
    per_point_with(ds, aggs, counters, |i, c| {
        let center = ds.point(i);
        match window.frame {
            WindowFrame::Radius { r } => {
                let mut members = Vec::new();
                for j in 0..ds.len() {
                    c.points_scanned += 1;
                    c.distance_computations += 1;
                    let q = ds.point(j);
                    if metric.distance_unchecked(center.x, center.y, q.x, q.y) <= r {
                        members.push(j);
                    }
                }
                members
            }
            WindowFrame::Knn { k } => {
                let mut cands: Vec<(f64, usize)> = Vec::with_capacity(ds.len() - 1);
                for j in 0..ds.len() {
                    if j == i {
                        continue;
                    }
                    c.points_scanned += 1;
                    c.distance_computations += 1;
                    let q = ds.point(j);
                    cands.push((metric.distance_unchecked(center.x, center.y, q.x, q.y), j));
                }
                cands.sort_by(|a, b| {
                    a.0.total_cmp(&b.0)
                        .then_with(|| ds.id_rank(a.1).cmp(&ds.id_rank(b.1)))
                });
                cands.truncate(k);
                let mut members: Vec<usize> = cands.into_iter().map(|(_, j)| j).collect();
                members.push(i);
                members.sort_unstable();
                members
            }
        }
    })
}

/// Shared shape of the per-point executors: materialize each point's
/// window, feed fresh aggregate states, emit one value per call.
fn per_point_with(
    ds: &Dataset,
    aggs: &[&BoundAggregate],
    counters: &mut WorkCounters,
    mut window_of: impl FnMut(usize, &mut WorkCounters) -> Vec<usize>,
) -> Result<Vec<Vec<Option<f64>>>, QueryError> {
    let mut cols = vec![vec![None; ds.len()]; aggs.len()];
    for i in 0..ds.len() {
        let members = window_of(i, counters);
        counters.windows_materialized += 1;
        for (col, agg) in cols.iter_mut().zip(aggs) {
            let mut state = agg.new_state();
            for &q in &members {
                state.add(agg.input(ds, q));
            }
            col[i] = state.finalize();
        }
    }
    Ok(cols)
}

/// Window materialization for the indexed per-point executors. Radius
/// queries already include the center; kNN adds it back around the k
/// nearest others.
fn materialize_window(
    window: &crate::data::WindowSpec,
    ds: &Dataset,
    i: usize,
    counters: &mut WorkCounters,
    mut range: impl FnMut(&Point, f64, &mut WorkCounters) -> Vec<usize>,
    mut knn: impl FnMut(&Point, usize, Option<usize>, &mut WorkCounters) -> Vec<usize>,
) -> Vec<usize> {
    let center = ds.point(i);
    match window.frame {
        WindowFrame::Radius { r } => range(center, r, counters),
        WindowFrame::Knn { k } => {
            let mut members = knn(center, k, Some(i), counters);
            members.push(i);
            members.sort_unstable();
            members
        }
    }
}
