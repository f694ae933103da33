//! Query planning: resolves columns against the dataset and picks an
//! executor per window group.

use crate::aggregates::{AggregateError, BoundAggregate};
use crate::data::{Dataset, WindowFrame, WindowSpec, LOCATION_COLUMN};
use crate::geometry::Metric;
use crate::quadtree;

use super::ast::{QueryAst, SelectItem};
use super::QueryError;

/// Which index the query should run against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexPref {
    None,
    Grid,
    Quadtree,
}

/// Index construction knobs, surfaced on the CLI.
#[derive(Debug, Clone, Copy)]
pub struct IndexParams {
    pub cell_side: Option<f64>,
    pub leaf_capacity: usize,
    pub max_depth: usize,
}

impl Default for IndexParams {
    fn default() -> Self {
        IndexParams {
            cell_side: None,
            leaf_capacity: quadtree::DEFAULT_LEAF_CAPACITY,
            max_depth: quadtree::DEFAULT_MAX_DEPTH,
        }
    }
}

/// Execution strategies. Sweep and annotated paths exist for radius
/// windows only; kNN windows always materialize their neighbor sets
/// because membership depends on the k-th distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecutorKind {
    NaivePerPoint,
    GridPerPoint,
    GridSweep,
    QtPerPoint,
    QtAnnotated,
}

impl ExecutorKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExecutorKind::NaivePerPoint => "naive",
            ExecutorKind::GridPerPoint => "grid_point",
            ExecutorKind::GridSweep => "grid_sweep",
            ExecutorKind::QtPerPoint => "qt_point",
            ExecutorKind::QtAnnotated => "qt_annotated",
        }
    }
}

/// One analytic call inside a window group: the aggregate plus the select
/// slot its values fill.
#[derive(Debug)]
pub struct PlanCall {
    pub select_slot: usize,
    pub agg: BoundAggregate,
}

/// Analytic calls sharing one window specification, evaluated together so
/// the window is materialized once.
#[derive(Debug)]
pub struct PlanGroup {
    pub window: WindowSpec,
    pub executor: ExecutorKind,
    pub calls: Vec<PlanCall>,
}

/// Where each output column comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnSource {
    Id,
    X,
    Y,
    /// The coordinate pair, echoed as WKT `POINT(x y)`.
    Location,
    Attr(usize),
    /// Filled by the plan group owning the slot.
    Analytic,
}

#[derive(Debug)]
pub struct QueryPlan {
    pub metric: Metric,
    pub index: IndexPref,
    pub params: IndexParams,
    /// (column label, source), in select order.
    pub columns: Vec<(String, ColumnSource)>,
    pub groups: Vec<PlanGroup>,
}

pub fn plan(
    ast: &QueryAst,
    ds: &Dataset,
    index: IndexPref,
    metric: Metric,
    params: IndexParams,
) -> Result<QueryPlan, QueryError> {
    if metric == Metric::Haversine && index != IndexPref::None {
        // Cell and node classification is planar-only; haversine runs on
        // the per-point brute-force path.
        return Err(QueryError::Geometry(
            crate::geometry::GeometryError::UnsupportedMetric {
                op: "indexed execution",
            },
        ));
    }

    let mut columns = Vec::with_capacity(ast.select_items.len());
    let mut analytic: Vec<(usize, &super::ast::AnalyticCall)> = Vec::new();
    for (slot, item) in ast.select_items.iter().enumerate() {
        match item {
            SelectItem::Column(name) => {
                let source = match name.as_str() {
                    "id" => ColumnSource::Id,
                    "x" => ColumnSource::X,
                    "y" => ColumnSource::Y,
                    LOCATION_COLUMN => ColumnSource::Location,
                    _ => match ds.attr_index(name) {
                        Some(i) => ColumnSource::Attr(i),
                        None => return Err(QueryError::UnknownColumn { name: name.clone() }),
                    },
                };
                columns.push((name.clone(), source));
            }
            SelectItem::Analytic(call) => {
                if call.window.location_attr != LOCATION_COLUMN {
                    return Err(QueryError::UnknownColumn {
                        name: call.window.location_attr.clone(),
                    });
                }
                columns.push((call.label.clone(), ColumnSource::Analytic));
                analytic.push((slot, call));
            }
        }
    }

    // Group calls by window, preserving first-appearance order, then
    // split annotated-eligible kinds from the rest where it matters.
    let mut groups: Vec<PlanGroup> = Vec::new();
    for (slot, call) in analytic {
        let agg = BoundAggregate::bind(call.kind.clone(), ds).map_err(|e| match e {
            AggregateError::UnknownAttribute { name } => QueryError::UnknownColumn { name },
            other => QueryError::Aggregate(other),
        })?;
        let executor = choose_executor(index, &call.window, &agg);
        match groups
            .iter_mut()
            .find(|g| g.window == call.window && g.executor == executor)
        {
            Some(group) => group.calls.push(PlanCall {
                select_slot: slot,
                agg,
            }),
            None => groups.push(PlanGroup {
                window: call.window.clone(),
                executor,
                calls: vec![PlanCall {
                    select_slot: slot,
                    agg,
                }],
            }),
        }
    }

    Ok(QueryPlan {
        metric,
        index,
        params,
        columns,
        groups,
    })
}

fn choose_executor(index: IndexPref, window: &WindowSpec, agg: &BoundAggregate) -> ExecutorKind {
    match (index, window.frame) {
        (IndexPref::None, _) => ExecutorKind::NaivePerPoint,
        (IndexPref::Grid, WindowFrame::Radius { .. }) => ExecutorKind::GridSweep,
        (IndexPref::Grid, WindowFrame::Knn { .. }) => ExecutorKind::GridPerPoint,
        (IndexPref::Quadtree, WindowFrame::Radius { .. }) => {
            if agg.kind.is_single_moment() {
                ExecutorKind::QtAnnotated
            } else {
                ExecutorKind::QtPerPoint
            }
        }
        (IndexPref::Quadtree, WindowFrame::Knn { .. }) => ExecutorKind::QtPerPoint,
    }
}
