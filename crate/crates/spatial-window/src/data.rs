//! Core data model: points, datasets, window specifications, result tables,
//! and the instrumentation counters every executor reports.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;
use thiserror::Error;

/// Reserved name of the coordinate attribute. Queries refer to the point
/// coordinates through this identifier in the `ON` clause and may also
/// select it as a column.
pub const LOCATION_COLUMN: &str = "location";

/// One spatial record: a unique id, planar or lon/lat coordinates, and any
/// number of named numeric attributes (a missing value is NULL).
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub attrs: BTreeMap<String, Option<f64>>,
}

impl Point {
    pub fn new(id: impl Into<String>, x: f64, y: f64) -> Self {
        Point {
            id: id.into(),
            x,
            y,
            attrs: BTreeMap::new(),
        }
    }

    pub fn with_attr(mut self, name: impl Into<String>, value: Option<f64>) -> Self {
        self.attrs.insert(name.into(), value);
        self
    }
}

/// Axis-aligned bounds of a dataset. An empty dataset uses the
/// `min > max` sentinel (`min = +inf`, `max = -inf`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bbox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Bbox {
    pub fn empty() -> Self {
        Bbox {
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min_x > self.max_x || self.min_y > self.max_y
    }

    fn include(&mut self, x: f64, y: f64) {
        self.min_x = self.min_x.min(x);
        self.min_y = self.min_y.min(y);
        self.max_x = self.max_x.max(x);
        self.max_y = self.max_y.max(y);
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    pub fn width(&self) -> f64 {
        (self.max_x - self.min_x).max(0.0)
    }

    pub fn height(&self) -> f64 {
        (self.max_y - self.min_y).max(0.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DatasetError {
    #[error("duplicate point id `{0}`")]
    DuplicateId(String),
    #[error("non-finite coordinate on point `{0}`")]
    NonFiniteCoordinate(String),
    #[error("point `{id}` carries undeclared attribute `{name}`")]
    UndeclaredAttribute { id: String, name: String },
}

/// An immutable, ordered collection of points plus the declared attribute
/// schema. Construction validates ids, coordinates, and attribute names;
/// after that the dataset is safe to share across threads.
#[derive(Debug, Clone)]
pub struct Dataset {
    points: Vec<Point>,
    bbox: Bbox,
    attr_names: Vec<String>,
    /// Columnar copy of the attribute values, `columns[attr][point]`.
    columns: Vec<Vec<Option<f64>>>,
    /// Rank of each point's id in id-sorted order; used as the deterministic
    /// distance tie-break everywhere.
    id_rank: Vec<usize>,
}

impl Dataset {
    /// Builds a dataset from points in the given order. The order is
    /// preserved and is the output order of every query.
    pub fn from_points(points: Vec<Point>, attr_names: Vec<String>) -> Result<Self, DatasetError> {
        let mut seen: HashSet<&str> = HashSet::with_capacity(points.len());
        let declared: HashSet<&str> = attr_names.iter().map(|s| s.as_str()).collect();
        for p in &points {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(DatasetError::NonFiniteCoordinate(p.id.clone()));
            }
            if !seen.insert(p.id.as_str()) {
                return Err(DatasetError::DuplicateId(p.id.clone()));
            }
            for name in p.attrs.keys() {
                if !declared.contains(name.as_str()) {
                    return Err(DatasetError::UndeclaredAttribute {
                        id: p.id.clone(),
                        name: name.clone(),
                    });
                }
            }
        }

        let mut bbox = Bbox::empty();
        for p in &points {
            bbox.include(p.x, p.y);
        }

        let columns = attr_names
            .iter()
            .map(|name| {
                points
                    .iter()
                    .map(|p| p.attrs.get(name).copied().flatten())
                    .collect()
            })
            .collect();

        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| points[a].id.cmp(&points[b].id));
        let mut id_rank = vec![0usize; points.len()];
        for (rank, idx) in order.into_iter().enumerate() {
            id_rank[idx] = rank;
        }

        Ok(Dataset {
            points,
            bbox,
            attr_names,
            columns,
            id_rank,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, idx: usize) -> &Point {
        &self.points[idx]
    }

    pub fn bbox(&self) -> &Bbox {
        &self.bbox
    }

    pub fn attr_names(&self) -> &[String] {
        &self.attr_names
    }

    pub fn attr_index(&self, name: &str) -> Option<usize> {
        self.attr_names.iter().position(|n| n == name)
    }

    /// Attribute value by column and point index; `None` is NULL.
    pub fn attr_value(&self, attr: usize, point: usize) -> Option<f64> {
        self.columns[attr][point]
    }

    pub fn id_rank(&self, point: usize) -> usize {
        self.id_rank[point]
    }
}

/// The spatial frame of an OVER clause: either the k nearest neighbors
/// (plus the point itself) or everything within radius `r` (closed disk,
/// which always includes the point itself).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowFrame {
    Knn { k: usize },
    Radius { r: f64 },
}

/// A window frame bound to the location attribute it ranges over.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSpec {
    pub frame: WindowFrame,
    pub location_attr: String,
}

impl WindowSpec {
    pub fn knn(k: usize, location_attr: impl Into<String>) -> Self {
        WindowSpec {
            frame: WindowFrame::Knn { k },
            location_attr: location_attr.into(),
        }
    }

    pub fn radius(r: f64, location_attr: impl Into<String>) -> Self {
        WindowSpec {
            frame: WindowFrame::Radius { r },
            location_attr: location_attr.into(),
        }
    }
}

/// A single output cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Str(String),
    Float(f64),
    Null,
}

/// Query output: one row per input point, in dataset input order.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl ResultTable {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<Value>>) -> Self {
        debug_assert!(rows.iter().all(|r| r.len() == columns.len()));
        ResultTable { columns, rows }
    }
}

/// Work done by one query execution. All counts only ever increase while a
/// query runs; they are the empirical cost model the bench harness reports.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct WorkCounters {
    /// Point-to-point distance evaluations.
    pub distance_computations: u64,
    /// Points individually examined (classified against a window).
    pub points_scanned: u64,
    /// Quadtree nodes classified or expanded.
    pub nodes_visited: u64,
    /// Grid cells classified or enumerated.
    pub cells_visited: u64,
    /// Windows whose member set was explicitly built.
    pub windows_materialized: u64,
}

impl WorkCounters {
    pub fn merge(&mut self, other: &WorkCounters) {
        self.distance_computations += other.distance_computations;
        self.points_scanned += other.points_scanned;
        self.nodes_visited += other.nodes_visited;
        self.cells_visited += other.cells_visited;
        self.windows_materialized += other.windows_materialized;
    }
}

/// Convenience constructor used by tests and examples: points with a single
/// attribute column.
pub fn dataset_with_attr(
    coords: &[(f64, f64)],
    attr: &str,
    values: &[Option<f64>],
) -> Result<Dataset, DatasetError> {
    let points = coords
        .iter()
        .zip(values)
        .enumerate()
        .map(|(i, (&(x, y), &v))| Point::new(format!("p{i}"), x, y).with_attr(attr, v))
        .collect();
    Dataset::from_points(points, vec![attr.to_string()])
}

/// Attribute values grouped per point, used when constructing datasets with
/// more than one attribute column.
pub fn dataset_from_columns(
    coords: &[(f64, f64)],
    attrs: &[(&str, Vec<Option<f64>>)],
) -> Result<Dataset, DatasetError> {
    let points = coords
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            let mut p = Point::new(format!("p{i}"), x, y);
            for (name, col) in attrs {
                p = p.with_attr(*name, col[i]);
            }
            p
        })
        .collect();
    Dataset::from_points(points, attrs.iter().map(|(n, _)| n.to_string()).collect())
}

#[allow(dead_code)]
fn assert_send_sync<T: Send + Sync>() {}

#[allow(dead_code)]
fn concurrency_contract() {
    assert_send_sync::<Dataset>();
    assert_send_sync::<ResultTable>();
    assert_send_sync::<WorkCounters>();
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_dataset_has_sentinel_bbox() {
        let ds = Dataset::from_points(vec![], vec![]).unwrap();
        assert!(ds.is_empty());
        assert!(ds.bbox().is_empty());
        assert!(ds.bbox().min_x > ds.bbox().max_x);
    }

    #[test]
    fn bbox_is_tight() {
        let pts = vec![
            Point::new("a", 0.0, 0.0),
            Point::new("b", 1.0, 0.0),
            Point::new("c", 3.0, 0.0),
        ];
        let ds = Dataset::from_points(pts, vec![]).unwrap();
        let b = ds.bbox();
        assert_eq!((b.min_x, b.max_x), (0.0, 3.0));
        assert_eq!((b.min_y, b.max_y), (0.0, 0.0));
        for p in ds.points() {
            assert!(b.contains(p.x, p.y));
        }
    }

    #[test]
    fn duplicate_id_rejected() {
        let pts = vec![Point::new("a", 0.0, 0.0), Point::new("a", 1.0, 1.0)];
        let err = Dataset::from_points(pts, vec![]).unwrap_err();
        assert_eq!(err, DatasetError::DuplicateId("a".into()));
    }

    #[test]
    fn non_finite_coordinate_rejected() {
        let pts = vec![Point::new("a", f64::NAN, 0.0)];
        let err = Dataset::from_points(pts, vec![]).unwrap_err();
        assert_eq!(err, DatasetError::NonFiniteCoordinate("a".into()));
    }

    #[test]
    fn undeclared_attribute_rejected() {
        let pts = vec![Point::new("a", 0.0, 0.0).with_attr("v", Some(1.0))];
        let err = Dataset::from_points(pts, vec![]).unwrap_err();
        assert_eq!(
            err,
            DatasetError::UndeclaredAttribute {
                id: "a".into(),
                name: "v".into()
            }
        );
    }

    #[test]
    fn input_order_round_trips() {
        let pts: Vec<Point> = (0..50)
            .map(|i| Point::new(format!("id{}", 49 - i), i as f64, -(i as f64)))
            .collect();
        let ds = Dataset::from_points(pts.clone(), vec![]).unwrap();
        assert_eq!(ds.points(), &pts[..]);
    }

    #[test]
    fn id_rank_orders_by_id() {
        let pts = vec![
            Point::new("c", 0.0, 0.0),
            Point::new("a", 1.0, 0.0),
            Point::new("b", 2.0, 0.0),
        ];
        let ds = Dataset::from_points(pts, vec![]).unwrap();
        assert_eq!(ds.id_rank(0), 2);
        assert_eq!(ds.id_rank(1), 0);
        assert_eq!(ds.id_rank(2), 1);
    }

    #[test]
    fn missing_attr_is_null_in_columns() {
        let pts = vec![
            Point::new("a", 0.0, 0.0).with_attr("v", Some(2.0)),
            Point::new("b", 1.0, 0.0),
            Point::new("c", 2.0, 0.0).with_attr("v", None),
        ];
        let ds = Dataset::from_points(pts, vec!["v".into()]).unwrap();
        assert_eq!(ds.attr_value(0, 0), Some(2.0));
        assert_eq!(ds.attr_value(0, 1), None);
        assert_eq!(ds.attr_value(0, 2), None);
    }
}
