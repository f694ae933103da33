//! Distance metrics and circle-versus-rectangle classification shared by
//! both spatial indexes.

use thiserror::Error;

use crate::data::Point;

/// Mean Earth radius in kilometres, used by the haversine metric.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("latitude out of range [-90, 90] on point `{id}`")]
    LatitudeOutOfRange { id: String },
    #[error("{op} supports the planar metric only")]
    UnsupportedMetric { op: &'static str },
}

/// Distance metric over point coordinates. Planar treats (x, y) as raw
/// Euclidean coordinates; haversine treats them as (longitude, latitude)
/// degrees on a sphere and returns kilometres.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Planar,
    Haversine,
}

impl Metric {
    /// Distance between two points. Haversine validates latitudes.
    pub fn distance(&self, a: &Point, b: &Point) -> Result<f64, GeometryError> {
        match self {
            Metric::Planar => Ok(planar_distance(a.x, a.y, b.x, b.y)),
            Metric::Haversine => {
                for p in [a, b] {
                    if !(-90.0..=90.0).contains(&p.y) {
                        return Err(GeometryError::LatitudeOutOfRange { id: p.id.clone() });
                    }
                }
                Ok(haversine_km(a.x, a.y, b.x, b.y))
            }
        }
    }

    /// Same as [`Metric::distance`] but skips the latitude check; callers
    /// validate the dataset once up front.
    pub fn distance_unchecked(&self, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
        match self {
            Metric::Planar => planar_distance(ax, ay, bx, by),
            Metric::Haversine => haversine_km(ax, ay, bx, by),
        }
    }
}

pub fn planar_distance(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let dx = ax - bx;
    let dy = ay - by;
    (dx * dx + dy * dy).sqrt()
}

/// Great-circle distance in km between (lon, lat) pairs in degrees.
pub fn haversine_km(lon1: f64, lat1: f64, lon2: f64, lat2: f64) -> f64 {
    let phi1 = lat1.to_radians();
    let phi2 = lat2.to_radians();
    let dphi = (lat2 - lat1).to_radians();
    let dlambda = (lon2 - lon1).to_radians();
    let a = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    let c = 2.0 * a.sqrt().atan2((1.0 - a).sqrt());
    EARTH_RADIUS_KM * c
}

/// Closed axis-aligned rectangle, `min <= max` on both axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        debug_assert!(min_x <= max_x && min_y <= max_y);
        Rect {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    /// Planar distance from (x, y) to the nearest point of the rectangle
    /// (zero if inside). Computed with the same formula as point distances
    /// so boundary comparisons stay consistent.
    pub fn min_distance(&self, x: f64, y: f64) -> f64 {
        let nx = x.clamp(self.min_x, self.max_x);
        let ny = y.clamp(self.min_y, self.max_y);
        planar_distance(x, y, nx, ny)
    }

    /// Planar distance from (x, y) to the farthest corner.
    pub fn max_distance(&self, x: f64, y: f64) -> f64 {
        let fx = if x - self.min_x >= self.max_x - x {
            self.min_x
        } else {
            self.max_x
        };
        let fy = if y - self.min_y >= self.max_y - y {
            self.min_y
        } else {
            self.max_y
        };
        planar_distance(x, y, fx, fy)
    }
}

/// How a rectangle relates to a closed disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircleRelation {
    Disjoint,
    Partial,
    Contained,
}

/// Classifies `rect` against the closed disk of radius `r` around `center`.
/// Contained means every point of the rectangle is within distance `r`
/// (farthest corner test, inclusive); Disjoint means no point is.
/// Planar only: lon/lat rectangles are not metric rectangles under
/// haversine.
pub fn classify_rect(
    metric: Metric,
    rect: &Rect,
    center: &Point,
    r: f64,
) -> Result<CircleRelation, GeometryError> {
    if metric != Metric::Planar {
        return Err(GeometryError::UnsupportedMetric {
            op: "classify_rect",
        });
    }
    Ok(classify_rect_planar(rect, center.x, center.y, r))
}

pub(crate) fn classify_rect_planar(rect: &Rect, cx: f64, cy: f64, r: f64) -> CircleRelation {
    if rect.max_distance(cx, cy) <= r {
        CircleRelation::Contained
    } else if rect.min_distance(cx, cy) > r {
        CircleRelation::Disjoint
    } else {
        CircleRelation::Partial
    }
}
