//! Brute-force reference implementations.
//!
//! Everything here trades speed for obviousness: windows are found by
//! scanning all points, and aggregates are recomputed from scratch with a
//! two-pass (mean first, then centered moments) formulation. The engine's
//! incremental raw-moment path is validated against these, so the two
//! sides share no arithmetic.

use crate::aggregates::{AggregateKind, BoundAggregate};
use crate::data::{Dataset, Point};
use crate::geometry::Metric;

/// All point indices within the closed disk of radius `r` around `center`,
/// ascending.
pub fn bf_range(ds: &Dataset, center: &Point, r: f64, metric: Metric) -> Vec<usize> {
    (0..ds.len())
        .filter(|&i| {
            let p = ds.point(i);
            metric.distance_unchecked(center.x, center.y, p.x, p.y) <= r
        })
        .collect()
}

/// The `k` nearest points to `center`, ordered by (distance, id) ascending.
/// `exclude` drops one index from candidacy (the window's own point).
pub fn bf_knn(
    ds: &Dataset,
    center: &Point,
    k: usize,
    exclude: Option<usize>,
    metric: Metric,
) -> Vec<usize> {
    let mut candidates: Vec<(f64, usize)> = (0..ds.len())
        .filter(|&i| Some(i) != exclude)
        .map(|i| {
            let p = ds.point(i);
            (metric.distance_unchecked(center.x, center.y, p.x, p.y), i)
        })
        .collect();
    candidates.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| ds.id_rank(a.1).cmp(&ds.id_rank(b.1)))
    });
    candidates.truncate(k);
    candidates.into_iter().map(|(_, i)| i).collect()
}

/// Recomputes one aggregate over an explicit window.
pub fn bf_window_aggregate(ds: &Dataset, window: &[usize], agg: &BoundAggregate) -> Option<f64> {
    let (a, b) = agg.kind.attr_args();
    let attr = |name: Option<&str>| name.and_then(|n| ds.attr_index(n));
    let (ia, ib) = (attr(a), attr(b));
    let values: Vec<(Option<f64>, Option<f64>)> = window
        .iter()
        .map(|&p| {
            (
                ia.map(|c| ds.attr_value(c, p)).unwrap_or(None),
                ib.map(|c| ds.attr_value(c, p)).unwrap_or(None),
            )
        })
        .collect();
    window_aggregate_from_values(&agg.kind, &values)
}

/// Two-pass recomputation from raw (value, value) tuples; the second slot
/// is ignored for single-attribute kinds.
pub fn window_aggregate_from_values(
    kind: &AggregateKind,
    rows: &[(Option<f64>, Option<f64>)],
) -> Option<f64> {
    if let AggregateKind::Count = kind {
        return Some(rows.len() as f64);
    }
    if rows.is_empty() {
        return None;
    }
    match kind {
        AggregateKind::Count => unreachable!(),
        AggregateKind::CountNonNull(_) => {
            Some(rows.iter().filter(|(a, _)| a.is_some()).count() as f64)
        }
        AggregateKind::Sum(_) => {
            let vals: Vec<f64> = rows.iter().filter_map(|(a, _)| *a).collect();
            (!vals.is_empty()).then(|| vals.iter().sum())
        }
        AggregateKind::Avg(_) => {
            let vals: Vec<f64> = rows.iter().filter_map(|(a, _)| *a).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        }
        AggregateKind::VarPop(_) => centered_second(rows, 0),
        AggregateKind::VarSamp(_) => centered_second(rows, 1),
        AggregateKind::StddevPop(_) => centered_second(rows, 0).map(f64::sqrt),
        AggregateKind::StddevSamp(_) => centered_second(rows, 1).map(f64::sqrt),
        AggregateKind::CovarPop(_, _) => centered_cross(rows, 0),
        AggregateKind::CovarSamp(_, _) => centered_cross(rows, 1),
        AggregateKind::Corr(_, _) => {
            let pairs: Vec<(f64, f64)> = rows.iter().filter_map(|&(a, b)| Some((a?, b?))).collect();
            if pairs.is_empty() {
                return None;
            }
            let n = pairs.len() as f64;
            let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
            let sdx: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
            let sdy: f64 = pairs.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
            let sdxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            if sdx <= 0.0 || sdy <= 0.0 {
                return None;
            }
            Some(sdxy / (sdx.sqrt() * sdy.sqrt()))
        }
    }
}

/// Centered second moment of the first slot; `ddof` 0 for population,
/// 1 for sample.
fn centered_second(rows: &[(Option<f64>, Option<f64>)], ddof: usize) -> Option<f64> {
    let vals: Vec<f64> = rows.iter().filter_map(|(a, _)| *a).collect();
    if vals.len() <= ddof {
        return None;
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let ss: f64 = vals.iter().map(|v| (v - mean) * (v - mean)).sum();
    Some(ss / (n - ddof as f64))
}

/// Centered cross moment over rows where both slots are non-NULL.
fn centered_cross(rows: &[(Option<f64>, Option<f64>)], ddof: usize) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = rows.iter().filter_map(|&(a, b)| Some((a?, b?))).collect();
    if pairs.len() <= ddof {
        return None;
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let s: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(s / (n - ddof as f64))
}

/// Relative/absolute closeness used throughout the test suites.
pub fn nearly_eq(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    let diff = (a - b).abs();
    diff <= abs || diff <= rel * a.abs().max(b.abs())
}

pub fn nearly_eq_opt(a: Option<f64>, b: Option<f64>, rel: f64, abs: f64) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(a), Some(b)) => nearly_eq(a, b, rel, abs),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::dataset_with_attr;

    fn collinear() -> Dataset {
        dataset_with_attr(
            &[(0.0, 0.0), (1.0, 0.0), (3.0, 0.0)],
            "v",
            &[Some(1.0), Some(2.0), Some(3.0)],
        )
        .unwrap()
    }

    #[test]
    fn range_on_collinear_points() {
        let ds = collinear();
        let w = bf_range(&ds, ds.point(0), 1.5, Metric::Planar);
        assert_eq!(w, vec![0, 1]);
    }

    #[test]
    fn knn_sorts_by_distance() {
        let ds = collinear();
        let w = bf_knn(&ds, ds.point(0), 2, Some(0), Metric::Planar);
        assert_eq!(w, vec![1, 2]);
    }

    #[test]
    fn var_pop_of_two_and_four() {
        let ds =
            dataset_with_attr(&[(0.0, 0.0), (1.0, 0.0)], "v", &[Some(2.0), Some(4.0)]).unwrap();
        let agg = BoundAggregate::bind(AggregateKind::VarPop("v".into()), &ds).unwrap();
        assert_eq!(bf_window_aggregate(&ds, &[0, 1], &agg), Some(1.0));
    }

    #[test]
    fn one_pass_two_pass_agreement() {
        // The oracle's centered formulas against the plain raw-moment
        // identity, on a small fixed set.
        let rows: Vec<(Option<f64>, Option<f64>)> = vec![
            (Some(1.5), Some(2.0)),
            (Some(-3.0), Some(0.5)),
            (Some(4.0), Some(-1.0)),
        ];
        let vals: Vec<f64> = rows.iter().map(|r| r.0.unwrap()).collect();
        let n = vals.len() as f64;
        let raw =
            vals.iter().map(|v| v * v).sum::<f64>() / n - (vals.iter().sum::<f64>() / n).powi(2);
        let two_pass =
            window_aggregate_from_values(&AggregateKind::VarPop("a".into()), &rows).unwrap();
        assert!(nearly_eq(raw, two_pass, 1e-12, 1e-12));
    }
}
