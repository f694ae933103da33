//! Point-region quadtree with per-node moment annotations.
//!
//! Space splits into four equal quadrants per level, so node extents are
//! query-independent and each node can carry exact aggregate annotations:
//! the point count plus (n, Σv, Σv²) per declared attribute. A radius
//! aggregate then consumes fully contained nodes without ever visiting
//! their points.

use std::collections::BinaryHeap;

use crate::aggregates::{AggregateError, BoundAggregate};
use crate::data::{Dataset, Point, WorkCounters};
use crate::geometry::{classify_rect_planar, planar_distance, CircleRelation, Rect};

pub const DEFAULT_LEAF_CAPACITY: usize = 8;
pub const DEFAULT_MAX_DEPTH: usize = 32;

/// Moment annotation of one attribute over one subtree.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AttrMoments {
    /// Non-NULL values in the subtree.
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

#[derive(Debug)]
enum Body {
    /// Point indices; exceeds capacity only at max depth (coincident
    /// points overflow here).
    Leaf(Vec<usize>),
    /// Children in NW, NE, SW, SE order; empty quadrants stay None.
    Internal([Option<Box<QtNode>>; 4]),
}

#[derive(Debug)]
struct QtNode {
    extent: Rect,
    /// Build-order sequence number; deterministic priority-queue tie-break.
    seq: u32,
    /// Total points in the subtree.
    count: u64,
    /// Per-attribute annotations, indexed like the dataset's attr columns.
    moments: Vec<AttrMoments>,
    body: Body,
}

impl QtNode {
    fn gather(&self, out: &mut Vec<usize>) {
        match &self.body {
            Body::Leaf(pts) => out.extend_from_slice(pts),
            Body::Internal(children) => {
                for child in children.iter().flatten() {
                    child.gather(out);
                }
            }
        }
    }
}

#[derive(Debug)]
pub struct QuadtreeIndex {
    root: Option<Box<QtNode>>,
    leaf_capacity: usize,
    max_depth: usize,
    node_count: usize,
}

impl QuadtreeIndex {
    pub fn build_default(ds: &Dataset) -> Self {
        Self::build(ds, DEFAULT_LEAF_CAPACITY, DEFAULT_MAX_DEPTH)
    }

    pub fn build(ds: &Dataset, leaf_capacity: usize, max_depth: usize) -> Self {
        let leaf_capacity = leaf_capacity.max(1);
        if ds.is_empty() {
            return QuadtreeIndex {
                root: None,
                leaf_capacity,
                max_depth,
                node_count: 0,
            };
        }
        let bbox = ds.bbox();
        let extent = Rect::new(bbox.min_x, bbox.min_y, bbox.max_x, bbox.max_y);
        let mut seq = 0u32;
        let root = build_node(
            ds,
            extent,
            (0..ds.len()).collect(),
            0,
            leaf_capacity,
            max_depth,
            &mut seq,
        );
        QuadtreeIndex {
            root: Some(root),
            leaf_capacity,
            max_depth,
            node_count: seq as usize,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn leaf_capacity(&self) -> usize {
        self.leaf_capacity
    }

    /// All point indices within the closed disk of radius `r`, ascending.
    pub fn range_query(
        &self,
        ds: &Dataset,
        center: &Point,
        r: f64,
        counters: &mut WorkCounters,
    ) -> Vec<usize> {
        let mut out = Vec::new();
        if let Some(root) = &self.root {
            range_recurse(root, ds, center, r, &mut out, counters);
        }
        out.sort_unstable();
        out
    }

    /// Best-first kNN: nodes come off a priority queue keyed by the
    /// minimum possible distance to their extent (ties broken by build
    /// sequence), so the search stops as soon as no remaining node can
    /// beat the current k-th candidate.
    pub fn knn_query(
        &self,
        ds: &Dataset,
        center: &Point,
        k: usize,
        exclude: Option<usize>,
        counters: &mut WorkCounters,
    ) -> Vec<usize> {
        let Some(root) = &self.root else {
            return Vec::new();
        };
        if k == 0 {
            return Vec::new();
        }
        let mut frontier: BinaryHeap<NodeEntry<'_>> = BinaryHeap::new();
        frontier.push(NodeEntry {
            min_dist: root.extent.min_distance(center.x, center.y),
            node: root,
        });
        let mut best: BinaryHeap<Cand> = BinaryHeap::with_capacity(k + 1);
        while let Some(entry) = frontier.pop() {
            if best.len() == k && entry.min_dist > best.peek().unwrap().dist {
                break;
            }
            counters.nodes_visited += 1;
            match &entry.node.body {
                Body::Leaf(pts) => {
                    for &i in pts {
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
                Body::Internal(children) => {
                    for child in children.iter().flatten() {
                        frontier.push(NodeEntry {
                            min_dist: child.extent.min_distance(center.x, center.y),
                            node: child,
                        });
                    }
                }
            }
        }
        let mut result: Vec<Cand> = best.into_vec();
        result.sort_unstable();
        result.into_iter().map(|c| c.idx).collect()
    }

    /// Radius-window aggregate over the annotations: contained nodes
    /// contribute their moment block without visiting points, partial
    /// leaves test points individually. Single-attribute moment kinds
    /// only; pair kinds need the actual value pairs.
    pub fn aggregate_range(
        &self,
        ds: &Dataset,
        center: &Point,
        r: f64,
        agg: &BoundAggregate,
        counters: &mut WorkCounters,
    ) -> Result<Option<f64>, AggregateError> {
        if !agg.kind.is_single_moment() {
            return Err(AggregateError::UnsupportedAggregate {
                name: agg.kind.name().to_string(),
            });
        }
        let mut state = agg.new_state();
        if let Some(root) = &self.root {
            aggregate_recurse(root, ds, center, r, agg, &mut state, counters);
        }
        Ok(state.finalize())
    }

    /// Recomputes every node's annotation from its subtree and compares.
    pub fn verify_annotations(&self, ds: &Dataset) -> Result<(), String> {
        if let Some(root) = &self.root {
            verify_node(root, ds, self.leaf_capacity, self.max_depth, 0)?;
        }
        Ok(())
    }
}

fn leaf_moments(ds: &Dataset, pts: &[usize]) -> Vec<AttrMoments> {
    (0..ds.attr_names().len())
        .map(|attr| {
            let mut m = AttrMoments::default();
            for &i in pts {
                if let Some(v) = ds.attr_value(attr, i) {
                    m.n += 1;
                    m.sum += v;
                    m.sum_sq += v * v;
                }
            }
            m
        })
        .collect()
}

fn build_node(
    ds: &Dataset,
    extent: Rect,
    indices: Vec<usize>,
    depth: usize,
    leaf_capacity: usize,
    max_depth: usize,
    seq: &mut u32,
) -> Box<QtNode> {
    let my_seq = *seq;
    *seq += 1;
    if indices.len() <= leaf_capacity || depth == max_depth {
        let count = indices.len() as u64;
        let moments = leaf_moments(ds, &indices);
        return Box::new(QtNode {
            extent,
            seq: my_seq,
            count,
            moments,
            body: Body::Leaf(indices),
        });
    }

    let mid_x = (extent.min_x + extent.max_x) / 2.0;
    let mid_y = (extent.min_y + extent.max_y) / 2.0;
    // Half-open split: west/south take < mid, east/north take >= mid, so
    // max-edge points stay inside the bbox boundary.
    let mut quads: [Vec<usize>; 4] = Default::default();
    for i in indices {
        let p = ds.point(i);
        let east = p.x >= mid_x;
        let north = p.y >= mid_y;
        let slot = match (north, east) {
            (true, false) => 0,  // NW
            (true, true) => 1,   // NE
            (false, false) => 2, // SW
            (false, true) => 3,  // SE
        };
        quads[slot].push(i);
    }
    let extents = [
        Rect::new(extent.min_x, mid_y, mid_x, extent.max_y),
        Rect::new(mid_x, mid_y, extent.max_x, extent.max_y),
        Rect::new(extent.min_x, extent.min_y, mid_x, mid_y),
        Rect::new(mid_x, extent.min_y, extent.max_x, mid_y),
    ];

    let mut count = 0u64;
    let mut moments = vec![AttrMoments::default(); ds.attr_names().len()];
    let mut children: [Option<Box<QtNode>>; 4] = Default::default();
    for (slot, (pts, child_extent)) in quads.into_iter().zip(extents).enumerate() {
        if pts.is_empty() {
            continue;
        }
        let child = build_node(
            ds,
            child_extent,
            pts,
            depth + 1,
            leaf_capacity,
            max_depth,
            seq,
        );
        count += child.count;
        for (m, cm) in moments.iter_mut().zip(&child.moments) {
            m.n += cm.n;
            m.sum += cm.sum;
            m.sum_sq += cm.sum_sq;
        }
        children[slot] = Some(child);
    }
    Box::new(QtNode {
        extent,
        seq: my_seq,
        count,
        moments,
        body: Body::Internal(children),
    })
}

fn range_recurse(
    node: &QtNode,
    ds: &Dataset,
    center: &Point,
    r: f64,
    out: &mut Vec<usize>,
    counters: &mut WorkCounters,
) {
    counters.nodes_visited += 1;
    match classify_rect_planar(&node.extent, center.x, center.y, r) {
        CircleRelation::Disjoint => {}
        CircleRelation::Contained => node.gather(out),
        CircleRelation::Partial => match &node.body {
            Body::Leaf(pts) => {
                for &i in pts {
                    counters.points_scanned += 1;
                    counters.distance_computations += 1;
                    let p = ds.point(i);
                    if planar_distance(center.x, center.y, p.x, p.y) <= r {
                        out.push(i);
                    }
                }
            }
            Body::Internal(children) => {
                for child in children.iter().flatten() {
                    range_recurse(child, ds, center, r, out, counters);
                }
            }
        },
    }
}

fn aggregate_recurse(
    node: &QtNode,
    ds: &Dataset,
    center: &Point,
    r: f64,
    agg: &BoundAggregate,
    state: &mut crate::aggregates::AggregateState,
    counters: &mut WorkCounters,
) {
    counters.nodes_visited += 1;
    match classify_rect_planar(&node.extent, center.x, center.y, r) {
        CircleRelation::Disjoint => {}
        CircleRelation::Contained => match agg.single_attr() {
            Some(attr) => {
                let m = &node.moments[attr];
                state.merge_moments(node.count, m.n, m.sum, m.sum_sq);
            }
            None => state.merge_moments(node.count, 0, 0.0, 0.0),
        },
        CircleRelation::Partial => match &node.body {
            Body::Leaf(pts) => {
                for &i in pts {
                    counters.points_scanned += 1;
                    counters.distance_computations += 1;
                    let p = ds.point(i);
                    if planar_distance(center.x, center.y, p.x, p.y) <= r {
                        state.add(agg.input(ds, i));
                    }
                }
            }
            Body::Internal(children) => {
                for child in children.iter().flatten() {
                    aggregate_recurse(child, ds, center, r, agg, state, counters);
                }
            }
        },
    }
}

fn verify_node(
    node: &QtNode,
    ds: &Dataset,
    leaf_capacity: usize,
    max_depth: usize,
    depth: usize,
) -> Result<(), String> {
    let mut pts = Vec::new();
    node.gather(&mut pts);
    if node.count != pts.len() as u64 {
        return Err(format!(
            "node {} count {} but subtree holds {}",
            node.seq,
            node.count,
            pts.len()
        ));
    }
    for &i in &pts {
        let p = ds.point(i);
        if !node.extent.contains(p.x, p.y) {
            return Err(format!(
                "point {} outside extent of node {}",
                p.id, node.seq
            ));
        }
    }
    let expect = leaf_moments(ds, &pts);
    for (attr, (got, want)) in node.moments.iter().zip(&expect).enumerate() {
        if got.n != want.n
            || !crate::oracle::nearly_eq(got.sum, want.sum, 1e-9, 1e-9)
            || !crate::oracle::nearly_eq(got.sum_sq, want.sum_sq, 1e-9, 1e-9)
        {
            return Err(format!(
                "node {} attr {attr}: annotation {got:?} vs recomputed {want:?}",
                node.seq
            ));
        }
    }
    match &node.body {
        Body::Leaf(pts) => {
            if pts.len() > leaf_capacity && depth < max_depth {
                return Err(format!(
                    "leaf {} over capacity ({} > {}) above max depth",
                    node.seq,
                    pts.len(),
                    leaf_capacity
                ));
            }
        }
        Body::Internal(children) => {
            for child in children.iter().flatten() {
                verify_node(child, ds, leaf_capacity, max_depth, depth + 1)?;
            }
        }
    }
    Ok(())
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

/// Frontier entry; the `BinaryHeap` is a max-heap, so ordering is reversed
/// to pop the nearest node first.
struct NodeEntry<'a> {
    min_dist: f64,
    node: &'a QtNode,
}

impl PartialEq for NodeEntry<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.min_dist == other.min_dist && self.node.seq == other.node.seq
    }
}

impl Eq for NodeEntry<'_> {}

impl Ord for NodeEntry<'_> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .min_dist
            .total_cmp(&self.min_dist)
            .then(other.node.seq.cmp(&self.node.seq))
    }
}

impl PartialOrd for NodeEntry<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregates::AggregateKind;
    use crate::data::{dataset_with_attr, Dataset};
    use crate::geometry::Metric;
    use crate::oracle;
    use crate::synth::{generate_dataset, PointDistribution, SplitMix64, VISITS_ATTR};

    fn quadrants() -> Dataset {
        dataset_with_attr(
            &[(0.25, 0.75), (0.75, 0.75), (0.25, 0.25), (0.75, 0.25)],
            "v",
            &[Some(1.0), Some(2.0), Some(3.0), Some(4.0)],
        )
        .unwrap()
    }

    #[test]
    fn one_split_with_capacity_one() {
        let ds = quadrants();
        let qt = QuadtreeIndex::build(&ds, 1, 32);
        let root = qt.root.as_ref().unwrap();
        assert_eq!(root.count, 4);
        match &root.body {
            Body::Internal(children) => {
                assert!(children.iter().all(|c| c.is_some()));
                for child in children.iter().flatten() {
                    assert!(matches!(child.body, Body::Leaf(_)));
                    assert_eq!(child.count, 1);
                }
            }
            Body::Leaf(_) => panic!("expected a split"),
        }
        qt.verify_annotations(&ds).unwrap();
    }

    #[test]
    fn coincident_points_overflow_at_max_depth() {
        let coords = vec![(5.0, 5.0); 9];
        let values = vec![Some(1.0); 9];
        let ds = dataset_with_attr(&coords, "v", &values).unwrap();
        let qt = QuadtreeIndex::build(&ds, 8, 6);
        qt.verify_annotations(&ds).unwrap();
        let mut c = WorkCounters::default();
        let got = qt.range_query(&ds, ds.point(0), 0.0, &mut c);
        assert_eq!(got, (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn contained_root_needs_no_distances() {
        let ds = quadrants();
        let qt = QuadtreeIndex::build(&ds, 8, 32);
        let center = crate::data::Point::new("q", 0.5, 0.5);
        let mut c = WorkCounters::default();
        let got = qt.range_query(&ds, &center, 1.0, &mut c);
        assert_eq!(got, vec![0, 1, 2, 3]);
        assert_eq!(c.distance_computations, 0);
    }

    #[test]
    fn zero_radius_hits_colocated_points_only() {
        let ds = dataset_with_attr(
            &[(1.0, 1.0), (1.0, 1.0), (2.0, 2.0)],
            "v",
            &[Some(1.0), Some(2.0), Some(3.0)],
        )
        .unwrap();
        let qt = QuadtreeIndex::build_default(&ds);
        let mut c = WorkCounters::default();
        assert_eq!(qt.range_query(&ds, ds.point(0), 0.0, &mut c), vec![0, 1]);
    }

    #[test]
    fn random_annotations_are_consistent() {
        let ds = generate_dataset(
            512,
            PointDistribution::Clusters {
                count: 5,
                sigma: 6.0,
            },
            17,
        );
        let qt = QuadtreeIndex::build_default(&ds);
        qt.verify_annotations(&ds).unwrap();
    }

    #[test]
    fn random_range_matches_oracle() {
        let ds = generate_dataset(512, PointDistribution::Uniform, 23);
        let qt = QuadtreeIndex::build_default(&ds);
        let mut rng = SplitMix64::new(99);
        for _ in 0..50 {
            let center = crate::data::Point::new(
                "q",
                rng.next_f64() * 110.0 - 5.0,
                rng.next_f64() * 110.0 - 5.0,
            );
            let r = rng.next_f64() * 30.0;
            let mut c = WorkCounters::default();
            assert_eq!(
                qt.range_query(&ds, &center, r, &mut c),
                oracle::bf_range(&ds, &center, r, Metric::Planar)
            );
        }
    }

    #[test]
    fn knn_examples_and_oracle() {
        let ds = dataset_with_attr(
            &[(0.0, 0.0), (1.0, 0.0), (3.0, 0.0)],
            "v",
            &[Some(1.0), Some(2.0), Some(3.0)],
        )
        .unwrap();
        let qt = QuadtreeIndex::build_default(&ds);
        let mut c = WorkCounters::default();
        assert_eq!(qt.knn_query(&ds, ds.point(0), 1, Some(0), &mut c), vec![1]);
        assert_eq!(
            qt.knn_query(&ds, ds.point(0), 9, Some(0), &mut c),
            vec![1, 2]
        );

        let ds = generate_dataset(
            512,
            PointDistribution::Clusters {
                count: 3,
                sigma: 8.0,
            },
            31,
        );
        let qt = QuadtreeIndex::build_default(&ds);
        let mut rng = SplitMix64::new(4);
        for k in [1usize, 5, 16] {
            for _ in 0..20 {
                let i = rng.next_below(ds.len() as u64) as usize;
                let center = ds.point(i).clone();
                let mut c = WorkCounters::default();
                assert_eq!(
                    qt.knn_query(&ds, &center, k, Some(i), &mut c),
                    oracle::bf_knn(&ds, &center, k, Some(i), Metric::Planar),
                    "k {k} center {i}"
                );
            }
        }
    }

    #[test]
    fn aggregate_range_examples() {
        let ds = quadrants();
        let qt = QuadtreeIndex::build(&ds, 1, 32);
        let center = crate::data::Point::new("q", 0.5, 0.5);
        let count = BoundAggregate::bind(AggregateKind::Count, &ds).unwrap();
        let avg = BoundAggregate::bind(AggregateKind::Avg("v".into()), &ds).unwrap();

        let mut c = WorkCounters::default();
        let got = qt
            .aggregate_range(&ds, &center, 1.0, &count, &mut c)
            .unwrap();
        assert_eq!(got, Some(4.0));
        assert_eq!(c.points_scanned, 0);

        let mut c = WorkCounters::default();
        let far = crate::data::Point::new("q", 50.0, 50.0);
        assert_eq!(
            qt.aggregate_range(&ds, &far, 1.0, &count, &mut c).unwrap(),
            Some(0.0)
        );
        assert_eq!(
            qt.aggregate_range(&ds, &far, 1.0, &avg, &mut c).unwrap(),
            None
        );
    }

    #[test]
    fn pair_kinds_are_rejected() {
        let ds = quadrants();
        let qt = QuadtreeIndex::build_default(&ds);
        let agg = BoundAggregate::bind(AggregateKind::Corr("v".into(), "v".into()), &ds).unwrap();
        let mut c = WorkCounters::default();
        let err = qt
            .aggregate_range(&ds, ds.point(0), 1.0, &agg, &mut c)
            .unwrap_err();
        assert!(matches!(err, AggregateError::UnsupportedAggregate { .. }));
    }

    #[test]
    fn random_aggregates_match_oracle() {
        let ds = generate_dataset(512, PointDistribution::Uniform, 47);
        let qt = QuadtreeIndex::build_default(&ds);
        let sum = BoundAggregate::bind(AggregateKind::Sum(VISITS_ATTR.into()), &ds).unwrap();
        let var = BoundAggregate::bind(AggregateKind::VarPop(VISITS_ATTR.into()), &ds).unwrap();
        let mut rng = SplitMix64::new(7);
        for _ in 0..50 {
            let i = rng.next_below(ds.len() as u64) as usize;
            let center = ds.point(i).clone();
            let r = rng.next_f64() * 20.0;
            let window = oracle::bf_range(&ds, &center, r, Metric::Planar);
            for agg in [&sum, &var] {
                let mut c = WorkCounters::default();
                let got = qt.aggregate_range(&ds, &center, r, agg, &mut c).unwrap();
                let want = oracle::bf_window_aggregate(&ds, &window, agg);
                assert!(
                    oracle::nearly_eq_opt(got, want, 1e-9, 1e-12),
                    "{got:?} vs {want:?}"
                );
            }
        }
    }

    #[test]
    fn contained_nodes_save_point_visits() {
        let ds = generate_dataset(512, PointDistribution::Uniform, 13);
        let qt = QuadtreeIndex::build_default(&ds);
        let count = BoundAggregate::bind(AggregateKind::Count, &ds).unwrap();
        let center = crate::data::Point::new("q", 50.0, 50.0);
        let mut c = WorkCounters::default();
        let got = qt
            .aggregate_range(&ds, &center, 40.0, &count, &mut c)
            .unwrap();
        let cardinality = got.unwrap() as u64;
        assert!(cardinality > 100);
        assert!(
            c.points_scanned < cardinality,
            "scanned {} of a window of {}",
            c.points_scanned,
            cardinality
        );
    }
}
