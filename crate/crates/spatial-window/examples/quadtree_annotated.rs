//! Annotated quadtree aggregation: every node carries (count, n, Σv, Σv²)
//! per attribute, so a radius aggregate consumes fully contained subtrees
//! without visiting a single point in them.
//!
//!     cargo run --example quadtree_annotated

use spatial_window::aggregates::{AggregateKind, BoundAggregate};
use spatial_window::data::{Point, WorkCounters};
use spatial_window::quadtree::QuadtreeIndex;
use spatial_window::synth::{generate_dataset, PointDistribution, VISITS_ATTR};

fn main() {
    let ds = generate_dataset(20_000, PointDistribution::Uniform, 99);
    let qt = QuadtreeIndex::build_default(&ds);
    println!("{} points, {} quadtree nodes", ds.len(), qt.node_count());
    qt.verify_annotations(&ds).unwrap();
    println!("annotation sums verified recursively\n");

    let count = BoundAggregate::bind(AggregateKind::Count, &ds).unwrap();
    let avg = BoundAggregate::bind(AggregateKind::Avg(VISITS_ATTR.into()), &ds).unwrap();
    let center = Point::new("probe", 50.0, 50.0);

    for r in [2.0, 8.0, 30.0] {
        let mut c = WorkCounters::default();
        let members = qt
            .aggregate_range(&ds, &center, r, &count, &mut c)
            .unwrap()
            .unwrap();
        let mean = qt
            .aggregate_range(&ds, &center, r, &avg, &mut c)
            .unwrap()
            .unwrap();
        println!(
            "radius {r:>4}: {members:>6} members, mean visits {mean:7.2}, \
             scanned {:>5} points, visited {:>4} nodes",
            c.points_scanned / 2, // two aggregate passes
            c.nodes_visited / 2,
        );
    }
}
