//! kNN windows: each point's window is itself plus its k nearest other
//! points. The grid expands cell rings outward; the quadtree runs a
//! best-first search over node extents. Both stop as soon as no unexplored
//! region can beat the current k-th distance.
//!
//!     cargo run --example knn_window

use spatial_window::data::{Value, WorkCounters};
use spatial_window::geometry::Metric;
use spatial_window::grid::GridIndex;
use spatial_window::oracle;
use spatial_window::quadtree::QuadtreeIndex;
use spatial_window::query::{run_query, IndexParams, IndexPref};
use spatial_window::synth::{generate_dataset, PointDistribution};

fn main() {
    let ds = generate_dataset(
        10_000,
        PointDistribution::Clusters {
            count: 6,
            sigma: 7.0,
        },
        3,
    );
    let grid = GridIndex::build(&ds, None);
    let qt = QuadtreeIndex::build_default(&ds);

    let probe = 1234;
    let center = ds.point(probe).clone();
    let mut gc = WorkCounters::default();
    let mut qc = WorkCounters::default();
    let k = 8;
    let via_grid = grid.knn_query(&ds, &center, k, Some(probe), &mut gc);
    let via_qt = qt.knn_query(&ds, &center, k, Some(probe), &mut qc);
    let reference = oracle::bf_knn(&ds, &center, k, Some(probe), Metric::Planar);
    assert_eq!(via_grid, reference);
    assert_eq!(via_qt, reference);

    println!("{k} nearest neighbors of `{}`:", center.id);
    for &i in &reference {
        let p = ds.point(i);
        let d = Metric::Planar.distance(&center, p).unwrap();
        println!("  {:<8} at distance {d:.4}", p.id);
    }
    println!(
        "grid scanned {} points in {} cells; quadtree scanned {} points in {} nodes; \
     brute force would scan {}",
        gc.points_scanned,
        gc.cells_visited,
        qc.points_scanned,
        qc.nodes_visited,
        ds.len() - 1
    );

    // The same window through the query language.
    let (table, _) = run_query(
        "SELECT AVG(number_of_visits) OVER (8 NEAREST NEIGHBOR ON location) FROM poi",
        &ds,
        IndexPref::Quadtree,
        Metric::Planar,
        IndexParams::default(),
    )
    .unwrap();
    if let Value::Float(v) = &table.rows[probe][0] {
        println!("mean visits over that window (self included): {v:.2}");
    }
}
