//! End to end: generate a synthetic POI dataset, run the radius-window
//! query through the full parse/plan/execute pipeline, and print the
//! result table as CSV.
//!
//!     cargo run --example generate_and_query

use spatial_window::csvio;
use spatial_window::geometry::Metric;
use spatial_window::query::{run_query, IndexParams, IndexPref};
use spatial_window::synth::{generate_dataset, PointDistribution};

fn main() {
    let ds = generate_dataset(12, PointDistribution::Uniform, 42);

    let query = "SELECT id, location, SUM(number_of_visits) OVER (RADIUS 25 ON location) \
                 FROM poi_data;";
    println!("-- {query}\n");

    let (table, counters) = run_query(
        query,
        &ds,
        IndexPref::Grid,
        Metric::Planar,
        IndexParams::default(),
    )
    .unwrap();

    let mut out = Vec::new();
    csvio::write_result(&mut out, &table).unwrap();
    print!("{}", String::from_utf8(out).unwrap());

    println!(
        "\n-- work: {} distance computations, {} points scanned, {} cells visited",
        counters.distance_computations, counters.points_scanned, counters.cells_visited
    );
}
