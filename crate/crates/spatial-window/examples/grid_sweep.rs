//! The grid scan executor: points are visited in a serpentine cell order
//! so consecutive radius windows overlap heavily, and each step only
//! classifies the handful of cells where membership can change.
//!
//!     cargo run --example grid_sweep

use spatial_window::aggregates::{AggregateKind, BoundAggregate};
use spatial_window::data::WorkCounters;
use spatial_window::grid::{sweep_execute_with, GridIndex};
use spatial_window::synth::{generate_dataset, PointDistribution, VISITS_ATTR};

fn main() {
    let n = 5_000;
    let r = 6.0;
    let ds = generate_dataset(n, PointDistribution::Uniform, 7);
    let grid = GridIndex::build(&ds, None);
    println!(
        "{n} points in a {}x{} grid (cell side {:.3})",
        grid.n_cols(),
        grid.n_rows(),
        grid.cell_side()
    );

    let aggs = [
        BoundAggregate::bind(AggregateKind::Count, &ds).unwrap(),
        BoundAggregate::bind(AggregateKind::Avg(VISITS_ATTR.into()), &ds).unwrap(),
    ];

    let mut counters = WorkCounters::default();
    let mut entering = 0u64;
    let mut leaving = 0u64;
    let mut steps = 0u64;
    let rows = sweep_execute_with(&grid, &ds, r, &aggs, &mut counters, |step| {
        entering += step.entering.len() as u64;
        leaving += step.leaving.len() as u64;
        steps += 1;
    })
    .unwrap();

    let mean_window: f64 = rows.iter().map(|row| row[0].unwrap()).sum::<f64>() / n as f64;
    println!("mean radius-{r} window size: {mean_window:.1}");
    println!(
        "sweep touched {:.1} entering + {:.1} leaving points per step (window {mean_window:.1})",
        entering as f64 / steps as f64,
        leaving as f64 / steps as f64
    );
    println!(
        "sweep distance computations: {} vs naive n² = {}  ({:.2}%)",
        counters.distance_computations,
        n * n,
        100.0 * counters.distance_computations as f64 / (n * n) as f64
    );
}
