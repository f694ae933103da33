//! Per-point spatial window aggregates over 2-D point data.
//!
//! A spatial analytic window query computes, for every point in a
//! dataset, an aggregate over that point's *window*: either its k nearest
//! neighbors plus itself, or everything within radius r plus itself. The
//! engine keeps each aggregate as a constant-size moment state that
//! supports both adding and removing a contribution, so windows slide
//! instead of being recomputed, and answers queries through four
//! strategies over two spatial indexes:
//!
//! * brute-force per-point scans (any metric, the correctness baseline),
//! * per-point range/kNN queries on a uniform grid or a PR quadtree,
//! * a grid *sweep* that walks points in a serpentine cell order and
//!   updates the window from entering/leaving deltas only,
//! * an annotated quadtree path where fully contained nodes contribute
//!   precomputed moment sums without visiting their points.
//!
//! Queries arrive through a small SQL-like language:
//!
//! ```text
//! SELECT poi_id, location, SUM(number_of_visits)
//!        OVER (RADIUS 2.5 ON location) FROM poi_data;
//! SELECT poi_id, AVG(number_of_visits)
//!        OVER (8 NEAREST NEIGHBOR ON location) FROM poi_data;
//! ```
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! ```text
//! cargo run --example sliding_aggregates   # add/remove moment states
//! cargo run --example generate_and_query   # end-to-end query pipeline
//! cargo run --example grid_sweep           # serpentine delta executor
//! cargo run --example quadtree_annotated   # node-annotation fast path
//! cargo run --example knn_window           # ring and best-first kNN
//! cargo run --example explain_plans        # parser and planner choices
//! ```
//!
//! The `swq` binary wraps the same library for file-based work:
//! `swq gen`, `swq query`, `swq bench`, and `swq explain`.
//!
//! # Quick start
//!
//! ```
//! use spatial_window::{run_query, IndexParams, IndexPref, Metric};
//! use spatial_window::synth::{generate_dataset, PointDistribution};
//!
//! let ds = generate_dataset(100, PointDistribution::Uniform, 7);
//! let (table, counters) = run_query(
//!     "SELECT id, COUNT(*) OVER (RADIUS 10 ON location) FROM poi",
//!     &ds,
//!     IndexPref::Grid,
//!     Metric::Planar,
//!     IndexParams::default(),
//! )
//! .unwrap();
//! assert_eq!(table.rows.len(), 100);
//! assert!(counters.distance_computations < 100 * 100);
//! ```

pub mod aggregates;
pub mod cli;
pub mod csvio;
pub mod data;
pub mod geometry;
pub mod grid;
pub mod oracle;
pub mod quadtree;
pub mod query;
pub mod synth;

pub use aggregates::{AggregateKind, AggregateState, BoundAggregate};
pub use data::{Dataset, Point, ResultTable, Value, WindowFrame, WindowSpec, WorkCounters};
pub use geometry::Metric;
pub use grid::GridIndex;
pub use quadtree::QuadtreeIndex;
pub use query::{parse, plan, run_query, IndexParams, IndexPref, QueryError};
