//! Parsing and planning: how query text becomes an AST and which executor
//! each index preference selects for a given window and aggregate mix.
//!
//!     cargo run --example explain_plans

use spatial_window::data::dataset_from_columns;
use spatial_window::geometry::Metric;
use spatial_window::query::{parse, plan, IndexParams, IndexPref};

fn main() {
    let ds = dataset_from_columns(
        &[(0.0, 0.0), (1.0, 1.0), (2.0, 0.5)],
        &[
            ("number_of_visits", vec![Some(10.0), Some(20.0), Some(30.0)]),
            ("rating", vec![Some(4.1), None, Some(3.7)]),
        ],
    )
    .unwrap();

    let queries = [
        "SELECT id, SUM(number_of_visits) OVER (RADIUS 2.5 ON location) FROM poi_data;",
        "SELECT id, SUM(number_of_visits) OVER (3 NEAREST NEIGHBOR ON location) FROM poi_data;",
        "SELECT AVG(rating) OVER (RADIUS 1 ON location), CORR(number_of_visits, rating) OVER (RADIUS 1 ON location) FROM poi_data",
    ];

    for text in queries {
        let ast = parse(text).unwrap();
        println!("query:    {text}");
        println!("unparsed: {}", ast.unparse());
        for pref in [IndexPref::None, IndexPref::Grid, IndexPref::Quadtree] {
            let plan = plan(&ast, &ds, pref, Metric::Planar, IndexParams::default()).unwrap();
            let groups: Vec<String> = plan
                .groups
                .iter()
                .map(|g| {
                    let kinds: Vec<&str> = g.calls.iter().map(|c| c.agg.kind.name()).collect();
                    format!("{} [{}]", g.executor.name(), kinds.join(", "))
                })
                .collect();
            println!("  {pref:?}: {}", groups.join(" + "));
        }
        println!();
    }

    // Errors carry positions and expectations.
    for bad in [
        "SELECT x OVER y FROM t",
        "SELECT SUM(v) OVER () FROM t",
        "SELECT SUM(v) OVER my_window FROM t",
        "SELECT MIN(v) OVER (RADIUS 1 ON location) FROM t",
    ] {
        println!("{bad}\n  -> {}", parse(bad).unwrap_err());
    }
}
