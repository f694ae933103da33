//! Command-line front end: data generation, query execution, executor
//! benchmarking, and plan explanation. The binary (`swq`) is a thin
//! dispatcher over this module.
//!
//! Exit codes: 0 on success, 1 on a query error (parse/plan/execute),
//! 2 on an I/O or data-format error.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::csvio::{self, CsvError};
use crate::data::{Dataset, WindowFrame};
use crate::geometry::Metric;
use crate::query::{
    self, build_index, execute, ExecutorKind, IndexParams, IndexPref, QueryError, QueryPlan,
};
use crate::synth::{self, PointDistribution};

#[derive(Debug, Parser)]
#[command(
    name = "swq",
    about = "Spatial window queries: per-point kNN/radius window aggregates"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic point CSV (`id,x,y,number_of_visits`).
    Gen(GenArgs),
    /// Run a query over a CSV dataset; results on stdout, counters on
    /// stderr.
    Query(QueryArgs),
    /// Time executors on one query; one JSON record per line on stdout.
    Bench(BenchArgs),
    /// Show the plan a query would run with.
    Explain(QueryArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DistArg {
    Uniform,
    Clusters,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum IndexArg {
    None,
    Grid,
    Quadtree,
}

impl From<IndexArg> for IndexPref {
    fn from(v: IndexArg) -> Self {
        match v {
            IndexArg::None => IndexPref::None,
            IndexArg::Grid => IndexPref::Grid,
            IndexArg::Quadtree => IndexPref::Quadtree,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    Planar,
    Haversine,
}

impl From<MetricArg> for Metric {
    fn from(v: MetricArg) -> Self {
        match v {
            MetricArg::Planar => Metric::Planar,
            MetricArg::Haversine => Metric::Haversine,
        }
    }
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Number of points.
    #[arg(long)]
    n: usize,
    /// Coordinate distribution over [0,100)².
    #[arg(long, value_enum, default_value = "uniform")]
    dist: DistArg,
    /// Cluster count (clusters distribution).
    #[arg(long, default_value_t = 8)]
    clusters: usize,
    /// Cluster spread (clusters distribution).
    #[arg(long, default_value_t = 5.0)]
    sigma: f64,
    /// Generator seed; the same seed reproduces the file byte for byte.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IndexOpts {
    #[arg(long, value_enum, default_value = "none")]
    index: IndexArg,
    #[arg(long, value_enum, default_value = "planar")]
    metric: MetricArg,
    /// Grid cell side; default targets ~4 points per cell.
    #[arg(long)]
    cell_side: Option<f64>,
    #[arg(long, default_value_t = crate::quadtree::DEFAULT_LEAF_CAPACITY)]
    leaf_capacity: usize,
    #[arg(long, default_value_t = crate::quadtree::DEFAULT_MAX_DEPTH)]
    max_depth: usize,
}

impl IndexOpts {
    fn params(&self) -> IndexParams {
        IndexParams {
            cell_side: self.cell_side,
            leaf_capacity: self.leaf_capacity,
            max_depth: self.max_depth,
        }
    }
}

#[derive(Debug, Args)]
struct QueryArgs {
    /// Input CSV with `id,x,y` plus numeric attribute columns.
    #[arg(long)]
    data: PathBuf,
    /// Query text.
    #[arg(long)]
    query: String,
    #[command(flatten)]
    index: IndexOpts,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    query: QueryArgs,
    /// Comma-separated executors: naive, grid_point, grid_sweep,
    /// qt_point, qt_annotated.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "naive,grid_sweep,qt_annotated"
    )]
    executors: Vec<String>,
    #[arg(long, default_value_t = 1)]
    reps: usize,
}

/// One benchmark observation.
#[derive(Debug, Serialize)]
struct BenchRecord<'a> {
    executor: &'a str,
    n: usize,
    window_kind: &'a str,
    param: f64,
    distance_computations: u64,
    points_scanned: u64,
    nodes_visited: u64,
    cells_visited: u64,
    wall_time_ns: u128,
}

enum CliError {
    Query(QueryError),
    Data(CsvError),
    Io(io::Error),
    Usage(String),
}

impl From<QueryError> for CliError {
    fn from(e: QueryError) -> Self {
        CliError::Query(e)
    }
}

impl From<CsvError> for CliError {
    fn from(e: CsvError) -> Self {
        CliError::Data(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn report(&self) -> (i32, String) {
        match self {
            CliError::Query(e) => (1, format!("query error: {e}")),
            CliError::Usage(msg) => (1, format!("error: {msg}")),
            CliError::Data(e) => (2, format!("data error: {e}")),
            CliError::Io(e) => (2, format!("io error: {e}")),
        }
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Query(args) => cmd_query(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Explain(args) => cmd_explain(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let (code, msg) = e.report();
            eprintln!("{msg}");
            code
        }
    }
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let dist = match args.dist {
        DistArg::Uniform => PointDistribution::Uniform,
        DistArg::Clusters => PointDistribution::Clusters {
            count: args.clusters,
            sigma: args.sigma,
        },
    };
    let ds = synth::generate_dataset(args.n, dist, args.seed);
    match &args.out {
        Some(path) => csvio::write_dataset(File::create(path)?, &ds)?,
        None => csvio::write_dataset(io::stdout().lock(), &ds)?,
    }
    Ok(())
}

fn cmd_query(args: QueryArgs) -> Result<(), CliError> {
    let ds = csvio::read_dataset_path(&args.data)?;
    let (table, counters) = query::run_query(
        &args.query,
        &ds,
        args.index.index.into(),
        args.index.metric.into(),
        args.index.params(),
    )?;
    csvio::write_result(io::stdout().lock(), &table)?;
    eprintln!(
        "counters: distance_computations={} points_scanned={} nodes_visited={} cells_visited={} windows_materialized={}",
        counters.distance_computations,
        counters.points_scanned,
        counters.nodes_visited,
        counters.cells_visited,
        counters.windows_materialized,
    );
    Ok(())
}

fn cmd_explain(args: QueryArgs) -> Result<(), CliError> {
    let ds = csvio::read_dataset_path(&args.data)?;
    let ast = query::parse(&args.query)?;
    let plan = query::plan(
        &ast,
        &ds,
        args.index.index.into(),
        args.index.metric.into(),
        args.index.params(),
    )?;
    let mut out = io::stdout().lock();
    writeln!(out, "index: {:?}", plan.index)?;
    writeln!(out, "metric: {:?}", plan.metric)?;
    for (label, _) in &plan.columns {
        writeln!(out, "column: {label}")?;
    }
    for group in &plan.groups {
        let frame = describe_frame(&group.window.frame);
        let kinds: Vec<&str> = group.calls.iter().map(|c| c.agg.kind.name()).collect();
        writeln!(
            out,
            "group: window {frame} -> {} [{}]",
            group.executor.name(),
            kinds.join(", ")
        )?;
    }
    Ok(())
}

fn describe_frame(frame: &WindowFrame) -> String {
    match frame {
        WindowFrame::Knn { k } => format!("{k} NEAREST NEIGHBOR"),
        WindowFrame::Radius { r } => format!("RADIUS {r}"),
    }
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let ds = csvio::read_dataset_path(&args.query.data)?;
    let ast = query::parse(&args.query.query)?;
    let metric: Metric = args.query.index.metric.into();
    let params = args.query.index.params();

    let mut out = io::stdout().lock();
    for name in &args.executors {
        let executor = executor_by_name(name)
            .ok_or_else(|| CliError::Usage(format!("unknown executor `{name}`")))?;
        let plan = plan_for_executor(&ast, &ds, executor, metric, params)?;
        let (window_kind, param) = match plan
            .groups
            .first()
            .map(|g| g.window.frame)
            .ok_or_else(|| CliError::Usage("bench needs an analytic call".into()))?
        {
            WindowFrame::Knn { k } => ("knn", k as f64),
            WindowFrame::Radius { r } => ("radius", r),
        };
        let index = build_index(&ds, &plan);
        for _ in 0..args.reps {
            let start = Instant::now();
            let (_, counters) = execute(&plan, &ds, &index)?;
            let wall_time_ns = start.elapsed().as_nanos();
            let record = BenchRecord {
                executor: name,
                n: ds.len(),
                window_kind,
                param,
                distance_computations: counters.distance_computations,
                points_scanned: counters.points_scanned,
                nodes_visited: counters.nodes_visited,
                cells_visited: counters.cells_visited,
                wall_time_ns,
            };
            serde_json::to_writer(&mut out, &record)
                .map_err(|e| CliError::Io(io::Error::other(e)))?;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn executor_by_name(name: &str) -> Option<ExecutorKind> {
    match name {
        "naive" => Some(ExecutorKind::NaivePerPoint),
        "grid_point" => Some(ExecutorKind::GridPerPoint),
        "grid_sweep" => Some(ExecutorKind::GridSweep),
        "qt_point" => Some(ExecutorKind::QtPerPoint),
        "qt_annotated" => Some(ExecutorKind::QtAnnotated),
        _ => None,
    }
}

/// Plans the query pinned to one executor, for apples-to-apples bench
/// comparisons; rejects combinations the executor cannot run.
fn plan_for_executor(
    ast: &query::QueryAst,
    ds: &Dataset,
    executor: ExecutorKind,
    metric: Metric,
    params: IndexParams,
) -> Result<QueryPlan, CliError> {
    let index = match executor {
        ExecutorKind::NaivePerPoint => IndexPref::None,
        ExecutorKind::GridPerPoint | ExecutorKind::GridSweep => IndexPref::Grid,
        ExecutorKind::QtPerPoint | ExecutorKind::QtAnnotated => IndexPref::Quadtree,
    };
    let mut plan = query::plan(ast, ds, index, metric, params)?;
    for group in &mut plan.groups {
        let radius = matches!(group.window.frame, WindowFrame::Radius { .. });
        let compatible = match executor {
            ExecutorKind::GridSweep => radius,
            ExecutorKind::QtAnnotated => {
                radius && group.calls.iter().all(|c| c.agg.kind.is_single_moment())
            }
            _ => true,
        };
        if !compatible {
            return Err(CliError::Usage(format!(
                "executor `{}` cannot run this query's window/aggregates",
                executor.name()
            )));
        }
        group.executor = executor;
    }
    Ok(plan)
}
