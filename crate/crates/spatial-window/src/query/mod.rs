//! The query language front end: lexer, parser, planner, and executors.

pub mod ast;
pub mod exec;
mod lexer;
mod parser;
pub mod plan;

use thiserror::Error;

use crate::aggregates::AggregateError;
use crate::data::{Dataset, ResultTable, WorkCounters};
use crate::geometry::{GeometryError, Metric};

pub use ast::{AnalyticCall, QueryAst, SelectItem};
pub use exec::{build_index, execute, PreparedIndex};
pub use parser::parse;
pub use plan::{plan, ColumnSource, ExecutorKind, IndexParams, IndexPref, QueryPlan};

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("syntax error at offset {position}: expected {expected}, found {found}")]
    Syntax {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("named window `{name}` at offset {position} is not supported")]
    NamedWindowUnsupported { position: usize, name: String },
    #[error("unknown aggregate function `{name}`")]
    UnknownAggregate { name: String },
    #[error("aggregate function `{name}` is not supported (no const-memory sliding state)")]
    UnsupportedAggregate { name: String },
    #[error("unknown column `{name}`")]
    UnknownColumn { name: String },
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("internal error: {0}")]
    Internal(String),
}

impl QueryError {
    /// Byte offset for errors that carry one.
    pub fn position(&self) -> Option<usize> {
        match self {
            QueryError::Syntax { position, .. }
            | QueryError::NamedWindowUnsupported { position, .. } => Some(*position),
            _ => None,
        }
    }
}

/// Parse, plan, build the index, and execute in one call.
pub fn run_query(
    text: &str,
    ds: &Dataset,
    index: IndexPref,
    metric: Metric,
    params: IndexParams,
) -> Result<(ResultTable, WorkCounters), QueryError> {
    let ast = parse(text)?;
    let plan = plan::plan(&ast, ds, index, metric, params)?;
    let prepared = build_index(ds, &plan);
    execute(&plan, ds, &prepared)
}
