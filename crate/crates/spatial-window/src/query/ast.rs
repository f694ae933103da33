//! Parsed query representation.

use crate::aggregates::AggregateKind;
use crate::data::{WindowFrame, WindowSpec};

/// An analytic call `FUNC(args) OVER (frame ON location)`. `label` keeps
/// the verbatim source text and names the output column; it does not take
/// part in equality.
#[derive(Debug, Clone)]
pub struct AnalyticCall {
    pub kind: AggregateKind,
    pub window: WindowSpec,
    pub label: String,
}

impl PartialEq for AnalyticCall {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.window == other.window
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectItem {
    Column(String),
    Analytic(AnalyticCall),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryAst {
    pub select_items: Vec<SelectItem>,
    pub from_table: String,
}

impl QueryAst {
    /// Canonical textual form; parsing it yields an equal AST.
    pub fn unparse(&self) -> String {
        let items: Vec<String> = self
            .select_items
            .iter()
            .map(|item| match item {
                SelectItem::Column(name) => name.clone(),
                SelectItem::Analytic(call) => unparse_call(call),
            })
            .collect();
        format!("SELECT {} FROM {};", items.join(", "), self.from_table)
    }
}

fn unparse_call(call: &AnalyticCall) -> String {
    let (a, b) = call.kind.attr_args();
    let args = match (a, b) {
        (None, _) => "*".to_string(),
        (Some(a), None) => a.to_string(),
        (Some(a), Some(b)) => format!("{a}, {b}"),
    };
    let frame = match call.window.frame {
        WindowFrame::Knn { k } => format!("{k} NEAREST NEIGHBOR"),
        WindowFrame::Radius { r } => format!("RADIUS {r}"),
    };
    format!(
        "{}({args}) OVER ({frame} ON {})",
        call.kind.name(),
        call.window.location_attr
    )
}
