//! Recursive-descent parser for the query language:
//!
//! ```text
//! query        := SELECT select_item ("," select_item)* FROM ident [";"]
//! select_item  := ident
//!               | ident "(" [args] ")" OVER over_clause
//! args         := "*" | ident ("," ident)*
//! over_clause  := named_window | "(" [named_window] [frame] ")"
//! frame        := RADIUS number ON ident
//!               | number NEAREST NEIGHBOR ON ident
//! ```
//!
//! Named windows are part of the grammar but carry no definition syntax,
//! so any reference is rejected with a dedicated error. An OVER clause
//! without a frame is rejected too: there is no default spatial frame.

use crate::aggregates::{AggregateError, AggregateKind};
use crate::data::WindowSpec;

use super::ast::{AnalyticCall, QueryAst, SelectItem};
use super::lexer::{tokenize, Token, TokenKind};
use super::QueryError;

pub fn parse(text: &str) -> Result<QueryAst, QueryError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        text,
        tokens,
        pos: 0,
    };
    let ast = p.query()?;
    Ok(ast)
}

struct Parser<'a> {
    text: &'a str,
    tokens: Vec<Token>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> usize {
        self.peek().map(|t| t.pos).unwrap_or(self.text.len())
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(t) => format!("`{}`", t.text),
            None => "end of query".into(),
        }
    }

    fn err(&self, expected: &str) -> QueryError {
        QueryError::Syntax {
            position: self.here(),
            expected: expected.into(),
            found: self.found(),
        }
    }

    fn expect_kind(&mut self, kind: TokenKind, expected: &str) -> Result<Token, QueryError> {
        match self.peek() {
            Some(t) if t.kind == kind => Ok(self.next().unwrap()),
            _ => Err(self.err(expected)),
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<Token, QueryError> {
        match self.peek() {
            Some(t) if t.is_kw(kw) => Ok(self.next().unwrap()),
            _ => Err(self.err(&format!("keyword {kw}"))),
        }
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.is_kw(kw))
    }

    fn at_kind(&self, kind: TokenKind) -> bool {
        self.peek().is_some_and(|t| t.kind == kind)
    }

    fn query(&mut self) -> Result<QueryAst, QueryError> {
        self.expect_kw("SELECT")?;
        let mut select_items = vec![self.select_item()?];
        while self.at_kind(TokenKind::Comma) {
            self.next();
            select_items.push(self.select_item()?);
        }
        self.expect_kw("FROM")?;
        let from_table = self.expect_kind(TokenKind::Ident, "a table name")?.text;
        if self.at_kind(TokenKind::Semi) {
            self.next();
        }
        if let Some(t) = self.peek() {
            return Err(QueryError::Syntax {
                position: t.pos,
                expected: "end of query".into(),
                found: format!("`{}`", t.text),
            });
        }
        Ok(QueryAst {
            select_items,
            from_table,
        })
    }

    fn select_item(&mut self) -> Result<SelectItem, QueryError> {
        let name = self.expect_kind(TokenKind::Ident, "a column or function name")?;
        if !self.at_kind(TokenKind::LParen) {
            return Ok(SelectItem::Column(name.text));
        }
        let lparen = self.next().unwrap();
        let mut args = Vec::new();
        if self.at_kind(TokenKind::Star) {
            self.next();
        } else if self.at_kind(TokenKind::Ident) {
            args.push(self.next().unwrap().text);
            while self.at_kind(TokenKind::Comma) {
                self.next();
                args.push(
                    self.expect_kind(TokenKind::Ident, "an attribute name")?
                        .text,
                );
            }
        }
        self.expect_kind(TokenKind::RParen, "`)` closing the argument list")?;
        let kind = AggregateKind::from_name(&name.text, &args).map_err(|e| match e {
            AggregateError::UnknownAggregate { name: n } => {
                QueryError::UnknownAggregate { name: n }
            }
            AggregateError::UnsupportedAggregate { name: n } => {
                QueryError::UnsupportedAggregate { name: n }
            }
            AggregateError::WrongArity {
                name: n,
                expected,
                got,
            } => QueryError::Syntax {
                position: lparen.pos,
                expected: format!("{expected} argument(s) to {n}"),
                found: format!("{got}"),
            },
            other => QueryError::Aggregate(other),
        })?;
        self.expect_kw("OVER")?;
        let window = self.over_clause()?;
        let end = self.tokens[self.pos - 1].end();
        let label = self.text[name.pos..end].to_string();
        Ok(SelectItem::Analytic(AnalyticCall {
            kind,
            window,
            label,
        }))
    }

    fn over_clause(&mut self) -> Result<WindowSpec, QueryError> {
        if self.at_kind(TokenKind::Ident) {
            // OVER name — a named-window reference.
            let t = self.next().unwrap();
            return Err(QueryError::NamedWindowUnsupported {
                position: t.pos,
                name: t.text,
            });
        }
        self.expect_kind(TokenKind::LParen, "`(` opening the window specification")?;
        if self.at_kind(TokenKind::RParen) {
            // The frame is mandatory: a window over no spatial frame has
            // no meaning here.
            return Err(
                self.err("a window frame (`RADIUS r ON ...` or `k NEAREST NEIGHBOR ON ...`)")
            );
        }
        // A leading identifier that is not RADIUS is a named-window
        // reference inside the specification.
        if self.at_kind(TokenKind::Ident) && !self.at_kw("RADIUS") {
            let t = self.next().unwrap();
            return Err(QueryError::NamedWindowUnsupported {
                position: t.pos,
                name: t.text,
            });
        }
        let window = self.frame()?;
        self.expect_kind(TokenKind::RParen, "`)` closing the window specification")?;
        Ok(window)
    }

    fn frame(&mut self) -> Result<WindowSpec, QueryError> {
        if self.at_kw("RADIUS") {
            self.next();
            let num = self.expect_kind(TokenKind::Number, "a nonnegative radius")?;
            let r: f64 = num.text.parse().map_err(|_| QueryError::Syntax {
                position: num.pos,
                expected: "a nonnegative radius".into(),
                found: format!("`{}`", num.text),
            })?;
            if !r.is_finite() {
                return Err(QueryError::Syntax {
                    position: num.pos,
                    expected: "a finite radius".into(),
                    found: format!("`{}`", num.text),
                });
            }
            self.expect_kw("ON")?;
            let loc = self.expect_kind(TokenKind::Ident, "the location attribute")?;
            Ok(WindowSpec::radius(r, loc.text))
        } else if self.at_kind(TokenKind::Number) {
            let num = self.next().unwrap();
            let is_integer = num.text.bytes().all(|b| b.is_ascii_digit());
            let k: usize = if is_integer {
                num.text.parse().map_err(|_| QueryError::Syntax {
                    position: num.pos,
                    expected: "a positive integer neighbor count".into(),
                    found: format!("`{}`", num.text),
                })?
            } else {
                return Err(QueryError::Syntax {
                    position: num.pos,
                    expected: "a positive integer neighbor count".into(),
                    found: format!("`{}`", num.text),
                });
            };
            if k == 0 {
                return Err(QueryError::Syntax {
                    position: num.pos,
                    expected: "a positive integer neighbor count".into(),
                    found: "`0`".into(),
                });
            }
            self.expect_kw("NEAREST")?;
            self.expect_kw("NEIGHBOR")?;
            self.expect_kw("ON")?;
            let loc = self.expect_kind(TokenKind::Ident, "the location attribute")?;
            Ok(WindowSpec::knn(k, loc.text))
        } else {
            Err(self.err("a window frame (`RADIUS r ON ...` or `k NEAREST NEIGHBOR ON ...`)"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::WindowFrame;

    #[test]
    fn parses_radius_example() {
        let ast = parse(
            "SELECT poi_id, location, SUM(number_of_visits) OVER (RADIUS 2.5 ON location) FROM poi_data;",
        )
        .unwrap();
        assert_eq!(ast.from_table, "poi_data");
        assert_eq!(ast.select_items.len(), 3);
        assert_eq!(ast.select_items[0], SelectItem::Column("poi_id".into()));
        match &ast.select_items[2] {
            SelectItem::Analytic(call) => {
                assert_eq!(call.kind, AggregateKind::Sum("number_of_visits".into()));
                assert_eq!(call.window, WindowSpec::radius(2.5, "location"));
                assert_eq!(
                    call.label,
                    "SUM(number_of_visits) OVER (RADIUS 2.5 ON location)"
                );
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parses_knn_example() {
        let ast = parse(
            "SELECT poi_id, SUM(number_of_visits) OVER (3 NEAREST NEIGHBOR ON location) FROM poi_data",
        )
        .unwrap();
        match &ast.select_items[1] {
            SelectItem::Analytic(call) => {
                assert_eq!(call.window.frame, WindowFrame::Knn { k: 3 });
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn keywords_are_case_insensitive_identifiers_not() {
        let ast = parse("select Poi_Id, sum(V) over (radius 1 on location) from T").unwrap();
        assert_eq!(ast.select_items[0], SelectItem::Column("Poi_Id".into()));
        match &ast.select_items[1] {
            SelectItem::Analytic(call) => {
                assert_eq!(call.kind, AggregateKind::Sum("V".into()));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_over_is_a_syntax_error() {
        let err = parse("SELECT x OVER y FROM t").unwrap_err();
        assert!(matches!(err, QueryError::Syntax { .. }), "{err:?}");
    }

    #[test]
    fn named_window_is_recognized_and_rejected() {
        let err = parse("SELECT SUM(v) OVER w1 FROM t").unwrap_err();
        assert!(matches!(err, QueryError::NamedWindowUnsupported { .. }));
        let err = parse("SELECT SUM(v) OVER (w1) FROM t").unwrap_err();
        assert!(matches!(err, QueryError::NamedWindowUnsupported { .. }));
        let err = parse("SELECT SUM(v) OVER (w1 RADIUS 1 ON location) FROM t").unwrap_err();
        assert!(matches!(err, QueryError::NamedWindowUnsupported { .. }));
    }

    #[test]
    fn empty_over_clause_is_a_syntax_error() {
        let err = parse("SELECT SUM(v) OVER () FROM t").unwrap_err();
        assert!(matches!(err, QueryError::Syntax { .. }));
    }

    #[test]
    fn k_must_be_a_positive_integer() {
        for q in [
            "SELECT SUM(v) OVER (0 NEAREST NEIGHBOR ON location) FROM t",
            "SELECT SUM(v) OVER (2.5 NEAREST NEIGHBOR ON location) FROM t",
        ] {
            let err = parse(q).unwrap_err();
            assert!(matches!(err, QueryError::Syntax { .. }), "{q}");
        }
    }

    #[test]
    fn unknown_and_unsupported_aggregates() {
        let err = parse("SELECT MEDIAN(v) OVER (RADIUS 1 ON location) FROM t").unwrap_err();
        assert!(matches!(err, QueryError::UnknownAggregate { .. }));
        let err = parse("SELECT MIN(v) OVER (RADIUS 1 ON location) FROM t").unwrap_err();
        assert!(matches!(err, QueryError::UnsupportedAggregate { .. }));
    }

    #[test]
    fn count_star_and_count_empty() {
        for q in [
            "SELECT COUNT(*) OVER (RADIUS 1 ON location) FROM t",
            "SELECT COUNT() OVER (RADIUS 1 ON location) FROM t",
        ] {
            let ast = parse(q).unwrap();
            match &ast.select_items[0] {
                SelectItem::Analytic(call) => assert_eq!(call.kind, AggregateKind::Count),
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn trailing_semicolon_is_optional_but_nothing_after() {
        assert!(parse("SELECT a FROM t").is_ok());
        assert!(parse("SELECT a FROM t;").is_ok());
        assert!(parse("SELECT a FROM t; x").is_err());
    }

    #[test]
    fn unparse_reparses_to_equal_ast() {
        let queries = [
            "SELECT poi_id, location, SUM(number_of_visits) OVER (RADIUS 2.5 ON location) FROM poi_data;",
            "select a, count(*) over (7 nearest neighbor on location), corr(a, b) over (radius 0.125 on location) from t",
            "SELECT AVG(v) OVER (1 NEAREST NEIGHBOR ON location) FROM x;",
        ];
        for q in queries {
            let ast = parse(q).unwrap();
            let again = parse(&ast.unparse()).unwrap();
            assert_eq!(ast, again, "{q}");
        }
    }

    #[test]
    fn unparse_round_trips_a_generated_corpus() {
        let mut rng = crate::synth::SplitMix64::new(31337);
        let funcs: [(&str, usize); 11] = [
            ("COUNT", 0),
            ("COUNT_NONNULL", 1),
            ("SUM", 1),
            ("AVG", 1),
            ("VAR_POP", 1),
            ("VAR_SAMP", 1),
            ("STDDEV_POP", 1),
            ("STDDEV_SAMP", 1),
            ("COVAR_POP", 2),
            ("COVAR_SAMP", 2),
            ("CORR", 2),
        ];
        for round in 0..200 {
            let n_items = 1 + rng.next_below(4);
            let mut items = Vec::new();
            for _ in 0..n_items {
                if rng.next_below(3) == 0 {
                    items.push(format!("col{}", rng.next_below(9)));
                } else {
                    let (name, arity) = funcs[rng.next_below(funcs.len() as u64) as usize];
                    let args = match arity {
                        0 => "*".to_string(),
                        1 => format!("a{}", rng.next_below(5)),
                        _ => format!("a{}, b{}", rng.next_below(5), rng.next_below(5)),
                    };
                    let frame = if rng.next_below(2) == 0 {
                        format!("{} NEAREST NEIGHBOR", 1 + rng.next_below(40))
                    } else {
                        format!("RADIUS {}", rng.next_f64() * 100.0)
                    };
                    items.push(format!("{name}({args}) OVER ({frame} ON location)"));
                }
            }
            let query = format!("SELECT {} FROM table{}", items.join(", "), round % 7);
            let ast = parse(&query).unwrap_or_else(|e| panic!("{query}: {e}"));
            let again = parse(&ast.unparse()).unwrap();
            assert_eq!(ast, again, "{query}");
        }
    }
}
