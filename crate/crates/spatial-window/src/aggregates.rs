//! Const-memory aggregate states.
//!
//! Every aggregate here keeps a fixed-size moment state that supports both
//! adding and removing a contribution, so a sliding spatial window can be
//! maintained from entering/leaving deltas instead of being recomputed from
//! scratch. MIN/MAX (and the collection aggregates) cannot be maintained
//! this way and are rejected at construction.
//!
//! Removal subtracts nearly-equal quantities, which plain f64 accumulators
//! amplify into visible drift; every moment therefore runs through a
//! Neumaier-compensated sum, squares and cross terms enter as exact
//! two-products, and the variance-like results evaluate their
//! `n·Σv² − (Σv)²` numerators in double-double so near-constant windows
//! keep the cancellation intact.

use thiserror::Error;

use crate::data::Dataset;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AggregateError {
    #[error("aggregate function `{name}` cannot maintain a sliding window in constant memory")]
    UnsupportedAggregate { name: String },
    #[error("unknown aggregate function `{name}`")]
    UnknownAggregate { name: String },
    #[error("aggregate `{name}` takes {expected} argument(s), got {got}")]
    WrongArity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("aggregate `{kind}` removed more values than were added")]
    NegativeCount { kind: &'static str },
    #[error("aggregate references unknown attribute `{name}`")]
    UnknownAttribute { name: String },
}

/// The implemented aggregate functions. Attribute arguments are stored by
/// name and resolved against a dataset when the aggregate is bound.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AggregateKind {
    /// Number of rows in the window, NULLs included.
    Count,
    /// Number of non-NULL values of the attribute.
    CountNonNull(String),
    Sum(String),
    Avg(String),
    VarPop(String),
    VarSamp(String),
    StddevPop(String),
    StddevSamp(String),
    CovarPop(String, String),
    CovarSamp(String, String),
    Corr(String, String),
}

/// Functions that are recognized but excluded: removal either needs the
/// whole window again (MIN/MAX) or is undefined in constant memory.
const EXCLUDED: &[&str] = &[
    "MIN",
    "MAX",
    "ANY_VALUE",
    "ARRAY_AGG",
    "STRING_AGG",
    "COUNTIF",
];

impl AggregateKind {
    /// Resolves a function name (case-insensitive) and its argument list.
    pub fn from_name(name: &str, args: &[String]) -> Result<Self, AggregateError> {
        let canon = name.to_ascii_uppercase();
        let arity = |expected: usize| -> Result<(), AggregateError> {
            if args.len() == expected {
                Ok(())
            } else {
                Err(AggregateError::WrongArity {
                    name: canon.clone(),
                    expected,
                    got: args.len(),
                })
            }
        };
        let one = |f: fn(String) -> AggregateKind| -> Result<Self, AggregateError> {
            arity(1)?;
            Ok(f(args[0].clone()))
        };
        let two = |f: fn(String, String) -> AggregateKind| -> Result<Self, AggregateError> {
            arity(2)?;
            Ok(f(args[0].clone(), args[1].clone()))
        };
        match canon.as_str() {
            "COUNT" => {
                arity(0)?;
                Ok(AggregateKind::Count)
            }
            "COUNT_NONNULL" => one(AggregateKind::CountNonNull),
            "SUM" => one(AggregateKind::Sum),
            "AVG" => one(AggregateKind::Avg),
            "VAR_POP" => one(AggregateKind::VarPop),
            "VAR_SAMP" => one(AggregateKind::VarSamp),
            "STDDEV_POP" => one(AggregateKind::StddevPop),
            "STDDEV_SAMP" => one(AggregateKind::StddevSamp),
            "COVAR_POP" => two(AggregateKind::CovarPop),
            "COVAR_SAMP" => two(AggregateKind::CovarSamp),
            "CORR" => two(AggregateKind::Corr),
            _ if EXCLUDED.contains(&canon.as_str()) => {
                Err(AggregateError::UnsupportedAggregate { name: canon })
            }
            _ => Err(AggregateError::UnknownAggregate { name: canon }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AggregateKind::Count => "COUNT",
            AggregateKind::CountNonNull(_) => "COUNT_NONNULL",
            AggregateKind::Sum(_) => "SUM",
            AggregateKind::Avg(_) => "AVG",
            AggregateKind::VarPop(_) => "VAR_POP",
            AggregateKind::VarSamp(_) => "VAR_SAMP",
            AggregateKind::StddevPop(_) => "STDDEV_POP",
            AggregateKind::StddevSamp(_) => "STDDEV_SAMP",
            AggregateKind::CovarPop(_, _) => "COVAR_POP",
            AggregateKind::CovarSamp(_, _) => "COVAR_SAMP",
            AggregateKind::Corr(_, _) => "CORR",
        }
    }

    /// Attribute arguments, in order.
    pub fn attr_args(&self) -> (Option<&str>, Option<&str>) {
        match self {
            AggregateKind::Count => (None, None),
            AggregateKind::CountNonNull(a)
            | AggregateKind::Sum(a)
            | AggregateKind::Avg(a)
            | AggregateKind::VarPop(a)
            | AggregateKind::VarSamp(a)
            | AggregateKind::StddevPop(a)
            | AggregateKind::StddevSamp(a) => (Some(a), None),
            AggregateKind::CovarPop(a, b)
            | AggregateKind::CovarSamp(a, b)
            | AggregateKind::Corr(a, b) => (Some(a), Some(b)),
        }
    }

    /// True for kinds whose result is a function of (count, n, Σv, Σv²) of a
    /// single attribute — the ones the annotated quadtree path can answer.
    pub fn is_single_moment(&self) -> bool {
        self.attr_args().1.is_none()
    }
}

/// Neumaier-compensated running sum. `value()` folds the correction in.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    s: f64,
    c: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.s + v;
        if self.s.abs() >= v.abs() {
            self.c += (self.s - t) + v;
        } else {
            self.c += (v - t) + self.s;
        }
        self.s = t;
    }

    /// Adds an exact product `a*b` by feeding both halves of the
    /// two-product, so squares and cross terms enter the sum unrounded.
    fn add_prod(&mut self, a: f64, b: f64) {
        let (hi, lo) = two_prod(a, b);
        self.add(hi);
        self.add(lo);
    }

    /// The (sum, correction) pair as an unevaluated double-double.
    fn dd(&self) -> Dd {
        dd_two_sum(self.s, self.c)
    }
}

// Double-double helpers for the finalize step. Variance-like results
// evaluate n·Σv² − (Σv)², where the two terms agree in up to ~50 leading
// bits for near-constant windows; keeping the sums as hi/lo pairs keeps
// that cancellation exact.

#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn dd_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    Dd { hi: s, lo: e }
}

/// Dekker split two-product: hi + lo == a*b exactly.
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    const SPLIT: f64 = 134_217_729.0; // 2^27 + 1
    let p = a * b;
    let (ah, al) = {
        let t = SPLIT * a;
        let h = t - (t - a);
        (h, a - h)
    };
    let (bh, bl) = {
        let t = SPLIT * b;
        let h = t - (t - b);
        (h, b - h)
    };
    let e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, e)
}

impl Dd {
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn add(self, other: Dd) -> Dd {
        let s = dd_two_sum(self.hi, other.hi);
        dd_two_sum(s.hi, s.lo + self.lo + other.lo)
    }

    fn mul_f64(self, b: f64) -> Dd {
        let (hi, lo) = two_prod(self.hi, b);
        dd_two_sum(hi, lo + self.lo * b)
    }

    fn mul(self, other: Dd) -> Dd {
        let (hi, lo) = two_prod(self.hi, other.hi);
        dd_two_sum(hi, lo + self.hi * other.lo + self.lo * other.hi)
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// n·s2 − s1², the shared numerator of the second-moment statistics
/// (equal to n·Σ(v−mean)², hence n²·VAR_POP).
fn centered_numerator(n: f64, s1: Dd, s2: Dd) -> f64 {
    s2.mul_f64(n).add(s1.mul(s1).neg()).value()
}

/// n·sxy − sx·sy (n²·COVAR_POP).
fn cross_numerator(n: f64, sx: Dd, sy: Dd, sxy: Dd) -> f64 {
    sxy.mul_f64(n).add(sx.mul(sy).neg()).value()
}

/// One contribution to an aggregate, extracted from a dataset row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AggInput {
    /// Row presence only (COUNT).
    Row,
    /// A single-attribute value, NULL allowed.
    Value(Option<f64>),
    /// A two-attribute pair; it contributes only when both are non-NULL.
    Pair(Option<f64>, Option<f64>),
}

#[derive(Debug, Clone, Copy)]
enum Accum {
    Rows,
    Single {
        s1: CompensatedSum,
        s2: CompensatedSum,
    },
    Pair {
        sx: CompensatedSum,
        sy: CompensatedSum,
        sxx: CompensatedSum,
        syy: CompensatedSum,
        sxy: CompensatedSum,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Count,
    CountNonNull,
    Sum,
    Avg,
    VarPop,
    VarSamp,
    StddevPop,
    StddevSamp,
    CovarPop,
    CovarSamp,
    Corr,
}

/// The moment state of one aggregate over the current window. Constant
/// size; `add` and `remove` are O(1); `finalize` reads the result without
/// consuming the state.
#[derive(Debug, Clone, Copy)]
pub struct AggregateState {
    op: Op,
    name: &'static str,
    /// Rows currently in the window, NULL contributions included.
    rows: u64,
    /// Non-NULL contributions (both members non-NULL for pair kinds).
    n: u64,
    acc: Accum,
}

impl AggregateState {
    pub fn new(kind: &AggregateKind) -> Self {
        let op = match kind {
            AggregateKind::Count => Op::Count,
            AggregateKind::CountNonNull(_) => Op::CountNonNull,
            AggregateKind::Sum(_) => Op::Sum,
            AggregateKind::Avg(_) => Op::Avg,
            AggregateKind::VarPop(_) => Op::VarPop,
            AggregateKind::VarSamp(_) => Op::VarSamp,
            AggregateKind::StddevPop(_) => Op::StddevPop,
            AggregateKind::StddevSamp(_) => Op::StddevSamp,
            AggregateKind::CovarPop(_, _) => Op::CovarPop,
            AggregateKind::CovarSamp(_, _) => Op::CovarSamp,
            AggregateKind::Corr(_, _) => Op::Corr,
        };
        let acc = match op {
            Op::Count => Accum::Rows,
            Op::CountNonNull
            | Op::Sum
            | Op::Avg
            | Op::VarPop
            | Op::VarSamp
            | Op::StddevPop
            | Op::StddevSamp => Accum::Single {
                s1: CompensatedSum::default(),
                s2: CompensatedSum::default(),
            },
            Op::CovarPop | Op::CovarSamp | Op::Corr => Accum::Pair {
                sx: CompensatedSum::default(),
                sy: CompensatedSum::default(),
                sxx: CompensatedSum::default(),
                syy: CompensatedSum::default(),
                sxy: CompensatedSum::default(),
            },
        };
        AggregateState {
            op,
            name: kind.name(),
            rows: 0,
            n: 0,
            acc,
        }
    }

    fn apply(&mut self, input: AggInput, sign: f64) {
        match (&mut self.acc, input) {
            (Accum::Rows, _) => {}
            (Accum::Single { s1, s2 }, AggInput::Value(Some(v))) => {
                s1.add(sign * v);
                s2.add_prod(sign * v, v);
                if sign > 0.0 {
                    self.n += 1;
                } else {
                    self.n -= 1;
                }
            }
            (Accum::Single { .. }, AggInput::Value(None)) => {}
            (
                Accum::Pair {
                    sx,
                    sy,
                    sxx,
                    syy,
                    sxy,
                },
                AggInput::Pair(Some(x), Some(y)),
            ) => {
                sx.add(sign * x);
                sy.add(sign * y);
                sxx.add_prod(sign * x, x);
                syy.add_prod(sign * y, y);
                sxy.add_prod(sign * x, y);
                if sign > 0.0 {
                    self.n += 1;
                } else {
                    self.n -= 1;
                }
            }
            (Accum::Pair { .. }, AggInput::Pair(_, _)) => {}
            (acc, input) => {
                debug_assert!(false, "input {input:?} does not match accumulator {acc:?}");
            }
        }
    }

    /// Adds one window row. NULL values still count as a row but leave the
    /// moments untouched.
    pub fn add(&mut self, input: AggInput) {
        self.rows += 1;
        self.apply(input, 1.0);
    }

    /// Removes a previously added row. Callers guarantee multiset
    /// discipline; a count underflow means the executor's deltas are wrong.
    pub fn remove(&mut self, input: AggInput) -> Result<(), AggregateError> {
        if self.rows == 0 {
            return Err(AggregateError::NegativeCount { kind: self.name });
        }
        let removes_value = matches!(
            (&self.acc, input),
            (Accum::Single { .. }, AggInput::Value(Some(_)))
                | (Accum::Pair { .. }, AggInput::Pair(Some(_), Some(_)))
        );
        if removes_value && self.n == 0 {
            return Err(AggregateError::NegativeCount { kind: self.name });
        }
        self.rows -= 1;
        self.apply(input, -1.0);
        Ok(())
    }

    /// Folds a precomputed moment block (row count, non-NULL count, Σv, Σv²)
    /// into the state. This is how annotated index nodes contribute whole
    /// subtrees without enumerating points. Single-attribute kinds only.
    pub fn merge_moments(&mut self, rows: u64, n: u64, sum: f64, sum_sq: f64) {
        self.rows += rows;
        match &mut self.acc {
            Accum::Rows => {}
            Accum::Single { s1, s2 } => {
                self.n += n;
                s1.add(sum);
                s2.add(sum_sq);
            }
            Accum::Pair { .. } => {
                debug_assert!(
                    false,
                    "merge_moments is defined for single-attribute kinds only"
                );
            }
        }
    }

    pub fn window_rows(&self) -> u64 {
        self.rows
    }

    /// Result over the current window. Degenerate cases are NULL: every
    /// kind except COUNT on an empty window, sample statistics with n < 2,
    /// and CORR when either variance vanishes. Variances clamp tiny
    /// negative cancellation residue to zero.
    pub fn finalize(&self) -> Option<f64> {
        if self.op == Op::Count {
            return Some(self.rows as f64);
        }
        if self.rows == 0 {
            return None;
        }
        let n = self.n as f64;
        match self.op {
            Op::Count => unreachable!(),
            Op::CountNonNull => Some(n),
            Op::Sum => (self.n > 0).then(|| self.single().0.value()),
            Op::Avg => (self.n > 0).then(|| self.single().0.value() / n),
            Op::VarPop => (self.n > 0).then(|| {
                let (s1, s2) = self.single();
                (centered_numerator(n, s1, s2) / (n * n)).max(0.0)
            }),
            Op::VarSamp => (self.n > 1).then(|| {
                let (s1, s2) = self.single();
                (centered_numerator(n, s1, s2) / (n * (n - 1.0))).max(0.0)
            }),
            Op::StddevPop => (self.n > 0).then(|| {
                let (s1, s2) = self.single();
                (centered_numerator(n, s1, s2) / (n * n)).max(0.0).sqrt()
            }),
            Op::StddevSamp => (self.n > 1).then(|| {
                let (s1, s2) = self.single();
                (centered_numerator(n, s1, s2) / (n * (n - 1.0)))
                    .max(0.0)
                    .sqrt()
            }),
            Op::CovarPop => (self.n > 0).then(|| {
                let (sx, sy, _, _, sxy) = self.pair();
                cross_numerator(n, sx, sy, sxy) / (n * n)
            }),
            Op::CovarSamp => (self.n > 1).then(|| {
                let (sx, sy, _, _, sxy) = self.pair();
                cross_numerator(n, sx, sy, sxy) / (n * (n - 1.0))
            }),
            Op::Corr => {
                if self.n == 0 {
                    return None;
                }
                // The n² factors cancel, so correlation comes straight
                // from the numerators.
                let (sx, sy, sxx, syy, sxy) = self.pair();
                let var_x = centered_numerator(n, sx, sxx);
                let var_y = centered_numerator(n, sy, syy);
                if var_x <= 0.0 || var_y <= 0.0 {
                    return None;
                }
                let cov = cross_numerator(n, sx, sy, sxy);
                Some(cov / (var_x.sqrt() * var_y.sqrt()))
            }
        }
    }

    fn single(&self) -> (Dd, Dd) {
        match &self.acc {
            Accum::Single { s1, s2 } => (s1.dd(), s2.dd()),
            _ => unreachable!(),
        }
    }

    fn pair(&self) -> (Dd, Dd, Dd, Dd, Dd) {
        match &self.acc {
            Accum::Pair {
                sx,
                sy,
                sxx,
                syy,
                sxy,
            } => (sx.dd(), sy.dd(), sxx.dd(), syy.dd(), sxy.dd()),
            _ => unreachable!(),
        }
    }
}

/// An aggregate kind with its attribute arguments resolved to column
/// indices of a concrete dataset.
#[derive(Debug, Clone)]
pub struct BoundAggregate {
    pub kind: AggregateKind,
    attr_a: Option<usize>,
    attr_b: Option<usize>,
}

impl BoundAggregate {
    pub fn bind(kind: AggregateKind, ds: &Dataset) -> Result<Self, AggregateError> {
        let resolve = |name: Option<&str>| -> Result<Option<usize>, AggregateError> {
            match name {
                None => Ok(None),
                Some(n) => {
                    ds.attr_index(n)
                        .map(Some)
                        .ok_or_else(|| AggregateError::UnknownAttribute {
                            name: n.to_string(),
                        })
                }
            }
        };
        let (a, b) = kind.attr_args();
        let attr_a = resolve(a)?;
        let attr_b = resolve(b)?;
        Ok(BoundAggregate {
            kind,
            attr_a,
            attr_b,
        })
    }

    /// The contribution of one dataset row.
    pub fn input(&self, ds: &Dataset, point: usize) -> AggInput {
        match (self.attr_a, self.attr_b) {
            (None, _) => AggInput::Row,
            (Some(a), None) => AggInput::Value(ds.attr_value(a, point)),
            (Some(a), Some(b)) => AggInput::Pair(ds.attr_value(a, point), ds.attr_value(b, point)),
        }
    }

    pub fn new_state(&self) -> AggregateState {
        AggregateState::new(&self.kind)
    }

    /// Column index of the single attribute argument, for the annotated
    /// index path.
    pub fn single_attr(&self) -> Option<usize> {
        match self.kind.is_single_moment() {
            true => self.attr_a,
            false => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::synth::SplitMix64;

    fn state(kind: AggregateKind) -> AggregateState {
        AggregateState::new(&kind)
    }

    fn sum_state() -> AggregateState {
        state(AggregateKind::Sum("v".into()))
    }

    #[test]
    fn count_starts_empty() {
        let s = state(AggregateKind::Count);
        assert_eq!(s.finalize(), Some(0.0));
    }

    #[test]
    fn min_is_rejected() {
        let err = AggregateKind::from_name("MIN", &["v".into()]).unwrap_err();
        assert_eq!(
            err,
            AggregateError::UnsupportedAggregate { name: "MIN".into() }
        );
        for name in ["MAX", "ARRAY_AGG", "STRING_AGG", "ANY_VALUE", "COUNTIF"] {
            assert!(matches!(
                AggregateKind::from_name(name, &["v".into()]).unwrap_err(),
                AggregateError::UnsupportedAggregate { .. }
            ));
        }
    }

    #[test]
    fn unknown_name_is_distinct_from_unsupported() {
        assert_eq!(
            AggregateKind::from_name("MEDIAN", &["v".into()]).unwrap_err(),
            AggregateError::UnknownAggregate {
                name: "MEDIAN".into()
            }
        );
    }

    #[test]
    fn arity_is_checked() {
        assert!(matches!(
            AggregateKind::from_name("SUM", &[]).unwrap_err(),
            AggregateError::WrongArity {
                expected: 1,
                got: 0,
                ..
            }
        ));
        assert!(matches!(
            AggregateKind::from_name("CORR", &["a".into()]).unwrap_err(),
            AggregateError::WrongArity {
                expected: 2,
                got: 1,
                ..
            }
        ));
    }

    #[test]
    fn corr_state_starts_empty() {
        let s = state(AggregateKind::Corr("a".into(), "b".into()));
        assert_eq!(s.finalize(), None);
    }

    #[test]
    fn sliding_sum_example() {
        // Window [1,2,3,4] -> [2,3,4,5] takes exactly one remove and one add.
        let mut s = sum_state();
        for v in [1.0, 2.0, 3.0, 4.0] {
            s.add(AggInput::Value(Some(v)));
        }
        assert_eq!(s.finalize(), Some(10.0));
        s.remove(AggInput::Value(Some(1.0))).unwrap();
        s.add(AggInput::Value(Some(5.0)));
        assert_eq!(s.finalize(), Some(14.0));
    }

    #[test]
    fn avg_examples() {
        let mut s = state(AggregateKind::Avg("v".into()));
        s.add(AggInput::Value(Some(90.0)));
        s.add(AggInput::Value(Some(70.0)));
        assert_eq!(s.finalize(), Some(80.0));
        s.add(AggInput::Value(Some(89.0)));
        assert_eq!(s.finalize(), Some(83.0));
    }

    #[test]
    fn var_pop_of_two_and_four() {
        let mut s = state(AggregateKind::VarPop("v".into()));
        s.add(AggInput::Value(Some(2.0)));
        s.add(AggInput::Value(Some(4.0)));
        assert_eq!(s.finalize(), Some(1.0));
    }

    #[test]
    fn corr_of_exact_line_is_one() {
        let mut s = state(AggregateKind::Corr("a".into(), "b".into()));
        for v in [1.0, 2.0, 3.0] {
            s.add(AggInput::Pair(Some(v), Some(v)));
        }
        let r = s.finalize().unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_window_degeneracies() {
        assert_eq!(state(AggregateKind::Avg("v".into())).finalize(), None);
        assert_eq!(
            state(AggregateKind::CountNonNull("v".into())).finalize(),
            None
        );
        assert_eq!(state(AggregateKind::Sum("v".into())).finalize(), None);
        // n < 2 sample statistics are NULL.
        let mut s = state(AggregateKind::VarSamp("v".into()));
        s.add(AggInput::Value(Some(3.0)));
        assert_eq!(s.finalize(), None);
        // Zero variance makes CORR NULL.
        let mut s = state(AggregateKind::Corr("a".into(), "b".into()));
        s.add(AggInput::Pair(Some(1.0), Some(1.0)));
        s.add(AggInput::Pair(Some(1.0), Some(2.0)));
        assert_eq!(s.finalize(), None);
    }

    #[test]
    fn nulls_occupy_rows_but_not_moments() {
        let mut count = state(AggregateKind::Count);
        let mut nonnull = state(AggregateKind::CountNonNull("v".into()));
        let mut avg = state(AggregateKind::Avg("v".into()));
        for v in [Some(10.0), None, Some(20.0)] {
            count.add(AggInput::Row);
            nonnull.add(AggInput::Value(v));
            avg.add(AggInput::Value(v));
        }
        assert_eq!(count.finalize(), Some(3.0));
        assert_eq!(nonnull.finalize(), Some(2.0));
        assert_eq!(avg.finalize(), Some(15.0));
        // Pair kinds need both sides non-NULL.
        let mut cov = state(AggregateKind::CovarPop("a".into(), "b".into()));
        cov.add(AggInput::Pair(Some(1.0), None));
        cov.add(AggInput::Pair(None, Some(1.0)));
        assert_eq!(cov.finalize(), None);
    }

    #[test]
    fn remove_below_zero_is_an_error() {
        let mut s = sum_state();
        s.add(AggInput::Value(Some(1.0)));
        s.remove(AggInput::Value(Some(1.0))).unwrap();
        let err = s.remove(AggInput::Value(Some(1.0))).unwrap_err();
        assert_eq!(err, AggregateError::NegativeCount { kind: "SUM" });
    }

    #[test]
    fn add_remove_restores_finalize() {
        let mut s = state(AggregateKind::Avg("v".into()));
        s.add(AggInput::Value(Some(5.0)));
        let before = s.finalize();
        s.add(AggInput::Value(Some(1e9)));
        s.remove(AggInput::Value(Some(1e9))).unwrap();
        let after = s.finalize();
        assert!((before.unwrap() - after.unwrap()).abs() < 1e-9);
    }

    #[test]
    fn draining_a_multiset_restores_the_fresh_result() {
        let mut rng = SplitMix64::new(0xD2A1);
        for kind in all_kinds() {
            let fresh = state(kind.clone()).finalize();
            let mut s = state(kind.clone());
            let multiset: Vec<(Option<f64>, Option<f64>)> = (0..200)
                .map(|i| {
                    let v = if i % 11 == 0 {
                        None
                    } else {
                        Some(rng.next_f64() * 2e3 - 1e3)
                    };
                    (v, Some(rng.next_f64()))
                })
                .collect();
            for &v in &multiset {
                s.add(input_for(&kind, v));
            }
            // Remove in a different order than added.
            let mut order: Vec<usize> = (0..multiset.len()).collect();
            for i in (1..order.len()).rev() {
                order.swap(i, rng.next_below(i as u64 + 1) as usize);
            }
            for &i in &order {
                s.remove(input_for(&kind, multiset[i])).unwrap();
            }
            assert_eq!(s.finalize(), fresh, "{kind:?}");
            assert_eq!(s.window_rows(), 0);
        }
    }

    fn all_kinds() -> Vec<AggregateKind> {
        vec![
            AggregateKind::Count,
            AggregateKind::CountNonNull("a".into()),
            AggregateKind::Sum("a".into()),
            AggregateKind::Avg("a".into()),
            AggregateKind::VarPop("a".into()),
            AggregateKind::VarSamp("a".into()),
            AggregateKind::StddevPop("a".into()),
            AggregateKind::StddevSamp("a".into()),
            AggregateKind::CovarPop("a".into(), "b".into()),
            AggregateKind::CovarSamp("a".into(), "b".into()),
            AggregateKind::Corr("a".into(), "b".into()),
        ]
    }

    fn input_for(kind: &AggregateKind, v: (Option<f64>, Option<f64>)) -> AggInput {
        match kind.attr_args() {
            (None, _) => AggInput::Row,
            (Some(_), None) => AggInput::Value(v.0),
            (Some(_), Some(_)) => AggInput::Pair(v.0, v.1),
        }
    }

    /// From-scratch recomputation over the surviving multiset, via the
    /// two-pass oracle.
    fn recompute(kind: &AggregateKind, window: &[(Option<f64>, Option<f64>)]) -> Option<f64> {
        oracle::window_aggregate_from_values(kind, window)
    }

    #[test]
    fn random_sequences_match_recomputation() {
        let mut rng = SplitMix64::new(0xA55A_1234);
        for round in 0..1000 {
            let kinds = all_kinds();
            let mut states: Vec<AggregateState> = kinds.iter().map(AggregateState::new).collect();
            let mut window: Vec<(Option<f64>, Option<f64>)> = Vec::new();
            let len = 1 + (rng.next_u64() % 1000) as usize;
            for _ in 0..len {
                let remove = !window.is_empty() && rng.next_u64().is_multiple_of(3);
                if remove {
                    let at = (rng.next_u64() as usize) % window.len();
                    let v = window.swap_remove(at);
                    for (s, k) in states.iter_mut().zip(&kinds) {
                        s.remove(input_for(k, v)).unwrap();
                    }
                } else {
                    let draw = |rng: &mut SplitMix64| {
                        if rng.next_u64().is_multiple_of(10) {
                            None
                        } else {
                            Some(rng.next_f64() * 2000.0 - 1000.0)
                        }
                    };
                    let v = (draw(&mut rng), draw(&mut rng));
                    window.push(v);
                    for (s, k) in states.iter_mut().zip(&kinds) {
                        s.add(input_for(k, v));
                    }
                }
            }
            for (s, k) in states.iter().zip(&kinds) {
                let got = s.finalize();
                let want = recompute(k, &window);
                assert!(
                    oracle::nearly_eq_opt(got, want, 1e-9, 1e-12),
                    "round {round}: {k:?} got {got:?} want {want:?} (window len {})",
                    window.len()
                );
            }
        }
    }

    #[test]
    fn order_independence_of_surviving_multiset() {
        let mut rng = SplitMix64::new(77);
        let values: Vec<(Option<f64>, Option<f64>)> = (0..64)
            .map(|_| {
                (
                    Some(rng.next_f64() * 200.0 - 100.0),
                    Some(rng.next_f64() * 200.0 - 100.0),
                )
            })
            .collect();
        for kind in all_kinds() {
            // Straight adds.
            let mut a = state(kind.clone());
            for &v in &values {
                a.add(input_for(&kind, v));
            }
            // Same multiset reached through churn: add decoys, remove them
            // in a shuffled order.
            let mut b = state(kind.clone());
            let decoys: Vec<(Option<f64>, Option<f64>)> = (0..64)
                .map(|_| (Some(rng.next_f64() * 1e6 - 5e5), Some(rng.next_f64())))
                .collect();
            let mut pending = Vec::new();
            for (i, &v) in values.iter().enumerate() {
                b.add(input_for(&kind, decoys[i]));
                pending.push(decoys[i]);
                b.add(input_for(&kind, v));
                if i % 2 == 0 {
                    let d = pending.remove(pending.len() / 2);
                    b.remove(input_for(&kind, d)).unwrap();
                }
            }
            for d in pending {
                b.remove(input_for(&kind, d)).unwrap();
            }
            assert!(
                oracle::nearly_eq_opt(a.finalize(), b.finalize(), 1e-9, 1e-9),
                "{kind:?}: {:?} vs {:?}",
                a.finalize(),
                b.finalize()
            );
        }
    }

    /// Table of scores used across the sliding-window fixtures.
    pub(crate) const SCORES: [f64; 7] = [90.0, 70.0, 89.0, 80.0, 81.0, 75.0, 86.0];

    #[test]
    fn row_window_avg_fixture() {
        // AVG over the (2 preceding, 1 following) row window, maintained
        // incrementally: expected values are exact rationals.
        let expected: Vec<f64> = (0..SCORES.len())
            .map(|i| {
                let lo = i.saturating_sub(2);
                let hi = (i + 1).min(SCORES.len() - 1);
                let w = &SCORES[lo..=hi];
                w.iter().sum::<f64>() / w.len() as f64
            })
            .collect();

        let mut s = state(AggregateKind::Avg("score".into()));
        let mut got = Vec::new();
        for i in 0..SCORES.len() {
            if i == 0 {
                for &v in &SCORES[0..=1.min(SCORES.len() - 1)] {
                    s.add(AggInput::Value(Some(v)));
                }
            } else {
                if i + 1 < SCORES.len() {
                    s.add(AggInput::Value(Some(SCORES[i + 1])));
                }
                if i >= 3 {
                    s.remove(AggInput::Value(Some(SCORES[i - 3]))).unwrap();
                }
            }
            got.push(s.finalize().unwrap());
        }
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() <= 1e-12, "{g} vs {e}");
        }
        assert_eq!(got[0], 80.0);
        assert_eq!(got[1], 83.0);
    }

    #[test]
    fn value_range_window_avg_fixture() {
        // AVG over the value range [v-2, v+1] on the sorted scores.
        let mut sorted = SCORES;
        sorted.sort_by(f64::total_cmp);
        let expected = [70.0, 75.0, 80.5, 80.5, 86.0, 89.5, 89.5];
        for (&v, &e) in sorted.iter().zip(&expected) {
            let mut s = state(AggregateKind::Avg("score".into()));
            for &w in sorted.iter().filter(|&&w| w >= v - 2.0 && w <= v + 1.0) {
                s.add(AggInput::Value(Some(w)));
            }
            let got = s.finalize().unwrap();
            assert!((got - e).abs() <= 1e-12, "score {v}: {got} vs {e}");
        }
    }
}
