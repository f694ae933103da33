//! Const-memory aggregate states: maintain a sliding window by adding the
//! entering values and removing the leaving ones, never recomputing from
//! scratch.
//!
//!     cargo run --example sliding_aggregates

use spatial_window::aggregates::{AggInput, AggregateKind, AggregateState};

fn main() {
    // A sum sliding over 1,2,3,4,5 with a window of four items: moving
    // from [1,2,3,4] to [2,3,4,5] touches only the values 1 and 5.
    let mut sum = AggregateState::new(&AggregateKind::Sum("v".into()));
    for v in [1.0, 2.0, 3.0, 4.0] {
        sum.add(AggInput::Value(Some(v)));
    }
    println!("window [1,2,3,4]  SUM = {:?}", sum.finalize());
    sum.remove(AggInput::Value(Some(1.0))).unwrap();
    sum.add(AggInput::Value(Some(5.0)));
    println!(
        "window [2,3,4,5]  SUM = {:?} (one remove + one add)",
        sum.finalize()
    );

    // The same discipline works for variance and correlation because the
    // state is a set of moments, not the values themselves.
    let mut var = AggregateState::new(&AggregateKind::VarPop("v".into()));
    let mut window = Vec::new();
    for v in [10.0, 12.0, 9.0, 14.0, 8.0, 11.0] {
        window.push(v);
        var.add(AggInput::Value(Some(v)));
        if window.len() > 3 {
            let leaving = window.remove(0);
            var.remove(AggInput::Value(Some(leaving))).unwrap();
        }
        println!(
            "window {window:?}  VAR_POP = {:.4}",
            var.finalize().unwrap()
        );
    }

    // NULLs occupy a row but contribute nothing.
    let mut avg = AggregateState::new(&AggregateKind::Avg("v".into()));
    let mut count = AggregateState::new(&AggregateKind::Count);
    for v in [Some(90.0), None, Some(70.0)] {
        avg.add(AggInput::Value(v));
        count.add(AggInput::Row);
    }
    println!(
        "3 rows, one NULL: COUNT = {:?}, AVG = {:?}",
        count.finalize(),
        avg.finalize()
    );
}
