//! Lowering extended operations to {add, mod, exp2}, with trace and grid check.

use basisforge::lower::{lower_square, verify_lowering};
use basisforge::{lower, parse, EvalLimits, Evaluator, Grid, Signature, Term};

fn main() {
    println!("x^2 = {}", lower_square(Term::var(0)));
    let ev = Evaluator::new(EvalLimits::default());
    for src in ["x -. y", "x * y", "x / y", "sq(x) + double(y)", "succ(x) -. y"] {
        let t = parse(src).unwrap();
        let (low, trace) = lower(&t).unwrap();
        assert!(low.conforms(&Signature::minimal()));
        let s = low.size();
        println!("{src:<18} {} steps, {} tree nodes, {} shared", trace.len(), s.tree_nodes, s.dag_nodes);
        let report = verify_lowering(&t, &Grid::square(0..=5, 2), &ev).unwrap();
        println!("  {report}");
    }
    let (_, trace) = lower(&parse("sq(double(x))").unwrap()).unwrap();
    print!("{}", trace.to_json_lines());
    println!("{}", lower(&parse("x -. y").unwrap()).unwrap().0);
    println!("{}", lower(&parse("L(x)").unwrap()).unwrap_err());
}
