//! Lifting to pairs and compiling functions of x into a unary basis.

use basisforge::bases::{compile_to_unary, lift_binary, lift_unary, LiftedBasis};
use basisforge::report::verify_equivalence;
use basisforge::syntax::print_with;
use basisforge::{parse, EvalLimits, Evaluator, Grid, Signature};

fn main() {
    println!("a  = {}", lift_binary(&parse("x + y").unwrap()).unwrap());
    println!("e' = {}", lift_unary(&parse("2^x").unwrap()).unwrap());

    let lifted = LiftedBasis::new(&Signature::minimal()).unwrap();
    for (name, body) in lifted.members() {
        println!("  {name:<8} {}", print_with(&body, Some(lifted.registry())));
    }
    let ev = Evaluator::with_registry(EvalLimits::default(), lifted.registry());
    for src in ["x + x", "2^x", "x % 3", "2^x % x", "x + x + 1", "x"] {
        let f = parse(src).unwrap();
        let decoded = lifted.decode(&compile_to_unary(&f, &lifted).unwrap());
        let r = verify_equivalence(src, &f, &decoded, &Grid::square(0..=60, 1), &ev);
        println!("{src:<10} = {}  [{}]", print_with(&decoded, Some(lifted.registry())), r.status);
    }
}
