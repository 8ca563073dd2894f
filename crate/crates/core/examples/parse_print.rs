//! Parsing, precedence-aware printing and round trips.

use basisforge::syntax::{parse_with_names, print};
use basisforge::{parse, Term};

fn main() {
    for src in ["x + y * z", "(x + y) * z", "x -. y -. z", "x -. (y -. z)", "2^x^y", "(2^x)^y", "x ∸ y", "sq(x) % [x | y]"] {
        let t = parse(src).unwrap();
        let shown = print(&t);
        assert_eq!(parse(&shown).unwrap(), t);
        println!("{src:<16} => {shown:<16} ({} nodes)", t.tree_size());
    }

    let p = parse_with_names("b % a + b", None).unwrap();
    println!("variables by first occurrence: {:?} -> {}", p.vars, p.term);

    for bad in ["x +", "x - y", "foo(x)", "exp2(x, y)", "x $ y"] {
        println!("{bad:<10} error at {}", parse(bad).unwrap_err());
    }

    let built = Term::add(Term::var(0), Term::constant(1u32));
    println!("built: {built}");
}
