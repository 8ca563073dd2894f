//! The single operations h and g, the pairing function, and the halving identity.

use basisforge::bases::{audit_g, audit_h, check_mod2_identity, compile_to_h, constant_as_h, eval_g, eval_h, UnaryBasis};
use basisforge::report::verify_equivalence;
use basisforge::{arith, parse, EvalLimits, Evaluator, Grid};
use num_bigint::BigUint;

fn n(v: u64) -> BigUint {
    BigUint::from(v)
}

fn main() {
    let lim = EvalLimits::default();
    let ev = Evaluator::new(lim);
    for (a, b) in [(2, 2), (27, 625), (390625, 81), (5, 7)] {
        println!("h({a}, {b}) = {}", eval_h(&n(a), &n(b), &lim).unwrap());
    }
    for src in ["2^x", "x + y", "x % y", "sq(x)"] {
        let t = parse(src).unwrap();
        let lowered = basisforge::lower(&t).unwrap().0;
        let h = compile_to_h(&lowered, false).unwrap();
        let r = verify_equivalence(src, &t, &h, &Grid::square(0..=4, t.var_count().max(1) as usize), &ev);
        println!("{src:<6} via h: {} nodes, {}", h.tree_size(), r.status);
    }
    println!("3 = {}", constant_as_h(3));
    println!("{}", audit_h(1 << 12));

    let basis = UnaryBasis::standard();
    println!("g(3, 3) = {}, g(4, 3) = {}, g(5, 12) = {}",
        eval_g(&n(3), &n(3), &basis, &lim).unwrap(),
        eval_g(&n(4), &n(3), &basis, &lim).unwrap(),
        eval_g(&n(5), &n(12), &basis, &lim).unwrap());
    println!("{}", audit_g(1000, basis.k()));

    println!("pair(1, 2) = {}, unpair(8) = {:?}", arith::pair(&n(1), &n(2)), arith::unpair(&n(8)));
    println!("{}", check_mod2_identity(0..=64, &ev));
}
