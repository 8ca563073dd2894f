//! Exact evaluation under `0^0 = 1`, `x / 0 = 0`, `x mod 0 = x`, with limits.

use basisforge::eval::{eval_grid, Limit};
use basisforge::{eval, parse, Env, EvalError, EvalLimits, Evaluator, Grid};

fn main() {
    let lim = EvalLimits::default();
    for src in ["x % 0", "x / 0", "0 ^ 0", "x -. (x + 3)", "2^(x+x) % (2^x + x)", "pair(1, 2)", "h(27, 625)"] {
        let v = eval(&parse(src).unwrap(), &Env::from_u64s(&[7]), &lim).unwrap();
        println!("{src:<22} at x = 7: {v}");
    }

    let tight = EvalLimits { max_bits: 64, max_steps: 1000 };
    match eval(&parse("2^2^x").unwrap(), &Env::from_u64s(&[7]), &tight) {
        Err(EvalError::LimitExceeded(Limit::Bits)) => println!("2^2^7 needs more than 64 bits"),
        other => println!("unexpected: {other:?}"),
    }

    let ev = Evaluator::new(lim);
    let rows = eval_grid(&parse("x * y -. x").unwrap(), &Grid::square(0..=2, 2), &ev).unwrap();
    for r in rows {
        println!("{:?} -> {}", r.point, r.value);
    }
}
