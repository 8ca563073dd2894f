//! The five-case binary operation `h` whose closure is every elementary
//! function, its templates for `+`, `mod` and `2^x`, and constants built from
//! one variable.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use super::{rewrite_postorder, BasisError};
use crate::arith::{exact_log, pow_bits_upper};
use crate::eval::{EvalError, EvalLimits, Limit};
use crate::report::VerificationReport;
use crate::term::{OpSymbol, Term, TermKind};

fn power_checked(base: u32, exponent: &BigUint, lim: &EvalLimits) -> Result<BigUint, EvalError> {
    let too_big = EvalError::LimitExceeded(Limit::Bits);
    match pow_bits_upper(base, exponent) {
        Some(bits) if bits <= lim.max_bits => {
            let e = exponent.to_u32().ok_or(too_big)?;
            Ok(BigUint::from(base).pow(e))
        }
        _ => Err(too_big),
    }
}

/// `Some(e)` when `v == 2^e`.
fn log2_exact(v: &BigUint) -> Option<u64> {
    exact_log(v, 2)
}

/// Which case of `h` applies, first match wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum HCase {
    Diagonal,
    RightIsExp,
    LeftIsExp,
    ThreeFive,
    FiveThree,
    Otherwise,
}

/// The five guards of `h` evaluated independently.
pub fn h_guards(x: &BigUint, y: &BigUint) -> [bool; 5] {
    let is_exp_of = |big: &BigUint, small: &BigUint| log2_exact(big).is_some_and(|e| BigUint::from(e) == *small);
    let pos_log = |v: &BigUint, b: u32| exact_log(v, b).is_some_and(|k| k >= 1);
    [
        x == y,
        is_exp_of(y, x),
        is_exp_of(x, y),
        pos_log(x, 3) && pos_log(y, 5),
        pos_log(x, 5) && pos_log(y, 3),
    ]
}

pub fn h_case(x: &BigUint, y: &BigUint) -> HCase {
    const CASES: [HCase; 5] = [
        HCase::Diagonal,
        HCase::RightIsExp,
        HCase::LeftIsExp,
        HCase::ThreeFive,
        HCase::FiveThree,
    ];
    let guards = h_guards(x, y);
    guards
        .iter()
        .position(|&g| g)
        .map_or(HCase::Otherwise, |i| CASES[i])
}

/// `h(x, y)`:
/// `2^x` if `x = y`; `3^(x+1)` if `y = 2^x`; `5^(y+1)` if `x = 2^y`;
/// `a + b` if `(x, y) = (3^(a+1), 5^(b+1))`; `a mod b` if `(x, y) = (5^(a+1), 3^(b+1))`;
/// otherwise `0`.
pub fn eval_h(x: &BigUint, y: &BigUint, lim: &EvalLimits) -> Result<BigUint, EvalError> {
    let too_big = EvalError::LimitExceeded(Limit::Bits);
    Ok(match h_case(x, y) {
        HCase::Diagonal => {
            if *x >= BigUint::from(lim.max_bits) {
                return Err(too_big);
            }
            BigUint::one() << x.to_u64().ok_or(too_big)?
        }
        HCase::RightIsExp => power_checked(3, &(x + 1u32), lim)?,
        HCase::LeftIsExp => power_checked(5, &(y + 1u32), lim)?,
        HCase::ThreeFive => {
            let a = exact_log(x, 3).expect("guarded") - 1;
            let b = exact_log(y, 5).expect("guarded") - 1;
            BigUint::from(a) + b
        }
        HCase::FiveThree => {
            let a = exact_log(x, 5).expect("guarded") - 1;
            let b = exact_log(y, 3).expect("guarded") - 1;
            BigUint::from(if b == 0 { a } else { a % b })
        }
        HCase::Otherwise => BigUint::zero(),
    })
}

/// `2^u = h(u, u)`
pub fn h_exp2(u: Term) -> Term {
    Term::h(u.clone(), u)
}

/// `u + v = h(h(u, h(u, u)), h(h(v, v), v))`
pub fn h_add(u: Term, v: Term) -> Term {
    Term::h(
        Term::h(u.clone(), h_exp2(u)),
        Term::h(h_exp2(v.clone()), v),
    )
}

/// `u mod v = h(h(h(u, u), u), h(v, h(v, v)))`
pub fn h_mod(u: Term, v: Term) -> Term {
    Term::h(
        Term::h(h_exp2(u.clone()), u),
        Term::h(v.clone(), h_exp2(v)),
    )
}

/// A term over `{h}` in the variable `x` whose value is `n` everywhere:
/// `0 = x mod x`, `1 = h(0, 0)`, `2 = h(1, 1)`, then `n + 1 = 1 + n`.
pub fn constant_as_h(n: u64) -> Term {
    let x = Term::var(0);
    let zero = h_mod(x.clone(), x);
    if n == 0 {
        return zero;
    }
    let one = h_exp2(zero);
    if n == 1 {
        return one;
    }
    let mut t = h_exp2(one.clone());
    for _ in 2..n {
        t = h_add(one.clone(), t);
    }
    t
}

/// Replaces `+`, `mod` and `2^x` by their `h` templates. With `pure`,
/// constants become [`constant_as_h`] terms as well.
pub fn compile_to_h(t: &Term, pure: bool) -> Result<Term, BasisError> {
    rewrite_postorder(t, |node, ch| match node.kind() {
        TermKind::Const(c) if pure => {
            let n = c.to_u64().ok_or_else(|| BasisError::ConstantTooLarge(c.clone()))?;
            Ok(constant_as_h(n))
        }
        TermKind::Const(_) | TermKind::Var(_) => Ok(node.clone()),
        TermKind::Op(sym, _) => match sym {
            OpSymbol::Add => Ok(h_add(ch[0].clone(), ch[1].clone())),
            OpSymbol::Mod => Ok(h_mod(ch[0].clone(), ch[1].clone())),
            OpSymbol::Exp2 => Ok(h_exp2(ch[0].clone())),
            other => Err(BasisError::UnsupportedSymbol(*other)),
        },
    })
}

/// Points of `[0, bound]^2` at which at least one guard of `h` fires.
fn guard_points(bound: u64) -> Vec<(u64, u64)> {
    let mut pts: Vec<(u64, u64)> = (0..=bound).map(|x| (x, x)).collect();
    for e in 0..64u32 {
        let p = 1u64 << e;
        if p > bound {
            break;
        }
        pts.push((u64::from(e), p));
        pts.push((p, u64::from(e)));
    }
    let powers = |b: u64| {
        let mut v = Vec::new();
        let mut p = b;
        while p <= bound {
            v.push(p);
            p *= b;
        }
        v
    };
    for &t in &powers(3) {
        for &f in &powers(5) {
            pts.push((t, f));
            pts.push((f, t));
        }
    }
    pts.sort_unstable();
    pts.dedup();
    pts
}

fn is_power_u64(mut v: u64, b: u64) -> bool {
    if v < b {
        return false;
    }
    while v % b == 0 {
        v /= b;
    }
    v == 1
}

/// Checks on `[0, bound]^2` that no two guards of `h` fire at once. Every
/// point outside the enumerated guard set has all guards false by
/// construction, so only guard points are examined; at each one the guards
/// are recomputed with plain machine arithmetic and compared with
/// [`h_guards`].
pub fn audit_h(bound: u64) -> VerificationReport {
    let pts = guard_points(bound);
    let rows: Vec<((u64, u64), [bool; 5], [bool; 5])> = pts
        .par_iter()
        .map(|&(x, y)| {
            let pow2 = |e: u64| (e < 64).then(|| 1u64 << e);
            let oracle = [
                x == y,
                pow2(x) == Some(y),
                pow2(y) == Some(x),
                is_power_u64(x, 3) && is_power_u64(y, 5),
                is_power_u64(x, 5) && is_power_u64(y, 3),
            ];
            ((x, y), oracle, h_guards(&BigUint::from(x), &BigUint::from(y)))
        })
        .collect();
    let mut report = VerificationReport::new(format!("h guard disjointness on [0, {bound}]^2"));
    for ((x, y), oracle, guards) in rows {
        let count = oracle.iter().filter(|&&g| g).count();
        if oracle != guards {
            report.record_mismatch(vec![x, y], format!("{oracle:?}"), format!("{guards:?}"));
        } else if count > 1 {
            report.record_mismatch(vec![x, y], "at most one guard", format!("{oracle:?}"));
        } else {
            report.record_pass();
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{eval, Env, Grid};
    use crate::report::verify_equivalence;
    use crate::syntax::parse;
    use crate::eval::Evaluator;

    fn h(x: u64, y: u64) -> u64 {
        eval_h(&x.into(), &y.into(), &EvalLimits::default()).unwrap().to_u64().unwrap()
    }

    #[test]
    fn case_values() {
        assert_eq!(h(2, 2), 4);
        assert_eq!(h(27, 625), 5);
        assert_eq!(h(390625, 81), 1);
        assert_eq!(h(5, 7), 0);
        assert_eq!(h(3, 8), 81);
        assert_eq!(h(8, 3), 625);
        assert_eq!(h(0, 1), 3);
        assert_eq!(h(1, 0), 5);
        // 5^(a+1), 3^(0+1): a mod 0 = a
        assert_eq!(h(125, 3), 2);
    }

    #[test]
    fn templates_agree_with_native_ops() {
        let ev = Evaluator::new(EvalLimits::default());
        let (x, y) = (Term::var(0), Term::var(1));
        let r = verify_equivalence("exp2", &parse("2^x").unwrap(), &h_exp2(x.clone()), &Grid::square(0..=12, 1), &ev);
        assert!(r.passed(), "{r}");
        let r = verify_equivalence("add", &parse("x + y").unwrap(), &h_add(x.clone(), y.clone()), &Grid::square(0..=8, 2), &ev);
        assert!(r.passed(), "{r}");
        let r = verify_equivalence("mod", &parse("x % y").unwrap(), &h_mod(x, y), &Grid::square(0..=6, 2), &ev);
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn constants_from_one_variable() {
        for n in 0..=7u64 {
            let t = constant_as_h(n);
            assert_eq!(t.free_vars().into_iter().collect::<Vec<_>>(), vec![0]);
            for x in 0..=20u64 {
                assert_eq!(eval(&t, &Env::from_u64s(&[x]), &EvalLimits::default()).unwrap(), BigUint::from(n));
            }
        }
    }

    #[test]
    fn compile_square_through_h() {
        let sq = parse("2^(x + x) % (2^x + x)").unwrap();
        let ht = compile_to_h(&sq, false).unwrap();
        assert_eq!(ht.symbols().into_iter().collect::<Vec<_>>(), vec![OpSymbol::H]);
        let ev = Evaluator::new(EvalLimits::default());
        let r = verify_equivalence("square", &parse("x * x").unwrap(), &ht, &Grid::square(0..=5, 1), &ev);
        assert!(r.passed(), "{r}");
        let pure = compile_to_h(&parse("x + 3").unwrap(), true).unwrap();
        assert!(pure.symbols().iter().all(|s| *s == OpSymbol::H));
        assert!(compile_to_h(&parse("x * y").unwrap(), false).is_err());
    }

    #[test]
    fn guard_audit_passes() {
        let r = audit_h(1 << 16);
        assert!(r.passed(), "{r}");
        assert!(r.points_checked > 65_537);
    }
}
