//! Alternative bases: Cantor pairing, a unary basis simulating a binary one,
//! and the single binary operations `g` and `h`.

pub mod g;
pub mod h;
pub mod unary;

use std::collections::HashMap;
use std::ops::RangeInclusive;

use num_bigint::BigUint;
use thiserror::Error;

pub use crate::arith::{pair, unpair, unpair_left, unpair_right};
use crate::eval::{Evaluator, Grid};
use crate::registry::RegistryError;
use crate::report::{verify_equivalence, VerificationReport};
use crate::syntax::parse;
use crate::term::{OpSymbol, Term};

pub use g::{audit_g, eval_g, g_case, GCase, UnaryBasis};
pub use h::{audit_h, compile_to_h, constant_as_h, eval_h};
pub use unary::{compile_to_unary, lift_binary, lift_unary, LiftedBasis};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BasisError {
    #[error("symbol `{0}` has no translation here")]
    UnsupportedSymbol(OpSymbol),
    #[error("expected a function of x only, found variables {0:?}")]
    NonUnary(Vec<u32>),
    #[error("expected a function of x and y only, found variables {0:?}")]
    NonBinary(Vec<u32>),
    #[error("constant {0} is too large to spell out")]
    ConstantTooLarge(BigUint),
    #[error("constant {0} cannot be generated from the basis")]
    ConstantNotGenerable(BigUint),
    #[error("unary basis is empty")]
    EmptyBasis,
    #[error("f0 must be 2(x+1), but f0({x}) = {got}")]
    BadF0 { x: u64, got: String },
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

/// Rebuilds `t` bottom-up; `f` sees each original node and its rebuilt
/// children. Shared subterms are visited once.
pub(crate) fn rewrite_postorder<E>(t: &Term, mut f: impl FnMut(&Term, &[Term]) -> Result<Term, E>) -> Result<Term, E> {
    let mut done: HashMap<u64, Term> = HashMap::new();
    for node in t.postorder() {
        let ch: Vec<Term> = node.children().iter().map(|c| done[&c.id()].clone()).collect();
        let out = f(&node, &ch)?;
        done.insert(node.id(), out);
    }
    Ok(done.remove(&t.id()).expect("root visited"))
}

/// `2^(x mod 2) = floor(2^x / 2^(floor(x/2) + floor(x/2)))` pointwise on `range`.
pub fn check_mod2_identity(range: RangeInclusive<u64>, ev: &Evaluator<'_>) -> VerificationReport {
    let lhs = parse("2^(x % 2)").expect("fixed text");
    let rhs = parse("2^x / 2^(x / 2 + x / 2)").expect("fixed text");
    verify_equivalence(
        &format!("2^(x mod 2) identity on [{}, {}]", range.start(), range.end()),
        &lhs,
        &rhs,
        &Grid::new(vec![range]),
        ev,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{eval, Env, EvalLimits};

    #[test]
    fn mod2_identity() {
        let ev = Evaluator::new(EvalLimits::default());
        let rhs = parse("2^x / 2^(x / 2 + x / 2)").unwrap();
        assert_eq!(eval(&rhs, &Env::from_u64s(&[5]), &EvalLimits::default()).unwrap(), BigUint::from(2u32));
        assert_eq!(eval(&rhs, &Env::from_u64s(&[0]), &EvalLimits::default()).unwrap(), BigUint::from(1u32));
        let r = check_mod2_identity(0..=64, &ev);
        assert!(r.passed(), "{r}");
        assert_eq!(r.points_checked, 65);
    }

    #[test]
    fn pairing_laws() {
        for z in 0..=100_000u64 {
            let z = BigUint::from(z);
            let (l, r) = unpair(&z);
            assert_eq!(pair(&l, &r), z);
        }
        for x in 0..=300u64 {
            for y in 0..=300u64 {
                let (bx, by) = (BigUint::from(x), BigUint::from(y));
                let z = pair(&bx, &by);
                assert_eq!(unpair_left(&z), bx);
                assert_eq!(unpair_right(&z), by);
            }
        }
    }
}
