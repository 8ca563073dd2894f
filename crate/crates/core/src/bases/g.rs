//! The binary operation `g` built over a unary basis `f0 .. f(k-1)` with
//! `f0(x) = 2(x + 1)`:
//!
//! ```text
//! g(x, y) = fi(x)                     if y = f0^i(x) for some i < k
//!         = [x/2 | (y -. 1)/2]        if x is even and y is odd
//!         = 0                         otherwise
//! ```
//!
//! with `f0^i(x) = 2^i x + 2^(i+1) -. 2`.

use num_bigint::BigUint;
use rayon::prelude::*;

use super::BasisError;
use crate::eval::{Env, EvalError, EvalLimits, Evaluator};
use crate::registry::Registry;
use crate::report::VerificationReport;
use crate::syntax::parse;
use crate::term::{ExtId, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GCase {
    Iterate(usize),
    Split,
    Zero,
}

/// `f0^i(x) = 2^i x + 2^(i+1) - 2`.
pub fn f0_iterate(x: &BigUint, i: usize) -> BigUint {
    (x << i) + (BigUint::from(2u32) << i) - 2u32
}

/// The case of `g` taken at `(x, y)` for a basis of `k` functions.
pub fn g_case(x: &BigUint, y: &BigUint, k: usize) -> GCase {
    if y >= x {
        for i in 0..k {
            let it = f0_iterate(x, i);
            if it == *y {
                return GCase::Iterate(i);
            }
            if it > *y {
                break;
            }
        }
    }
    if !x.bit(0) && y.bit(0) {
        GCase::Split
    } else {
        GCase::Zero
    }
}

/// An ordered list of unary functions whose first element is `2(x + 1)`.
#[derive(Debug, Clone)]
pub struct UnaryBasis {
    names: Vec<String>,
    bodies: Vec<Term>,
    registry: Registry,
}

const F0_CHECK: u64 = 64;

impl UnaryBasis {
    /// Bodies are terms in `x` over the builtin symbols. The first one is
    /// checked against `2(x + 1)` on `[0, 64]`.
    pub fn new(defs: Vec<(String, Term)>) -> Result<Self, BasisError> {
        if defs.is_empty() {
            return Err(BasisError::EmptyBasis);
        }
        let mut basis = UnaryBasis {
            names: Vec::new(),
            bodies: Vec::new(),
            registry: Registry::new(),
        };
        basis.install_into_own(defs)?;
        let ev = Evaluator::new(EvalLimits::default());
        for x in 0..=F0_CHECK {
            let got = ev.eval(&basis.bodies[0], &Env::from_u64s(&[x]));
            if got.as_ref().ok() != Some(&BigUint::from(2 * (x + 1))) {
                let got = match got {
                    Ok(v) => v.to_string(),
                    Err(e) => e.to_string(),
                };
                return Err(BasisError::BadF0 { x, got });
            }
        }
        Ok(basis)
    }

    fn install_into_own(&mut self, defs: Vec<(String, Term)>) -> Result<(), BasisError> {
        let mut reg = Registry::new();
        for (name, body) in &defs {
            let extra: Vec<u32> = body.free_vars().into_iter().filter(|&v| v != 0).collect();
            if !extra.is_empty() {
                return Err(BasisError::NonUnary(extra));
            }
            reg.define_unary(name, body.clone())?;
        }
        let ids = (0..defs.len() as ExtId).collect();
        reg.set_g_basis(ids);
        self.registry = reg;
        (self.names, self.bodies) = defs.into_iter().unzip();
        Ok(())
    }

    /// `f0 = 2(x+1)`, `f1 = 2^x`, `f2 = L(x) + R(x)`, `f3 = L(x) % R(x)`, `f4 = x -. 1`.
    pub fn standard() -> Self {
        let defs = [
            ("f0", "2 * (x + 1)"),
            ("f1", "2^x"),
            ("f2", "L(x) + R(x)"),
            ("f3", "L(x) % R(x)"),
            ("f4", "x -. 1"),
        ];
        let defs = defs
            .iter()
            .map(|(n, b)| (n.to_string(), parse(b).expect("fixed text")))
            .collect();
        UnaryBasis::new(defs).expect("standard basis is valid")
    }

    pub fn k(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn bodies(&self) -> &[Term] {
        &self.bodies
    }

    /// A registry holding exactly this basis, with `g` bound to it.
    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    /// Registers the basis in `reg` and binds `g` to it there.
    pub fn install(&self, reg: &mut Registry) -> Result<Vec<ExtId>, BasisError> {
        let ids = self
            .names
            .iter()
            .zip(&self.bodies)
            .map(|(n, b)| reg.define_unary(n, b.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        reg.set_g_basis(ids.clone());
        Ok(ids)
    }
}

/// `g(x, y)` over `basis`.
pub fn eval_g(x: &BigUint, y: &BigUint, basis: &UnaryBasis, lim: &EvalLimits) -> Result<BigUint, EvalError> {
    let ev = Evaluator::with_registry(*lim, basis.registry());
    ev.eval(&Term::g(Term::constant(x.clone()), Term::constant(y.clone())), &Env::default())
}

/// Checks on `[0, bound]^2` that the guards of `g` are pairwise disjoint for
/// a basis of `k` functions. Iterates of `f0` are recomputed by repeated
/// application; [`g_case`] is cross-checked at every iterate point and along
/// the first rows.
pub fn audit_g(bound: u64, k: usize) -> VerificationReport {
    const CROSS_ROWS: u64 = 8;
    let rows: Vec<(u64, Vec<(Vec<u64>, String, String)>)> = (0..=bound)
        .into_par_iter()
        .map(|x| {
            let mut iterates = Vec::with_capacity(k);
            let mut f = u128::from(x);
            for _ in 0..k {
                iterates.push(f);
                f = 2 * (f + 1);
            }
            let mut bad = Vec::new();
            let mut passes = 0u64;
            for y in 0..=bound {
                let hits: Vec<usize> = (0..k).filter(|&i| iterates[i] == u128::from(y)).collect();
                let split = x % 2 == 0 && y % 2 == 1;
                let fired = hits.len() + usize::from(split);
                let expected = match (hits.first(), split) {
                    (Some(&i), _) => GCase::Iterate(i),
                    (None, true) => GCase::Split,
                    (None, false) => GCase::Zero,
                };
                if fired > 1 {
                    bad.push((vec![x, y], "at most one case".to_string(), format!("{fired} cases")));
                    continue;
                }
                if !hits.is_empty() || y < CROSS_ROWS {
                    let got = g_case(&BigUint::from(x), &BigUint::from(y), k);
                    if got != expected {
                        bad.push((vec![x, y], format!("{expected:?}"), format!("{got:?}")));
                        continue;
                    }
                }
                passes += 1;
            }
            (passes, bad)
        })
        .collect();
    let mut report = VerificationReport::new(format!("g case disjointness on [0, {bound}]^2, k = {k}"));
    for (passes, bad) in rows {
        report.record_passes(passes);
        for (p, e, a) in bad {
            report.record_mismatch(p, e, a);
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn iterate_formula() {
        let mut f = n(7);
        for i in 0..10 {
            assert_eq!(f0_iterate(&n(7), i), f);
            f = (f + 1u32) * 2u32;
        }
    }

    #[test]
    fn case_values() {
        let basis = UnaryBasis::standard();
        let lim = EvalLimits::default();
        assert_eq!(eval_g(&n(3), &n(3), &basis, &lim).unwrap(), n(8));
        assert_eq!(eval_g(&n(4), &n(3), &basis, &lim).unwrap(), n(8));
        let one = UnaryBasis::new(vec![("f0".into(), parse("2 * (x + 1)").unwrap())]).unwrap();
        assert_eq!(eval_g(&n(3), &n(4), &one, &lim).unwrap(), n(0));
        // f1 = 2^x at y = f0(x)
        assert_eq!(eval_g(&n(5), &n(12), &basis, &lim).unwrap(), n(32));
    }

    #[test]
    fn pairing_from_g() {
        let basis = UnaryBasis::standard();
        let lim = EvalLimits::default();
        for x in 0..20u64 {
            for y in 0..20u64 {
                let got = eval_g(&n(2 * x), &n(2 * y + 1), &basis, &lim).unwrap();
                assert_eq!(got, crate::arith::pair(&n(x), &n(y)));
            }
        }
    }

    #[test]
    fn rejects_wrong_f0() {
        let err = UnaryBasis::new(vec![("f0".into(), parse("x + x").unwrap())]).unwrap_err();
        assert!(matches!(err, BasisError::BadF0 { x: 0, .. }));
        assert!(matches!(UnaryBasis::new(Vec::new()), Err(BasisError::EmptyBasis)));
    }

    #[test]
    fn disjointness_small() {
        for k in 1..=5 {
            let r = audit_g(300, k);
            assert!(r.passed(), "{r}");
            assert_eq!(r.points_checked, 301 * 301);
        }
    }
}
