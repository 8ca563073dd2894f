//! Simulating a basis of unary and binary operations with unary ones only.
//!
//! Values are carried in pairs `[value | rest]`. With
//!
//! ```text
//! d(x) = [x | x]      u(x) = [l(x) | x]      v(x) = [l(r(x)) | [l(x) | r(r(x))]]
//! f'(x) = [f(l(x)) | r(x)]                   h''(x) = [h(l(x), l(r(x))) | r(r(x))]
//! ```
//!
//! every unary `F` over the basis has a composition `F'` of these functions
//! with `F(x) = l(F'(d(x)))`: identity maps to identity, `g(f)` to `g' . f'`,
//! and `h(f, g)` to `h'' . f' . v . g' . u`.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use super::{rewrite_postorder, BasisError};
use crate::registry::Registry;
use crate::syntax::parse;
use crate::term::{ExtId, OpSymbol, Signature, Term, TermKind};

fn x() -> Term {
    Term::var(0)
}

/// `f'(x) = [f(l(x)) | r(x)]` for a term `f` in `x`.
pub fn lift_unary(f: &Term) -> Result<Term, BasisError> {
    let extra: Vec<u32> = f.free_vars().into_iter().filter(|&v| v != 0).collect();
    if !extra.is_empty() {
        return Err(BasisError::NonUnary(extra));
    }
    Ok(Term::pair(f.compose(&Term::left(x())), Term::right(x())))
}

/// `h''(x) = [h(l(x), l(r(x))) | r(r(x))]` for a term `h` in `x, y`.
pub fn lift_binary(h: &Term) -> Result<Term, BasisError> {
    let extra: Vec<u32> = h.free_vars().into_iter().filter(|&v| v > 1).collect();
    if !extra.is_empty() {
        return Err(BasisError::NonBinary(extra));
    }
    let map = [(0, Term::left(x())), (1, Term::left(Term::right(x())))].into_iter().collect();
    Ok(Term::pair(h.substitute(&map), Term::right(Term::right(x()))))
}

fn generic(sym: OpSymbol) -> Term {
    let args = (0..sym.arity() as u32).map(Term::var).collect();
    Term::op(sym, args).expect("arity")
}

/// The unary functions `d, u, v` and the lifts of every symbol of a basis,
/// registered as `d`, `u`, `v`, `<sym>_p` (unary) and `<sym>_pp` (binary).
/// `l` and `r` are the builtin `L` and `R`.
#[derive(Debug, Clone)]
pub struct LiftedBasis {
    basis: Signature,
    registry: Registry,
    d: ExtId,
    u: ExtId,
    v: ExtId,
    lifted: BTreeMap<OpSymbol, ExtId>,
}

impl LiftedBasis {
    /// `basis` may hold any builtin symbols except `g`.
    pub fn new(basis: &Signature) -> Result<Self, BasisError> {
        let mut reg = Registry::new();
        let d = reg.define_unary("d", parse("[x | x]").expect("fixed text"))?;
        let u = reg.define_unary("u", parse("[L(x) | x]").expect("fixed text"))?;
        let v = reg.define_unary("v", parse("[L(R(x)) | [L(x) | R(R(x))]]").expect("fixed text"))?;
        let mut lifted = BTreeMap::new();
        for sym in basis.symbols() {
            if matches!(sym, OpSymbol::G | OpSymbol::Ext(_)) {
                return Err(BasisError::UnsupportedSymbol(sym));
            }
            let (name, body) = if sym.arity() == 1 {
                (format!("{}_p", sym.name()), lift_unary(&generic(sym))?)
            } else {
                (format!("{}_pp", sym.name()), lift_binary(&generic(sym))?)
            };
            lifted.insert(sym, reg.define_unary(&name, body)?);
        }
        Ok(LiftedBasis {
            basis: basis.clone(),
            registry: reg,
            d,
            u,
            v,
            lifted,
        })
    }

    pub fn basis(&self) -> &Signature {
        &self.basis
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    /// The registered lift of a basis symbol.
    pub fn lift_of(&self, sym: OpSymbol) -> Option<ExtId> {
        self.lifted.get(&sym).copied()
    }

    pub fn d(&self) -> ExtId {
        self.d
    }

    pub fn u(&self) -> ExtId {
        self.u
    }

    pub fn v(&self) -> ExtId {
        self.v
    }

    /// Every member of the lifted basis with its defining term, in
    /// registration order.
    pub fn members(&self) -> Vec<(String, Term)> {
        let mut out = vec![
            ("l".to_string(), Term::left(x())),
            ("r".to_string(), Term::right(x())),
        ];
        out.extend(self.registry.defs().map(|(_, def)| (def.name.clone(), def.body.clone())));
        out
    }

    /// `l(F'(d(x)))`, which equals `F(x)`.
    pub fn decode(&self, compiled: &Term) -> Term {
        Term::left(compiled.compose(&Term::ext(self.d, x())))
    }
}

/// Spells the constant `n` as a term in `x` over `basis`:
/// `0 = x mod x` (or `x -. x`), `1 = 2^0` (or `succ(0)`), then binary
/// doubling with `t + t` and `t + 1`.
pub fn constant_in_basis(n: &BigUint, basis: &Signature) -> Result<Term, BasisError> {
    let not_generable = || BasisError::ConstantNotGenerable(n.clone());
    let zero = if basis.contains(OpSymbol::Mod) {
        Term::modulo(x(), x())
    } else if basis.contains(OpSymbol::Monus) {
        Term::monus(x(), x())
    } else {
        return Err(not_generable());
    };
    if n.is_zero() {
        return Ok(zero);
    }
    let one = if basis.contains(OpSymbol::Exp2) {
        Term::exp2(zero)
    } else if basis.contains(OpSymbol::Succ) {
        Term::succ(zero)
    } else {
        return Err(not_generable());
    };
    if n.is_one() {
        return Ok(one);
    }
    let double = |t: Term| -> Result<Term, BasisError> {
        if basis.contains(OpSymbol::Add) {
            Ok(Term::add(t.clone(), t))
        } else if basis.contains(OpSymbol::Double) {
            Ok(Term::double(t))
        } else {
            Err(not_generable())
        }
    };
    let inc = |t: Term| -> Result<Term, BasisError> {
        if basis.contains(OpSymbol::Add) {
            Ok(Term::add(t, one.clone()))
        } else if basis.contains(OpSymbol::Succ) {
            Ok(Term::succ(t))
        } else {
            Err(not_generable())
        }
    };
    let bits = n.bits();
    let mut t = one.clone();
    for i in (0..bits - 1).rev() {
        t = double(t)?;
        if n.bit(i) {
            t = inc(t)?;
        }
    }
    Ok(t)
}

/// Compiles a unary `F` over the basis of `lifted` into a composition `F'` of
/// lifted functions with `F(x) = l(F'(d(x)))`. Constants in `F` are first
/// spelled out over the basis.
pub fn compile_to_unary(f: &Term, lifted: &LiftedBasis) -> Result<Term, BasisError> {
    let extra: Vec<u32> = f.free_vars().into_iter().filter(|&v| v != 0).collect();
    if !extra.is_empty() {
        return Err(BasisError::NonUnary(extra));
    }
    let basis = lifted.basis();
    // Inline constants; a constant is a function of x like any other.
    let f = rewrite_postorder(f, |node, ch| match node.kind() {
        TermKind::Const(c) => {
            if c.to_u64().is_none_or(|v| v > 1 << 32) {
                return Err(BasisError::ConstantTooLarge(c.clone()));
            }
            constant_in_basis(c, basis)
        }
        TermKind::Var(_) => Ok(node.clone()),
        TermKind::Op(sym, _) => {
            if !basis.contains(*sym) {
                return Err(BasisError::UnsupportedSymbol(*sym));
            }
            Ok(node.with_children(ch.to_vec()).expect("same arity"))
        }
    })?;
    let apply = |id: ExtId, inner: Term| Term::ext(id, inner);
    rewrite_postorder(&f, |node, ch| match node.kind() {
        TermKind::Var(_) => Ok(x()),
        TermKind::Const(_) => unreachable!("constants inlined"),
        TermKind::Op(sym, _) => {
            let lift = lifted.lift_of(*sym).ok_or(BasisError::UnsupportedSymbol(*sym))?;
            if sym.arity() == 1 {
                // (g . f)' = g' . f'
                Ok(apply(lift, ch[0].clone()))
            } else {
                // h(f, g)' = h'' . f' . v . g' . u, and v . u = u when g' is the identity.
                let (f1, g1) = (&ch[0], &ch[1]);
                let u = apply(lifted.u(), x());
                let inner = if g1.as_var() == Some(0) {
                    u
                } else {
                    apply(lifted.v(), g1.compose(&u))
                };
                Ok(apply(lift, f1.compose(&inner)))
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{Env, EvalLimits, Evaluator};
    use crate::syntax::print_with;

    fn minimal() -> LiftedBasis {
        LiftedBasis::new(&Signature::minimal()).unwrap()
    }

    #[test]
    fn lifts_of_basic_functions() {
        let add = lift_binary(&parse("x + y").unwrap()).unwrap();
        assert_eq!(add, parse("[L(x) + L(R(x)) | R(R(x))]").unwrap());
        let ev = Evaluator::new(EvalLimits::default());
        let z = crate::arith::pair(&3u32.into(), &5u32.into());
        let id = lift_unary(&x()).unwrap();
        assert_eq!(ev.eval(&id, &Env::new(vec![z.clone()])).unwrap(), z);
        let e = lift_unary(&parse("2^x").unwrap()).unwrap();
        let want = crate::arith::pair(&8u32.into(), &5u32.into());
        assert_eq!(ev.eval(&e, &Env::new(vec![z])).unwrap(), want);
        assert!(lift_unary(&parse("x + y").unwrap()).is_err());
        assert!(lift_binary(&Term::add(x(), Term::var(2))).is_err());
    }

    #[test]
    fn doubling_reproduces_the_walkthrough() {
        let lb = minimal();
        let compiled = compile_to_unary(&parse("x + x").unwrap(), &lb).unwrap();
        let text = print_with(&lb.decode(&compiled), Some(lb.registry()));
        assert_eq!(text, "L(add_pp(u(d(x))))");
    }

    #[test]
    fn identity_compiles_to_identity() {
        let lb = minimal();
        assert_eq!(compile_to_unary(&x(), &lb).unwrap(), x());
    }

    #[test]
    fn compiled_functions_decode() {
        let lb = minimal();
        let ev = Evaluator::with_registry(EvalLimits::default(), lb.registry());
        for src in ["x + x", "2^x", "x % 3", "2^x % x", "x + x + 1", "(x + 5) % (2^x + 2)"] {
            let f = parse(src).unwrap();
            let decoded = lb.decode(&compile_to_unary(&f, &lb).unwrap());
            for a in 0..=30u64 {
                let env = Env::from_u64s(&[a]);
                assert_eq!(ev.eval(&decoded, &env).unwrap(), ev.eval(&f, &env).unwrap(), "{src} at {a}");
            }
        }
    }

    #[test]
    fn constants_follow_the_basis() {
        let ev = Evaluator::new(EvalLimits::default());
        for n in [0u64, 1, 2, 3, 10, 255, 1000] {
            let t = constant_in_basis(&n.into(), &Signature::minimal()).unwrap();
            assert!(t.conforms(&Signature::minimal()));
            for a in [0u64, 1, 9] {
                assert_eq!(ev.eval(&t, &Env::from_u64s(&[a])).unwrap(), BigUint::from(n));
            }
        }
        let no_mod = Signature::new([OpSymbol::Add, OpSymbol::Exp2]);
        assert!(matches!(
            constant_in_basis(&BigUint::from(3u32), &no_mod),
            Err(BasisError::ConstantNotGenerable(_))
        ));
    }

    #[test]
    fn symbols_outside_the_basis_are_rejected() {
        let lb = minimal();
        assert!(matches!(
            compile_to_unary(&parse("x * x").unwrap(), &lb),
            Err(BasisError::UnsupportedSymbol(OpSymbol::Mul))
        ));
        assert!(matches!(compile_to_unary(&parse("x + y").unwrap(), &lb), Err(BasisError::NonUnary(_))));
    }
}
